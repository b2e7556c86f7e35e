//! XML form of robot-class DSLs.
//!
//! ```xml
//! <RobotClassDSL name="ServiceRobot">
//!   <VariableTypes>
//!     <VariableType name="Vector3">
//!       <Field name="x" type="Float"/>
//!     </VariableType>
//!   </VariableTypes>
//!   <ResourceComponent type="Manipulator">
//!     <Action returnType="String" actionIdentifier="MoveManipulator">
//!       <ParameterList>
//!         <Parameter type="Vector3" name="targetPose"/>
//!       </ParameterList>
//!       <NotAllowedSimultaneousActionTypes>
//!         <NotAllowedSimultaneousAction type="MoveTo"/>
//!       </NotAllowedSimultaneousActionTypes>
//!     </Action>
//!   </ResourceComponent>
//! </RobotClassDSL>
//! ```
//!
//! A missing `returnType` or the value `Void` means the action returns nothing.

use roxmltree::Node;

use super::{
    ActionTypeDef, DslError, FieldDef, ParameterDef, ResourceComponentTypeDef, RobotClassDsl,
    VariableKind, VariableTypeDef,
};
use crate::xml::{self, XmlWriter};

const VOID: &str = "Void";

pub fn load_dsl(source: &str) -> Result<RobotClassDsl, DslError> {
    let doc = xml::parse(source)?;
    let root = doc.root_element();
    xml::expect_tag(root, "RobotClassDSL")?;
    let name = xml::attr(root, "name")?;

    let mut types = Vec::new();
    let mut components = Vec::new();
    for child in xml::elements(root)? {
        match child.tag_name().name() {
            "VariableTypes" => {
                for t in xml::elements(child)? {
                    types.push(variable_type(t)?);
                }
            }
            "ResourceComponent" => components.push(component(child)?),
            _ => return Err(xml::unexpected(child, "RobotClassDSL").into()),
        }
    }
    RobotClassDsl::new(name, types, components)
}

fn variable_type(node: Node<'_, '_>) -> Result<VariableTypeDef, DslError> {
    xml::expect_tag(node, "VariableType")?;
    let mut fields = Vec::new();
    for f in xml::elements(node)? {
        xml::expect_tag(f, "Field")?;
        fields.push(FieldDef::new(xml::attr(f, "name")?, xml::attr(f, "type")?));
    }
    Ok(VariableTypeDef::composite(xml::attr(node, "name")?, fields))
}

fn component(node: Node<'_, '_>) -> Result<ResourceComponentTypeDef, DslError> {
    let mut actions = Vec::new();
    for a in xml::elements(node)? {
        xml::expect_tag(a, "Action")?;
        actions.push(action(a)?);
    }
    Ok(ResourceComponentTypeDef::new(
        xml::attr(node, "type")?,
        actions,
    ))
}

fn action(node: Node<'_, '_>) -> Result<ActionTypeDef, DslError> {
    let mut def = ActionTypeDef::new(xml::attr(node, "actionIdentifier")?);
    def.return_type = node
        .attribute("returnType")
        .filter(|t| *t != VOID)
        .map(str::to_string);
    for section in xml::elements(node)? {
        match section.tag_name().name() {
            "ParameterList" => {
                for p in xml::elements(section)? {
                    xml::expect_tag(p, "Parameter")?;
                    def.parameters.push(ParameterDef::new(
                        xml::attr(p, "name")?,
                        xml::attr(p, "type")?,
                    ));
                }
            }
            "NotAllowedSimultaneousActionTypes" => {
                for m in xml::elements(section)? {
                    xml::expect_tag(m, "NotAllowedSimultaneousAction")?;
                    def.mutex_types.insert(xml::attr(m, "type")?.to_string());
                }
            }
            _ => return Err(xml::unexpected(section, "Action").into()),
        }
    }
    Ok(def)
}

/// Writes `dsl` back in the element layout accepted by [`load_dsl`].
pub fn save_dsl(dsl: &RobotClassDsl) -> String {
    let mut w = XmlWriter::new();
    w.open("RobotClassDSL", &[("name", dsl.name())]);

    let composites: Vec<_> = dsl
        .variable_types()
        .iter()
        .filter_map(|t| match &t.kind {
            VariableKind::Composite(fields) => Some((t.name.as_str(), fields)),
            VariableKind::Primitive(_) => None,
        })
        .collect();
    if !composites.is_empty() {
        w.open("VariableTypes", &[]);
        for (name, fields) in composites {
            w.open("VariableType", &[("name", name)]);
            for f in fields {
                w.empty("Field", &[("name", &f.name), ("type", &f.type_name)]);
            }
            w.close("VariableType");
        }
        w.close("VariableTypes");
    }

    for component in dsl.components() {
        w.open("ResourceComponent", &[("type", &component.type_name)]);
        for action in &component.actions {
            let mut attrs = Vec::new();
            if let Some(ret) = &action.return_type {
                attrs.push(("returnType", ret.as_str()));
            }
            attrs.push(("actionIdentifier", action.identifier.as_str()));
            if action.parameters.is_empty() && action.mutex_types.is_empty() {
                w.empty("Action", &attrs);
                continue;
            }
            w.open("Action", &attrs);
            if !action.parameters.is_empty() {
                w.open("ParameterList", &[]);
                for p in &action.parameters {
                    w.empty("Parameter", &[("type", &p.type_name), ("name", &p.name)]);
                }
                w.close("ParameterList");
            }
            if !action.mutex_types.is_empty() {
                w.open("NotAllowedSimultaneousActionTypes", &[]);
                for m in &action.mutex_types {
                    w.empty("NotAllowedSimultaneousAction", &[("type", m)]);
                }
                w.close("NotAllowedSimultaneousActionTypes");
            }
            w.close("Action");
        }
        w.close("ResourceComponent");
    }
    w.close("RobotClassDSL");
    w.finish()
}
