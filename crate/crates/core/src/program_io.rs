//! Robot-independent XML serialization of programs and DOT export of their
//! dependency graphs.
//!
//! ```xml
//! <Program name="GraspDemo" robotClass="ServiceRobot">
//!   <Resources>
//!     <Resource name="arm" type="Manipulator"/>
//!   </Resources>
//!   <Variables>
//!     <Variable name="speed" type="Int" init="30"/>
//!     <Variable name="goal" type="Vector3">
//!       <Field name="x" value="1.0"/>
//!       ...
//!     </Variable>
//!   </Variables>
//!   <Actions>
//!     <ActionInstance name="MoveMani" type="MoveManipulator" resource="arm">
//!       <Arg param="targetPose" variable="targetPose"/>
//!       <Arg param="speed" value="30"/>
//!       <ReturnTo variable="status"/>
//!     </ActionInstance>
//!   </Actions>
//!   <Constraints>
//!     <After action="MoveMani" predecessor="MoveBase"/>
//!   </Constraints>
//! </Program>
//! ```
//!
//! Composite literals are written as nested `<Field>` elements in place of a
//! `value`/`init` attribute.

use std::fmt::Write as _;

use roxmltree::Node;
use thiserror::Error;

use crate::dsl::RobotClassDsl;
use crate::model::{
    ActionInstance, Binding, Literal, ModelError, Program, ResourceInstance, VariableDecl,
};
use crate::xml::{self, XmlError, XmlWriter};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramIoError {
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("program targets robot class `{found}` but the DSL is `{expected}`")]
    RobotClassMismatch { expected: String, found: String },
    #[error("action `{action}` uses unknown action type `{action_type}`")]
    UnknownActionType { action: String, action_type: String },
    #[error("resource `{resource}` has unknown component type `{component_type}`")]
    UnknownResourceType {
        resource: String,
        component_type: String,
    },
    #[error("variable `{variable}` has unknown type `{type_name}`")]
    UnknownVariableType { variable: String, type_name: String },
    #[error("action `{action}` of type `{action_type}` cannot run on resource `{resource}` of type `{component_type}`")]
    ComponentMismatch {
        action: String,
        action_type: String,
        resource: String,
        component_type: String,
    },
    #[error("action `{action}` binds undeclared parameter `{param}`")]
    UnknownParameter { action: String, param: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Surface form of a program document, before resolution against a DSL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramDocument {
    pub name: String,
    pub robot_class: String,
    pub resources: Vec<ResourceInstance>,
    pub variables: Vec<VariableDecl>,
    pub actions: Vec<ActionInstance>,
}

impl ProgramDocument {
    pub fn parse(source: &str) -> Result<Self, ProgramIoError> {
        let doc = xml::parse(source)?;
        let root = doc.root_element();
        xml::expect_tag(root, "Program")?;
        let mut out = ProgramDocument {
            name: xml::attr(root, "name")?.to_string(),
            robot_class: xml::attr(root, "robotClass")?.to_string(),
            resources: Vec::new(),
            variables: Vec::new(),
            actions: Vec::new(),
        };
        let mut constraints = Vec::new();
        for section in xml::elements(root)? {
            let children = xml::elements(section)?;
            match section.tag_name().name() {
                "Resources" => {
                    for r in children {
                        xml::expect_tag(r, "Resource")?;
                        out.resources.push(ResourceInstance::new(
                            xml::attr(r, "name")?,
                            xml::attr(r, "type")?,
                        ));
                    }
                }
                "Variables" => {
                    for v in children {
                        xml::expect_tag(v, "Variable")?;
                        let mut decl =
                            VariableDecl::new(xml::attr(v, "name")?, xml::attr(v, "type")?);
                        decl.init = literal(v, "init")?;
                        out.variables.push(decl);
                    }
                }
                "Actions" => {
                    for a in children {
                        xml::expect_tag(a, "ActionInstance")?;
                        out.actions.push(action(a)?);
                    }
                }
                "Constraints" => {
                    for c in children {
                        xml::expect_tag(c, "After")?;
                        constraints.push((
                            xml::attr(c, "action")?.to_string(),
                            xml::attr(c, "predecessor")?.to_string(),
                            c,
                        ));
                    }
                }
                _ => return Err(xml::unexpected(section, "Program").into()),
            }
        }
        for (owner, pred, node) in constraints {
            let slot = out
                .actions
                .iter_mut()
                .find(|a| a.name() == owner)
                .ok_or_else(|| ModelError::UnresolvedReference {
                    kind: "action",
                    name: owner.clone(),
                    referrer: format!("constraint at line {}", xml::line(node)),
                })?;
            *slot = slot.clone().after(pred)?;
        }
        Ok(out)
    }

    /// Builds the program without consulting a DSL. Argument order follows
    /// the document.
    pub fn into_program_unchecked(self) -> Result<Program, ProgramIoError> {
        let mut b = Program::builder(self.name, self.robot_class);
        for r in self.resources {
            b = b.resource(r);
        }
        for v in self.variables {
            b = b.variable(v);
        }
        for a in self.actions {
            b = b.action(a);
        }
        Ok(b.build()?)
    }

    /// Resolves every type and instance reference against `dsl`, puts
    /// arguments in parameter declaration order and checks acyclicity.
    pub fn resolve(self, dsl: &RobotClassDsl) -> Result<Program, ProgramIoError> {
        if self.robot_class != dsl.name() {
            return Err(ProgramIoError::RobotClassMismatch {
                expected: dsl.name().to_string(),
                found: self.robot_class,
            });
        }
        for r in &self.resources {
            if dsl.component(&r.component_type).is_none() {
                return Err(ProgramIoError::UnknownResourceType {
                    resource: r.name.clone(),
                    component_type: r.component_type.clone(),
                });
            }
        }
        for v in &self.variables {
            if dsl.variable_type(&v.type_name).is_none() {
                return Err(ProgramIoError::UnknownVariableType {
                    variable: v.name.clone(),
                    type_name: v.type_name.clone(),
                });
            }
        }
        for a in &self.actions {
            let def = dsl.lookup_action(a.action_type()).map_err(|_| {
                ProgramIoError::UnknownActionType {
                    action: a.name().to_string(),
                    action_type: a.action_type().to_string(),
                }
            })?;
            if let Some(r) = self.resources.iter().find(|r| r.name == a.resource()) {
                if r.component_type != def.owner {
                    return Err(ProgramIoError::ComponentMismatch {
                        action: a.name().to_string(),
                        action_type: a.action_type().to_string(),
                        resource: r.name.clone(),
                        component_type: r.component_type.clone(),
                    });
                }
            }
            if let Some(arg) = a
                .args()
                .iter()
                .find(|arg| def.parameter(&arg.param).is_none())
            {
                return Err(ProgramIoError::UnknownParameter {
                    action: a.name().to_string(),
                    param: arg.param.clone(),
                });
            }
        }

        let mut program = self.into_program_unchecked()?;
        for a in program.actions_mut() {
            let def = dsl
                .lookup_action(a.action_type())
                .expect("action types resolved above");
            a.sort_args_by(def.parameters.iter().map(|p| p.name.as_str()));
        }
        program.dependency_graph()?;
        Ok(program)
    }
}

fn action(node: Node<'_, '_>) -> Result<ActionInstance, ProgramIoError> {
    let mut a = ActionInstance::new(
        xml::attr(node, "name")?,
        xml::attr(node, "type")?,
        xml::attr(node, "resource")?,
    );
    for child in xml::elements(node)? {
        match child.tag_name().name() {
            "Arg" => {
                let param = xml::attr(child, "param")?;
                let binding = match (child.attribute("variable"), literal(child, "value")?) {
                    (Some(v), None) => Binding::Variable(v.to_string()),
                    (None, Some(lit)) => Binding::Literal(lit),
                    (Some(_), Some(_)) => {
                        return Err(xml::malformed(
                            child,
                            "<Arg> binds both a variable and a value",
                        )
                        .into())
                    }
                    (None, None) => {
                        return Err(xml::malformed(
                            child,
                            "<Arg> needs a `variable` or `value` attribute",
                        )
                        .into())
                    }
                };
                a = a.with_arg(param, binding);
            }
            "ReturnTo" => {
                if a.return_binding().is_some() {
                    return Err(xml::malformed(child, "more than one <ReturnTo>").into());
                }
                a = a.with_return(xml::attr(child, "variable")?);
            }
            _ => return Err(xml::unexpected(child, "ActionInstance").into()),
        }
    }
    Ok(a)
}

/// Reads a literal given either as attribute `attr` or as nested `<Field>`
/// elements.
fn literal(node: Node<'_, '_>, attr: &str) -> Result<Option<Literal>, XmlError> {
    let fields = xml::elements(node)?;
    if let Some(other) = fields.iter().find(|c| c.tag_name().name() != "Field") {
        return Err(xml::unexpected(*other, node.tag_name().name()));
    }
    match (node.attribute(attr), fields.is_empty()) {
        (Some(text), true) => Ok(Some(Literal::Scalar(text.to_string()))),
        (None, true) => Ok(None),
        (Some(_), false) => Err(xml::malformed(
            node,
            format!("`{attr}` given together with <Field> elements"),
        )),
        (None, false) => {
            let mut values = Vec::new();
            for f in fields {
                let name = xml::attr(f, "name")?;
                let value = literal(f, "value")?
                    .ok_or_else(|| xml::malformed(f, format!("field `{name}` has no value")))?;
                values.push((name.to_string(), value));
            }
            Ok(Some(Literal::Composite(values)))
        }
    }
}

/// Parses a program document and resolves it against `dsl`.
pub fn load_program(source: &str, dsl: &RobotClassDsl) -> Result<Program, ProgramIoError> {
    ProgramDocument::parse(source)?.resolve(dsl)
}

/// Canonical document: sections in fixed order, entries sorted by name,
/// constraints sorted by (action, predecessor).
pub fn save_program(program: &Program) -> String {
    let mut w = XmlWriter::new();
    w.open(
        "Program",
        &[
            ("name", program.name()),
            ("robotClass", program.robot_class()),
        ],
    );

    section(&mut w, "Resources", program.resources().len(), |w| {
        for r in program.resources() {
            w.empty(
                "Resource",
                &[("name", &r.name), ("type", &r.component_type)],
            );
        }
    });

    section(&mut w, "Variables", program.variables().len(), |w| {
        for v in program.variables() {
            let attrs = [("name", v.name.as_str()), ("type", v.type_name.as_str())];
            write_literal(w, "Variable", &attrs, "init", v.init.as_ref());
        }
    });

    section(&mut w, "Actions", program.actions().len(), |w| {
        for a in program.actions() {
            let attrs = [
                ("name", a.name()),
                ("type", a.action_type()),
                ("resource", a.resource()),
            ];
            if a.args().is_empty() && a.return_binding().is_none() {
                w.empty("ActionInstance", &attrs);
                continue;
            }
            w.open("ActionInstance", &attrs);
            for arg in a.args() {
                match &arg.binding {
                    Binding::Variable(v) => {
                        w.empty("Arg", &[("param", &arg.param), ("variable", v)]);
                    }
                    Binding::Literal(lit) => {
                        write_literal(w, "Arg", &[("param", &arg.param)], "value", Some(lit));
                    }
                }
            }
            if let Some(ret) = a.return_binding() {
                w.empty("ReturnTo", &[("variable", ret)]);
            }
            w.close("ActionInstance");
        }
    });

    let edges: Vec<(&str, &str)> = program
        .actions()
        .flat_map(|a| a.predecessors().map(move |p| (a.name(), p)))
        .collect();
    section(&mut w, "Constraints", edges.len(), |w| {
        for (action, pred) in &edges {
            w.empty("After", &[("action", action), ("predecessor", pred)]);
        }
    });

    w.close("Program");
    w.finish()
}

fn section(w: &mut XmlWriter, tag: &str, len: usize, body: impl FnOnce(&mut XmlWriter)) {
    if len == 0 {
        w.empty(tag, &[]);
    } else {
        w.open(tag, &[]);
        body(w);
        w.close(tag);
    }
}

fn write_literal(
    w: &mut XmlWriter,
    tag: &str,
    attrs: &[(&str, &str)],
    value_attr: &str,
    lit: Option<&Literal>,
) {
    match lit {
        None => w.empty(tag, attrs),
        Some(Literal::Scalar(text)) => {
            let mut all = attrs.to_vec();
            all.push((value_attr, text));
            w.empty(tag, &all);
        }
        Some(Literal::Composite(fields)) => {
            w.open(tag, attrs);
            for (name, value) in fields {
                write_literal(w, "Field", &[("name", name)], "value", Some(value));
            }
            w.close(tag);
        }
    }
}

/// Renders the dependency graph as a DOT digraph: one node per action
/// labelled `name: type @resource`, one edge per precedence constraint.
pub fn export_dot(program: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", dot_id(program.name()));
    for a in program.actions() {
        let label = format!("{}: {} @{}", a.name(), a.action_type(), a.resource());
        let _ = writeln!(out, "  {} [label={}];", dot_id(a.name()), dot_quote(&label));
    }
    for a in program.actions() {
        for pred in a.predecessors() {
            let _ = writeln!(out, "  {} -> {};", dot_id(pred), dot_id(a.name()));
        }
    }
    out.push_str("}\n");
    out
}

fn dot_id(name: &str) -> String {
    let mut chars = name.chars();
    let plain = chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain
        && !matches!(
            name.to_ascii_lowercase().as_str(),
            "graph" | "digraph" | "node" | "edge" | "subgraph" | "strict"
        )
    {
        name.to_string()
    } else {
        dot_quote(name)
    }
}

fn dot_quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
