//! Robot-class domain-specific languages.
//!
//! A DSL names the resource component types a class of robots provides, the
//! action types each component offers, the variable types programs may
//! declare, and which action types must never overlap in time.

mod xml;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::Literal;
use crate::xml::XmlError;

pub use xml::{load_dsl, save_dsl};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("unknown type `{name}` referenced by {referrer}")]
    UnknownTypeReference { name: String, referrer: String },
    #[error("duplicate {kind} `{name}`")]
    DuplicateIdentifier { kind: &'static str, name: String },
    #[error("composite type contains itself: {}", .0.join(" -> "))]
    RecursiveCompositeType(Vec<String>),
    #[error("action `{action}` excludes unknown action type `{target}`")]
    UnresolvedMutexReference { action: String, target: String },
    #[error("unknown action type `{0}`")]
    UnknownActionType(String),
}

/// Built-in scalar variable types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Primitive {
    Int,
    Float,
    Bool,
    String,
}

impl Primitive {
    pub const ALL: [Primitive; 4] = [
        Primitive::Int,
        Primitive::Float,
        Primitive::Bool,
        Primitive::String,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Primitive::Int => "Int",
            Primitive::Float => "Float",
            Primitive::Bool => "Bool",
            Primitive::String => "String",
        }
    }

    /// Whether `text` is a valid literal of this type.
    pub fn accepts(self, text: &str) -> bool {
        match self {
            Primitive::Int => text.trim().parse::<i64>().is_ok(),
            Primitive::Float => text.trim().parse::<f64>().is_ok(),
            Primitive::Bool => matches!(text.trim(), "true" | "false"),
            Primitive::String => true,
        }
    }
}

impl FromStr for Primitive {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Primitive::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or(())
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDef {
    pub name: String,
    pub type_name: String,
}

impl FieldDef {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        FieldDef {
            name: name.into(),
            type_name: type_name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VariableKind {
    Primitive(Primitive),
    Composite(Vec<FieldDef>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableTypeDef {
    pub name: String,
    pub kind: VariableKind,
}

impl VariableTypeDef {
    pub fn composite(name: impl Into<String>, fields: Vec<FieldDef>) -> Self {
        VariableTypeDef {
            name: name.into(),
            kind: VariableKind::Composite(fields),
        }
    }

    fn primitive(p: Primitive) -> Self {
        VariableTypeDef {
            name: p.as_str().to_string(),
            kind: VariableKind::Primitive(p),
        }
    }

    pub fn is_primitive(&self) -> bool {
        matches!(self.kind, VariableKind::Primitive(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterDef {
    pub name: String,
    pub type_name: String,
}

impl ParameterDef {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        ParameterDef {
            name: name.into(),
            type_name: type_name.into(),
        }
    }
}

/// An action type offered by a resource component type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionTypeDef {
    pub identifier: String,
    pub return_type: Option<String>,
    pub parameters: Vec<ParameterDef>,
    /// Action types this one declares it must not overlap with, as written.
    pub mutex_types: BTreeSet<String>,
    /// Owning resource component type; set when the DSL is assembled.
    pub owner: String,
}

impl ActionTypeDef {
    pub fn new(identifier: impl Into<String>) -> Self {
        ActionTypeDef {
            identifier: identifier.into(),
            return_type: None,
            parameters: Vec::new(),
            mutex_types: BTreeSet::new(),
            owner: String::new(),
        }
    }

    pub fn returns(mut self, type_name: impl Into<String>) -> Self {
        self.return_type = Some(type_name.into());
        self
    }

    pub fn param(mut self, name: impl Into<String>, type_name: impl Into<String>) -> Self {
        self.parameters.push(ParameterDef::new(name, type_name));
        self
    }

    pub fn excludes(mut self, action_type: impl Into<String>) -> Self {
        self.mutex_types.insert(action_type.into());
        self
    }

    pub fn parameter(&self, name: &str) -> Option<&ParameterDef> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceComponentTypeDef {
    pub type_name: String,
    pub actions: Vec<ActionTypeDef>,
}

impl ResourceComponentTypeDef {
    pub fn new(type_name: impl Into<String>, actions: Vec<ActionTypeDef>) -> Self {
        ResourceComponentTypeDef {
            type_name: type_name.into(),
            actions,
        }
    }
}

/// Unordered pair of action types that must not run simultaneously.
/// Stored with `first <= second`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MutexPair {
    first: String,
    second: String,
}

impl MutexPair {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Self {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            MutexPair {
                first: a,
                second: b,
            }
        } else {
            MutexPair {
                first: b,
                second: a,
            }
        }
    }

    pub fn first(&self) -> &str {
        &self.first
    }

    pub fn second(&self) -> &str {
        &self.second
    }

    pub fn contains(&self, action_type: &str) -> bool {
        self.first == action_type || self.second == action_type
    }
}

/// Symmetric closure of directed "must not overlap" declarations.
pub fn symmetrize_mutex<'a>(
    declared: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> BTreeSet<MutexPair> {
    declared
        .into_iter()
        .map(|(a, b)| MutexPair::new(a, b))
        .collect()
}

/// A resolved robot-class DSL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobotClassDsl {
    name: String,
    variable_types: Vec<VariableTypeDef>,
    components: Vec<ResourceComponentTypeDef>,
    mutex_relation: BTreeSet<MutexPair>,
    action_index: BTreeMap<String, (usize, usize)>,
    type_index: BTreeMap<String, usize>,
}

impl RobotClassDsl {
    /// Assembles and checks a DSL. `variable_types` lists the declared
    /// composite types; the primitives are always present.
    pub fn new(
        name: impl Into<String>,
        variable_types: Vec<VariableTypeDef>,
        components: Vec<ResourceComponentTypeDef>,
    ) -> Result<Self, DslError> {
        let mut all_types: Vec<VariableTypeDef> = Primitive::ALL
            .into_iter()
            .map(VariableTypeDef::primitive)
            .collect();
        all_types.extend(variable_types.into_iter().filter(|t| !t.is_primitive()));

        let mut type_index = BTreeMap::new();
        for (i, t) in all_types.iter().enumerate() {
            if type_index.insert(t.name.clone(), i).is_some() {
                return Err(DslError::DuplicateIdentifier {
                    kind: "variable type",
                    name: t.name.clone(),
                });
            }
        }
        let resolve = |name: &str, referrer: String| {
            if type_index.contains_key(name) {
                Ok(())
            } else {
                Err(DslError::UnknownTypeReference {
                    name: name.to_string(),
                    referrer,
                })
            }
        };
        for t in &all_types {
            if let VariableKind::Composite(fields) = &t.kind {
                let mut names = BTreeSet::new();
                for f in fields {
                    if !names.insert(f.name.as_str()) {
                        return Err(DslError::DuplicateIdentifier {
                            kind: "field",
                            name: format!("{}.{}", t.name, f.name),
                        });
                    }
                    resolve(&f.type_name, format!("field `{}.{}`", t.name, f.name))?;
                }
            }
        }
        check_type_recursion(&all_types, &type_index)?;

        let mut components = components;
        let mut component_names = BTreeSet::new();
        let mut action_index = BTreeMap::new();
        for (ci, component) in components.iter_mut().enumerate() {
            if !component_names.insert(component.type_name.clone()) {
                return Err(DslError::DuplicateIdentifier {
                    kind: "resource component type",
                    name: component.type_name.clone(),
                });
            }
            for (ai, action) in component.actions.iter_mut().enumerate() {
                action.owner = component.type_name.clone();
                if action_index
                    .insert(action.identifier.clone(), (ci, ai))
                    .is_some()
                {
                    return Err(DslError::DuplicateIdentifier {
                        kind: "action type",
                        name: action.identifier.clone(),
                    });
                }
                let mut params = BTreeSet::new();
                for p in &action.parameters {
                    if !params.insert(p.name.as_str()) {
                        return Err(DslError::DuplicateIdentifier {
                            kind: "parameter",
                            name: format!("{}.{}", action.identifier, p.name),
                        });
                    }
                    resolve(
                        &p.type_name,
                        format!("parameter `{}.{}`", action.identifier, p.name),
                    )?;
                }
                if let Some(ret) = &action.return_type {
                    resolve(ret, format!("return type of `{}`", action.identifier))?;
                }
            }
        }

        let mut declared = Vec::new();
        for component in &components {
            for action in &component.actions {
                for target in &action.mutex_types {
                    if !action_index.contains_key(target) {
                        return Err(DslError::UnresolvedMutexReference {
                            action: action.identifier.clone(),
                            target: target.clone(),
                        });
                    }
                    declared.push((action.identifier.as_str(), target.as_str()));
                }
            }
        }
        let mutex_relation = symmetrize_mutex(declared);

        Ok(RobotClassDsl {
            name: name.into(),
            variable_types: all_types,
            components,
            mutex_relation,
            action_index,
            type_index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// All variable types, primitives first, then declared composites.
    pub fn variable_types(&self) -> &[VariableTypeDef] {
        &self.variable_types
    }

    pub fn components(&self) -> &[ResourceComponentTypeDef] {
        &self.components
    }

    pub fn mutex_relation(&self) -> &BTreeSet<MutexPair> {
        &self.mutex_relation
    }

    pub fn variable_type(&self, name: &str) -> Option<&VariableTypeDef> {
        self.type_index.get(name).map(|&i| &self.variable_types[i])
    }

    pub fn component(&self, type_name: &str) -> Option<&ResourceComponentTypeDef> {
        self.components.iter().find(|c| c.type_name == type_name)
    }

    pub fn lookup_action(&self, identifier: &str) -> Result<&ActionTypeDef, DslError> {
        self.action_index
            .get(identifier)
            .map(|&(c, a)| &self.components[c].actions[a])
            .ok_or_else(|| DslError::UnknownActionType(identifier.to_string()))
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionTypeDef> {
        self.components.iter().flat_map(|c| c.actions.iter())
    }

    pub fn are_mutex(&self, a: &str, b: &str) -> bool {
        self.mutex_relation.contains(&MutexPair::new(a, b))
    }

    /// Action types that must not overlap with `action_type`.
    pub fn mutex_partners<'a>(
        &'a self,
        action_type: &'a str,
    ) -> impl Iterator<Item = &'a str> + 'a {
        self.mutex_relation.iter().filter_map(move |p| {
            if p.first == action_type {
                Some(p.second.as_str())
            } else if p.second == action_type {
                Some(p.first.as_str())
            } else {
                None
            }
        })
    }

    /// Whether `literal` is a valid value of the type named `type_name`.
    /// Composite literals must give every field exactly once.
    pub fn literal_conforms(&self, type_name: &str, literal: &Literal) -> bool {
        let Some(def) = self.variable_type(type_name) else {
            return false;
        };
        match (&def.kind, literal) {
            (VariableKind::Primitive(p), Literal::Scalar(text)) => p.accepts(text),
            (VariableKind::Composite(fields), Literal::Composite(values)) => {
                if fields.len() != values.len() {
                    return false;
                }
                let mut seen = BTreeSet::new();
                values.iter().all(|(name, value)| {
                    seen.insert(name.as_str())
                        && fields
                            .iter()
                            .find(|f| &f.name == name)
                            .is_some_and(|f| self.literal_conforms(&f.type_name, value))
                })
            }
            _ => false,
        }
    }
}

fn check_type_recursion(
    types: &[VariableTypeDef],
    index: &BTreeMap<String, usize>,
) -> Result<(), DslError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Unvisited,
        Active,
        Done,
    }

    fn visit(
        i: usize,
        types: &[VariableTypeDef],
        index: &BTreeMap<String, usize>,
        marks: &mut [Mark],
        stack: &mut Vec<usize>,
    ) -> Result<(), Vec<String>> {
        marks[i] = Mark::Active;
        stack.push(i);
        if let VariableKind::Composite(fields) = &types[i].kind {
            for f in fields {
                let j = index[&f.type_name];
                match marks[j] {
                    Mark::Active => {
                        let from = stack.iter().position(|&k| k == j).unwrap_or(0);
                        let mut cycle: Vec<String> = stack[from..]
                            .iter()
                            .map(|&k| types[k].name.clone())
                            .collect();
                        cycle.push(types[j].name.clone());
                        return Err(cycle);
                    }
                    Mark::Unvisited => visit(j, types, index, marks, stack)?,
                    Mark::Done => {}
                }
            }
        }
        stack.pop();
        marks[i] = Mark::Done;
        Ok(())
    }

    let mut marks = vec![Mark::Unvisited; types.len()];
    for i in 0..types.len() {
        if marks[i] == Mark::Unvisited {
            visit(i, types, index, &mut marks, &mut Vec::new())
                .map_err(DslError::RecursiveCompositeType)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector3() -> VariableTypeDef {
        VariableTypeDef::composite(
            "Vector3",
            vec![
                FieldDef::new("x", "Float"),
                FieldDef::new("y", "Float"),
                FieldDef::new("z", "Float"),
            ],
        )
    }

    fn vacuum() -> RobotClassDsl {
        RobotClassDsl::new(
            "Vacuum",
            vec![],
            vec![
                ResourceComponentTypeDef::new(
                    "DriveBase",
                    vec![
                        ActionTypeDef::new("MoveFwd").excludes("Discharge"),
                        ActionTypeDef::new("Stop"),
                    ],
                ),
                ResourceComponentTypeDef::new(
                    "CleaningDevice",
                    vec![ActionTypeDef::new("Discharge")],
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn symmetrize_examples() {
        assert_eq!(
            symmetrize_mutex([("MoveManipulator", "MoveTo")]),
            BTreeSet::from([MutexPair::new("MoveManipulator", "MoveTo")])
        );
        assert!(symmetrize_mutex([]).is_empty());
        assert_eq!(
            symmetrize_mutex([("A", "B"), ("B", "A")]),
            BTreeSet::from([MutexPair::new("B", "A")])
        );
    }

    #[test]
    fn lookup_reports_owner() {
        let dsl = vacuum();
        assert_eq!(
            dsl.lookup_action("Discharge").unwrap().owner,
            "CleaningDevice"
        );
        assert_eq!(
            dsl.lookup_action("Grasp"),
            Err(DslError::UnknownActionType("Grasp".into()))
        );
        assert!(dsl.are_mutex("Discharge", "MoveFwd"));
        assert_eq!(
            dsl.mutex_partners("Discharge").collect::<Vec<_>>(),
            vec!["MoveFwd"]
        );
    }

    #[test]
    fn duplicate_action_across_components() {
        let err = RobotClassDsl::new(
            "D",
            vec![],
            vec![
                ResourceComponentTypeDef::new("A", vec![ActionTypeDef::new("Go")]),
                ResourceComponentTypeDef::new("B", vec![ActionTypeDef::new("Go")]),
            ],
        )
        .unwrap_err();
        assert_eq!(
            err,
            DslError::DuplicateIdentifier {
                kind: "action type",
                name: "Go".into()
            }
        );
    }

    #[test]
    fn primitive_name_cannot_be_redeclared() {
        let err = RobotClassDsl::new("D", vec![VariableTypeDef::composite("Int", vec![])], vec![])
            .unwrap_err();
        assert!(matches!(err, DslError::DuplicateIdentifier { .. }));
    }

    #[test]
    fn recursive_composite_rejected() {
        let err = RobotClassDsl::new(
            "D",
            vec![
                VariableTypeDef::composite("A", vec![FieldDef::new("b", "B")]),
                VariableTypeDef::composite("B", vec![FieldDef::new("a", "A")]),
            ],
            vec![],
        )
        .unwrap_err();
        assert_eq!(
            err,
            DslError::RecursiveCompositeType(vec!["A".into(), "B".into(), "A".into()])
        );
        let err = RobotClassDsl::new(
            "D",
            vec![VariableTypeDef::composite(
                "Node",
                vec![FieldDef::new("next", "Node")],
            )],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, DslError::RecursiveCompositeType(_)));
    }

    #[test]
    fn forward_type_references_allowed() {
        let dsl = RobotClassDsl::new(
            "D",
            vec![
                VariableTypeDef::composite("Pose", vec![FieldDef::new("p", "Vector3")]),
                vector3(),
            ],
            vec![],
        );
        assert!(dsl.is_ok());
    }

    #[test]
    fn unknown_references() {
        let err = RobotClassDsl::new(
            "D",
            vec![],
            vec![ResourceComponentTypeDef::new(
                "M",
                vec![ActionTypeDef::new("Go").param("to", "Vector3")],
            )],
        )
        .unwrap_err();
        assert!(matches!(err, DslError::UnknownTypeReference { .. }));
        let err = RobotClassDsl::new(
            "D",
            vec![],
            vec![ResourceComponentTypeDef::new(
                "M",
                vec![ActionTypeDef::new("Go").excludes("Fly")],
            )],
        )
        .unwrap_err();
        assert_eq!(
            err,
            DslError::UnresolvedMutexReference {
                action: "Go".into(),
                target: "Fly".into()
            }
        );
    }

    #[test]
    fn literal_conformance() {
        let dsl = RobotClassDsl::new("D", vec![vector3()], vec![]).unwrap();
        let v = Literal::composite([
            ("x", Literal::scalar("1")),
            ("y", Literal::scalar("2.5")),
            ("z", Literal::scalar("-3e2")),
        ]);
        assert!(dsl.literal_conforms("Vector3", &v));
        assert!(!dsl.literal_conforms("Int", &v));
        assert!(!dsl.literal_conforms("Vector3", &Literal::scalar("1")));
        let short = Literal::composite([("x", Literal::scalar("1"))]);
        assert!(!dsl.literal_conforms("Vector3", &short));
        assert!(dsl.literal_conforms("Int", &Literal::scalar("30")));
        assert!(!dsl.literal_conforms("Int", &Literal::scalar("3.5")));
        assert!(dsl.literal_conforms("Bool", &Literal::scalar("true")));
        assert!(dsl.literal_conforms("String", &Literal::scalar("anything")));
    }
}
