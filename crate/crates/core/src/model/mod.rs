//! Program meta-model: resource instances, global variables and action
//! instances linked by precedence constraints.
//!
//! A [`Program`] is a task made of named actions. Each action runs on one
//! resource instance, reads and writes global variables, and may only start
//! once all of its predecessors have finished. Graph queries over the
//! precedence relation live in [`graph`].

mod duration;
pub mod graph;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use duration::DurationMap;
pub use graph::DependencyGraph;

/// Simulated time and durations, in whole ticks.
pub type Ticks = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("action `{0}` cannot be its own predecessor")]
    SelfLoop(String),
    #[error("dependency graph contains a cycle: {}", .0.join(" -> "))]
    CyclicGraph(Vec<String>),
    #[error("action `{0}` cannot be compared with itself")]
    SameAction(String),
    #[error("duration for `{0}` must be at least one tick")]
    NonPositiveDuration(String),
    #[error("duplicate {kind} `{name}`")]
    DuplicateIdentifier { kind: &'static str, name: String },
    #[error("{kind} `{name}` referenced by `{referrer}` is not declared")]
    UnresolvedReference {
        kind: &'static str,
        name: String,
        referrer: String,
    },
    #[error("unknown constraint operator `{0}`")]
    UnknownOperator(String),
}

/// Temporal operator of an execution constraint. Only ordering is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintOperator {
    /// The predecessor must finish before the owning action starts.
    Precedes,
}

impl ConstraintOperator {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintOperator::Precedes => "Precedes",
        }
    }
}

impl FromStr for ConstraintOperator {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Precedes" => Ok(ConstraintOperator::Precedes),
            other => Err(ModelError::UnknownOperator(other.to_string())),
        }
    }
}

/// One execution constraint owned by an action: `operator` applied to `predecessor`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintEdge {
    predecessor: String,
    operator: ConstraintOperator,
}

impl ConstraintEdge {
    pub fn precedes(predecessor: impl Into<String>) -> Self {
        ConstraintEdge {
            predecessor: predecessor.into(),
            operator: ConstraintOperator::Precedes,
        }
    }

    pub fn predecessor(&self) -> &str {
        &self.predecessor
    }

    pub fn operator(&self) -> ConstraintOperator {
        self.operator
    }
}

/// A literal value as written in a program document.
///
/// Scalars keep their source text; they are checked against the expected
/// type by the validator rather than at load time, so that type clashes
/// surface as findings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Scalar(String),
    Composite(Vec<(String, Literal)>),
}

impl Literal {
    pub fn scalar(text: impl Into<String>) -> Self {
        Literal::Scalar(text.into())
    }

    pub fn composite<N: Into<String>>(fields: impl IntoIterator<Item = (N, Literal)>) -> Self {
        Literal::Composite(fields.into_iter().map(|(n, v)| (n.into(), v)).collect())
    }

    pub fn field(&self, name: &str) -> Option<&Literal> {
        match self {
            Literal::Scalar(_) => None,
            Literal::Composite(fields) => fields.iter().find(|(n, _)| n == name).map(|(_, v)| v),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Scalar(text) => f.write_str(text),
            Literal::Composite(fields) => {
                f.write_str("{")?;
                for (i, (name, value)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{name}: {value}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// What an action argument is bound to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Variable(String),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgBinding {
    pub param: String,
    pub binding: Binding,
}

/// An instance of a DSL action type placed in a program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionInstance {
    name: String,
    action_type: String,
    resource: String,
    args: Vec<ArgBinding>,
    return_binding: Option<String>,
    constraints: BTreeSet<ConstraintEdge>,
}

impl ActionInstance {
    pub fn new(
        name: impl Into<String>,
        action_type: impl Into<String>,
        resource: impl Into<String>,
    ) -> Self {
        ActionInstance {
            name: name.into(),
            action_type: action_type.into(),
            resource: resource.into(),
            args: Vec::new(),
            return_binding: None,
            constraints: BTreeSet::new(),
        }
    }

    pub fn with_arg(mut self, param: impl Into<String>, binding: Binding) -> Self {
        self.args.push(ArgBinding {
            param: param.into(),
            binding,
        });
        self
    }

    pub fn with_variable_arg(self, param: impl Into<String>, variable: impl Into<String>) -> Self {
        self.with_arg(param, Binding::Variable(variable.into()))
    }

    pub fn with_literal_arg(self, param: impl Into<String>, literal: Literal) -> Self {
        self.with_arg(param, Binding::Literal(literal))
    }

    pub fn with_return(mut self, variable: impl Into<String>) -> Self {
        self.return_binding = Some(variable.into());
        self
    }

    /// Adds a precedence constraint on `predecessor`. Self-loops are rejected.
    pub fn after(mut self, predecessor: impl Into<String>) -> Result<Self, ModelError> {
        let predecessor = predecessor.into();
        if predecessor == self.name {
            return Err(ModelError::SelfLoop(predecessor));
        }
        self.constraints
            .insert(ConstraintEdge::precedes(predecessor));
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn action_type(&self) -> &str {
        &self.action_type
    }

    pub fn resource(&self) -> &str {
        &self.resource
    }

    pub fn args(&self) -> &[ArgBinding] {
        &self.args
    }

    pub fn arg(&self, param: &str) -> Option<&Binding> {
        self.args
            .iter()
            .find(|a| a.param == param)
            .map(|a| &a.binding)
    }

    pub fn return_binding(&self) -> Option<&str> {
        self.return_binding.as_deref()
    }

    pub fn constraints(&self) -> &BTreeSet<ConstraintEdge> {
        &self.constraints
    }

    pub fn predecessors(&self) -> impl Iterator<Item = &str> {
        self.constraints.iter().map(ConstraintEdge::predecessor)
    }

    /// Variables read through argument bindings, in argument order.
    pub fn reads(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|a| match &a.binding {
            Binding::Variable(v) => Some(v.as_str()),
            Binding::Literal(_) => None,
        })
    }

    /// The variable written by this action's return value, if any.
    pub fn writes(&self) -> Option<&str> {
        self.return_binding()
    }

    /// Reorders argument bindings by the position of their parameter in
    /// `declared`. Unknown parameters keep their relative order at the end.
    pub(crate) fn sort_args_by<'a>(&mut self, declared: impl Iterator<Item = &'a str>) {
        let rank: BTreeMap<&str, usize> = declared.enumerate().map(|(i, p)| (p, i)).collect();
        self.args
            .sort_by_key(|a| rank.get(a.param.as_str()).copied().unwrap_or(usize::MAX));
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceInstance {
    pub name: String,
    pub component_type: String,
}

impl ResourceInstance {
    pub fn new(name: impl Into<String>, component_type: impl Into<String>) -> Self {
        ResourceInstance {
            name: name.into(),
            component_type: component_type.into(),
        }
    }
}

/// A global variable of the program's data space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDecl {
    pub name: String,
    pub type_name: String,
    pub init: Option<Literal>,
}

impl VariableDecl {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        VariableDecl {
            name: name.into(),
            type_name: type_name.into(),
            init: None,
        }
    }

    pub fn with_init(mut self, init: Literal) -> Self {
        self.init = Some(init);
        self
    }
}

/// A task: resources, global variables and the action instances to run.
///
/// Names are unique within each namespace and every resource and
/// predecessor reference resolves. Acyclicity is not enforced here; it is
/// checked when a [`DependencyGraph`] is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    name: String,
    robot_class: String,
    resources: BTreeMap<String, ResourceInstance>,
    variables: BTreeMap<String, VariableDecl>,
    actions: BTreeMap<String, ActionInstance>,
}

impl Program {
    pub fn builder(name: impl Into<String>, robot_class: impl Into<String>) -> ProgramBuilder {
        ProgramBuilder {
            name: name.into(),
            robot_class: robot_class.into(),
            resources: Vec::new(),
            variables: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn robot_class(&self) -> &str {
        &self.robot_class
    }

    /// Resources ordered by name.
    pub fn resources(&self) -> impl ExactSizeIterator<Item = &ResourceInstance> {
        self.resources.values()
    }

    /// Variables ordered by name.
    pub fn variables(&self) -> impl ExactSizeIterator<Item = &VariableDecl> {
        self.variables.values()
    }

    /// Actions ordered by name.
    pub fn actions(&self) -> impl ExactSizeIterator<Item = &ActionInstance> {
        self.actions.values()
    }

    pub fn resource(&self, name: &str) -> Option<&ResourceInstance> {
        self.resources.get(name)
    }

    pub fn variable(&self, name: &str) -> Option<&VariableDecl> {
        self.variables.get(name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionInstance> {
        self.actions.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Actions that list `action` as a direct predecessor.
    pub fn successors(&self, action: &str) -> Result<BTreeSet<&str>, ModelError> {
        if !self.actions.contains_key(action) {
            return Err(ModelError::UnknownAction(action.to_string()));
        }
        Ok(self
            .actions
            .values()
            .filter(|a| a.predecessors().any(|p| p == action))
            .map(ActionInstance::name)
            .collect())
    }

    /// Builds the precedence graph, failing if it contains a cycle.
    pub fn dependency_graph(&self) -> Result<DependencyGraph<'_>, ModelError> {
        DependencyGraph::new(self)
    }

    /// Returns a builder seeded with this program's contents.
    pub fn to_builder(&self) -> ProgramBuilder {
        ProgramBuilder {
            name: self.name.clone(),
            robot_class: self.robot_class.clone(),
            resources: self.resources.values().cloned().collect(),
            variables: self.variables.values().cloned().collect(),
            actions: self.actions.values().cloned().collect(),
        }
    }

    pub(crate) fn actions_mut(&mut self) -> impl Iterator<Item = &mut ActionInstance> {
        self.actions.values_mut()
    }
}

#[derive(Debug, Clone)]
pub struct ProgramBuilder {
    name: String,
    robot_class: String,
    resources: Vec<ResourceInstance>,
    variables: Vec<VariableDecl>,
    actions: Vec<ActionInstance>,
}

impl ProgramBuilder {
    pub fn resource(mut self, resource: ResourceInstance) -> Self {
        self.resources.push(resource);
        self
    }

    pub fn variable(mut self, variable: VariableDecl) -> Self {
        self.variables.push(variable);
        self
    }

    pub fn action(mut self, action: ActionInstance) -> Self {
        self.actions.push(action);
        self
    }

    /// Replaces the action with the same name, or appends it.
    pub fn replace_action(mut self, action: ActionInstance) -> Self {
        match self.actions.iter_mut().find(|a| a.name == action.name) {
            Some(slot) => *slot = action,
            None => self.actions.push(action),
        }
        self
    }

    pub fn build(self) -> Result<Program, ModelError> {
        let resources = unique_by_name(self.resources, "resource", |r| &r.name)?;
        let variables = unique_by_name(self.variables, "variable", |v| &v.name)?;
        let actions = unique_by_name(self.actions, "action", |a| &a.name)?;

        for action in actions.values() {
            if !resources.contains_key(&action.resource) {
                return Err(ModelError::UnresolvedReference {
                    kind: "resource",
                    name: action.resource.clone(),
                    referrer: action.name.clone(),
                });
            }
            let mut params = BTreeSet::new();
            for arg in &action.args {
                if !params.insert(arg.param.as_str()) {
                    return Err(ModelError::DuplicateIdentifier {
                        kind: "argument",
                        name: format!("{}.{}", action.name, arg.param),
                    });
                }
            }
            for pred in action.predecessors() {
                if !actions.contains_key(pred) {
                    return Err(ModelError::UnresolvedReference {
                        kind: "action",
                        name: pred.to_string(),
                        referrer: action.name.clone(),
                    });
                }
            }
        }

        Ok(Program {
            name: self.name,
            robot_class: self.robot_class,
            resources,
            variables,
            actions,
        })
    }
}

fn unique_by_name<T>(
    items: Vec<T>,
    kind: &'static str,
    name: impl Fn(&T) -> &String,
) -> Result<BTreeMap<String, T>, ModelError> {
    let mut map = BTreeMap::new();
    for item in items {
        let key = name(&item).clone();
        if map.contains_key(&key) {
            return Err(ModelError::DuplicateIdentifier { kind, name: key });
        }
        map.insert(key, item);
    }
    Ok(map)
}
