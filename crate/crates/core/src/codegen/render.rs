//! Template expansion over a lazily evaluated view of a program.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::template::{Node, Reference, SetValue, Template};
use crate::dsl::RobotClassDsl;
use crate::model::{
    ActionInstance, Binding, Literal, ModelError, Program, ResourceInstance, VariableDecl,
};

/// Templates addressable by `#insert`, keyed by id.
///
/// Implicit inserts look up `action:<ActionType>` for actions and
/// `component:<ComponentType>` for resource instances.
pub type TemplateLibrary = BTreeMap<String, Template>;

const MAX_INSERT_DEPTH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenderMode {
    /// Unresolved references are errors.
    #[default]
    Strict,
    /// Unresolved references render as nothing and are reported as warnings.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub template: String,
    pub line: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.template.is_empty() {
            write!(f, "line {}", self.line)
        } else {
            write!(f, "{} line {}", self.template, self.line)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("{at}: unresolved reference {reference}")]
    UnresolvedReference { at: Location, reference: String },
    #[error("{at}: no template with id `{id}`")]
    UnknownTemplateId { at: Location, id: String },
    #[error("{at}: {reference} is not a list")]
    NonIterableInForeach { at: Location, reference: String },
    #[error("{at}: {reference} is not an action or resource and cannot be inserted")]
    NotInsertable { at: Location, reference: String },
    #[error("{at}: #insert nested more than {MAX_INSERT_DEPTH} levels")]
    InsertTooDeep { at: Location },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Rendered {
    pub text: String,
    /// Unresolved references skipped in lenient mode.
    pub warnings: Vec<RenderError>,
}

/// A value reachable from a template reference.
#[derive(Debug, Clone, PartialEq)]
pub enum Value<'a> {
    Null,
    Text(Cow<'a, str>),
    Bool(bool),
    Int(i64),
    List(Vec<Value<'a>>),
    Map(BTreeMap<String, Value<'a>>),
    Literal(&'a Literal),
    Program,
    Action(&'a ActionInstance),
    Parameter {
        action: &'a ActionInstance,
        name: &'a str,
        type_name: Option<&'a str>,
    },
    Variable(&'a VariableDecl),
    Resource(&'a ResourceInstance),
}

impl<'a> Value<'a> {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(Cow::Owned(s.into()))
    }

    fn truthy(&self) -> bool {
        match self {
            Value::Null => false,
            Value::Bool(b) => *b,
            Value::Text(s) => !s.is_empty(),
            Value::List(v) => !v.is_empty(),
            Value::Map(m) => !m.is_empty(),
            _ => true,
        }
    }

    /// The principal root name an inserted template sees this value under.
    fn root_name(&self) -> Option<&'static str> {
        match self {
            Value::Program => Some("Program"),
            Value::Action(_) => Some("Action"),
            Value::Parameter { .. } => Some("Parameter"),
            Value::Variable(_) => Some("Variable"),
            Value::Resource(_) => Some("ResourceComponent"),
            _ => None,
        }
    }
}

struct Model<'a> {
    program: &'a Program,
    dsl: &'a RobotClassDsl,
    topological: Vec<&'a str>,
}

/// Named roots visible to templates, plus the program they view.
pub struct RenderContext<'a> {
    model: Option<Model<'a>>,
    roots: BTreeMap<String, Value<'a>>,
}

impl<'a> RenderContext<'a> {
    /// A context with no program; only explicitly bound roots resolve.
    pub fn empty() -> Self {
        RenderContext {
            model: None,
            roots: BTreeMap::new(),
        }
    }

    /// Exposes `$Program`. Fails if the program graph has a cycle.
    pub fn for_program(program: &'a Program, dsl: &'a RobotClassDsl) -> Result<Self, ModelError> {
        let topological = program.dependency_graph()?.topological_order();
        let mut roots = BTreeMap::new();
        roots.insert("Program".to_string(), Value::Program);
        Ok(RenderContext {
            model: Some(Model {
                program,
                dsl,
                topological,
            }),
            roots,
        })
    }

    pub fn bind(&mut self, name: impl Into<String>, value: Value<'a>) {
        self.roots.insert(name.into(), value);
    }

    pub fn with(mut self, name: impl Into<String>, value: Value<'a>) -> Self {
        self.bind(name, value);
        self
    }

    /// Binds `$Action` to the named action of the program.
    pub fn with_action(self, name: &str) -> Result<Self, ModelError> {
        let action = self
            .model
            .as_ref()
            .and_then(|m| m.program.action(name))
            .ok_or_else(|| ModelError::UnknownAction(name.to_string()))?;
        Ok(self.with("Action", Value::Action(action)))
    }

    fn actions_in_order(&self, filter: impl Fn(&ActionInstance) -> bool) -> Value<'a> {
        let Some(m) = &self.model else {
            return Value::Null;
        };
        Value::List(
            m.topological
                .iter()
                .filter_map(|n| m.program.action(n))
                .filter(|a| filter(a))
                .map(Value::Action)
                .collect(),
        )
    }

    fn variable(&self, name: &'a str) -> Value<'a> {
        match self.model.as_ref().and_then(|m| m.program.variable(name)) {
            Some(v) => Value::Variable(v),
            None => Value::Text(Cow::Borrowed(name)),
        }
    }

    fn parameters(&self, action: &'a ActionInstance) -> Value<'a> {
        let declared = self
            .model
            .as_ref()
            .and_then(|m| m.dsl.lookup_action(action.action_type()).ok());
        let params = match declared {
            Some(def) => def
                .parameters
                .iter()
                .map(|p| Value::Parameter {
                    action,
                    name: &p.name,
                    type_name: Some(&p.type_name),
                })
                .collect(),
            None => action
                .args()
                .iter()
                .map(|a| Value::Parameter {
                    action,
                    name: &a.param,
                    type_name: None,
                })
                .collect(),
        };
        Value::List(params)
    }

    /// One property step; `None` when the property does not exist.
    fn property(&self, value: &Value<'a>, step: &str) -> Option<Value<'a>> {
        let text = |s: &'a str| Some(Value::Text(Cow::Borrowed(s)));
        match value {
            Value::Program => {
                let m = self.model.as_ref()?;
                match step {
                    "name" => text(m.program.name()),
                    "robotClass" => text(m.program.robot_class()),
                    "actions" => Some(self.actions_in_order(|_| true)),
                    "resources" => Some(Value::List(
                        m.program.resources().map(Value::Resource).collect(),
                    )),
                    "variables" => Some(Value::List(
                        m.program.variables().map(Value::Variable).collect(),
                    )),
                    _ => None,
                }
            }
            Value::Action(a) => {
                let a: &'a ActionInstance = a;
                match step {
                    "name" => text(a.name()),
                    "type" => text(a.action_type()),
                    "resource" => Some(
                        self.model
                            .as_ref()
                            .and_then(|m| m.program.resource(a.resource()))
                            .map_or(Value::Text(Cow::Borrowed(a.resource())), Value::Resource),
                    ),
                    "parameters" => Some(self.parameters(a)),
                    "args" => Some(Value::Map(
                        a.args()
                            .iter()
                            .map(|arg| {
                                let v = match &arg.binding {
                                    Binding::Variable(v) => self.variable(v),
                                    Binding::Literal(l) => Value::Literal(l),
                                };
                                (arg.param.clone(), v)
                            })
                            .collect(),
                    )),
                    "returnVariable" => {
                        Some(a.return_binding().map_or(Value::Null, |v| self.variable(v)))
                    }
                    "predecessors" => {
                        Some(self.actions_in_order(|x| a.predecessors().any(|p| p == x.name())))
                    }
                    "successors" => {
                        Some(self.actions_in_order(|x| x.predecessors().any(|p| p == a.name())))
                    }
                    _ => None,
                }
            }
            Value::Parameter {
                action,
                name,
                type_name,
            } => match step {
                "name" => text(name),
                "type" => Some(type_name.map_or(Value::Null, |t| Value::Text(Cow::Borrowed(t)))),
                "variable" => Some(match action.arg(name) {
                    Some(Binding::Variable(v)) => self.variable(v),
                    _ => Value::Null,
                }),
                "value" => Some(match action.arg(name) {
                    Some(Binding::Literal(l)) => Value::Literal(l),
                    _ => Value::Null,
                }),
                _ => None,
            },
            Value::Variable(v) => match step {
                "name" => text(&v.name),
                "type" => text(&v.type_name),
                "init" => Some(v.init.as_ref().map_or(Value::Null, Value::Literal)),
                _ => None,
            },
            Value::Resource(r) => {
                let r: &'a ResourceInstance = r;
                match step {
                    "name" => text(&r.name),
                    "type" => text(&r.component_type),
                    "actions" => Some(self.actions_in_order(|a| a.resource() == r.name)),
                    _ => None,
                }
            }
            Value::Literal(l) => l.field(step).map(Value::Literal),
            Value::List(items) => match step {
                "size" => Some(Value::Int(items.len() as i64)),
                "isEmpty" => Some(Value::Bool(items.is_empty())),
                _ => None,
            },
            Value::Map(m) => m.get(step).cloned(),
            Value::Null | Value::Text(_) | Value::Bool(_) | Value::Int(_) => None,
        }
    }

    fn display(&self, value: &Value<'a>) -> String {
        match value {
            Value::Null => String::new(),
            Value::Text(s) => s.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::List(items) => {
                let parts: Vec<_> = items.iter().map(|v| self.display(v)).collect();
                format!("[{}]", parts.join(", "))
            }
            Value::Map(m) => {
                let parts: Vec<_> = m
                    .iter()
                    .map(|(k, v)| format!("{k}={}", self.display(v)))
                    .collect();
                format!("{{{}}}", parts.join(", "))
            }
            Value::Literal(l) => l.to_string(),
            Value::Program => self
                .model
                .as_ref()
                .map_or("", |m| m.program.name())
                .to_string(),
            Value::Action(a) => a.name().to_string(),
            Value::Parameter { name, .. } => name.to_string(),
            Value::Variable(v) => v.name.clone(),
            Value::Resource(r) => r.name.clone(),
        }
    }
}

/// Expands `template`; `#insert` draws on `library`.
pub fn render(
    template: &Template,
    context: &RenderContext<'_>,
    library: &TemplateLibrary,
    mode: RenderMode,
) -> Result<Rendered, RenderError> {
    let mut r = Renderer {
        ctx: context,
        library,
        mode,
        out: Rendered::default(),
    };
    r.template(template, Vec::new(), 0)?;
    Ok(r.out)
}

struct Renderer<'r, 'a> {
    ctx: &'r RenderContext<'a>,
    library: &'r TemplateLibrary,
    mode: RenderMode,
    out: Rendered,
}

struct Scope<'a> {
    template: String,
    frames: Vec<BTreeMap<String, Value<'a>>>,
    depth: usize,
}

impl<'a> Scope<'a> {
    fn at(&self, line: usize) -> Location {
        Location {
            template: self.template.clone(),
            line,
        }
    }
}

impl<'r, 'a> Renderer<'r, 'a> {
    fn template(
        &mut self,
        template: &Template,
        bindings: Vec<(String, Value<'a>)>,
        depth: usize,
    ) -> Result<(), RenderError> {
        let mut scope = Scope {
            template: template.id().to_string(),
            frames: vec![bindings.into_iter().collect()],
            depth,
        };
        self.nodes(template.nodes(), &mut scope)
    }

    fn lookup(&self, r: &Reference, scope: &Scope<'a>) -> Option<Value<'a>> {
        let mut value = scope
            .frames
            .iter()
            .rev()
            .find_map(|f| f.get(&r.root))
            .or_else(|| self.ctx.roots.get(&r.root))?
            .clone();
        for step in &r.steps {
            value = self.ctx.property(&value, step)?;
        }
        Some(value)
    }

    /// Resolves a reference that must produce a value; `Ok(None)` means it
    /// was skipped in lenient mode.
    fn require(
        &mut self,
        r: &Reference,
        scope: &Scope<'a>,
    ) -> Result<Option<Value<'a>>, RenderError> {
        match self.lookup(r, scope) {
            Some(Value::Null) | None => {
                let err = RenderError::UnresolvedReference {
                    at: scope.at(r.line),
                    reference: r.display(),
                };
                match self.mode {
                    RenderMode::Strict => Err(err),
                    RenderMode::Lenient => {
                        self.out.warnings.push(err);
                        Ok(None)
                    }
                }
            }
            Some(v) => Ok(Some(v)),
        }
    }

    fn nodes(&mut self, nodes: &[Node], scope: &mut Scope<'a>) -> Result<(), RenderError> {
        for node in nodes {
            match node {
                Node::Text(t) => self.out.text.push_str(t),
                Node::Reference(r) => {
                    if let Some(v) = self.require(r, scope)? {
                        let s = self.ctx.display(&v);
                        self.out.text.push_str(&s);
                    }
                }
                Node::Foreach {
                    var,
                    items,
                    body,
                    line,
                } => {
                    let Some(list) = self.require(items, scope)? else {
                        continue;
                    };
                    let Value::List(list) = list else {
                        return Err(RenderError::NonIterableInForeach {
                            at: scope.at(*line),
                            reference: items.display(),
                        });
                    };
                    let count = list.len();
                    for (i, item) in list.into_iter().enumerate() {
                        let meta = BTreeMap::from([
                            ("index".to_string(), Value::Int(i as i64)),
                            ("count".to_string(), Value::Int(i as i64 + 1)),
                            ("hasNext".to_string(), Value::Bool(i + 1 < count)),
                        ]);
                        let frame = BTreeMap::from([
                            (var.clone(), item),
                            ("foreach".to_string(), Value::Map(meta)),
                        ]);
                        scope.frames.push(frame);
                        let res = self.nodes(body, scope);
                        scope.frames.pop();
                        res?;
                    }
                }
                Node::If {
                    negated,
                    condition,
                    then_body,
                    else_body,
                    ..
                } => {
                    let truth = self.lookup(condition, scope).is_some_and(|v| v.truthy());
                    let body = if truth != *negated {
                        then_body
                    } else {
                        else_body
                    };
                    self.nodes(body, scope)?;
                }
                Node::Set { var, value, .. } => {
                    let v = match value {
                        SetValue::Literal(s) => Value::text(s.clone()),
                        SetValue::Reference(r) => match self.require(r, scope)? {
                            Some(v) => v,
                            None => Value::Null,
                        },
                    };
                    // a fresh name lands in the outermost frame of this template
                    let idx = scope
                        .frames
                        .iter()
                        .rposition(|f| f.contains_key(var))
                        .unwrap_or(0);
                    scope.frames[idx].insert(var.clone(), v);
                }
                Node::Insert { id, target, line } => {
                    let at = scope.at(*line);
                    if scope.depth >= MAX_INSERT_DEPTH {
                        return Err(RenderError::InsertTooDeep { at });
                    }
                    let Some(value) = self.require(target, scope)? else {
                        continue;
                    };
                    let Some(root) = value.root_name() else {
                        return Err(RenderError::NotInsertable {
                            at,
                            reference: target.display(),
                        });
                    };
                    let id = match (id, &value) {
                        (Some(id), _) => id.clone(),
                        (None, Value::Action(a)) => format!("action:{}", a.action_type()),
                        (None, Value::Resource(r)) => format!("component:{}", r.component_type),
                        (None, _) => {
                            return Err(RenderError::NotInsertable {
                                at,
                                reference: target.display(),
                            })
                        }
                    };
                    let library = self.library;
                    let Some(inner) = library.get(&id) else {
                        return Err(RenderError::UnknownTemplateId { at, id });
                    };
                    self.template(inner, vec![(root.to_string(), value)], scope.depth + 1)?;
                }
            }
        }
        Ok(())
    }
}
