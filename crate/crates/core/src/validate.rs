//! Completeness and parallelism checks over a program.
//!
//! Every check returns findings instead of failing, so a single pass reports
//! all problems. Errors make a program invalid; warnings are advisory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::dsl::RobotClassDsl;
use crate::model::{Binding, DependencyGraph, ModelError, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Closed set of finding codes. Reports are ordered by this declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FindingCode {
    DuplicateName,
    UnboundParameter,
    UnknownVariable,
    TypeMismatch,
    UninstantiatedVariable,
    CyclicGraph,
    MutexViolation,
    UnusedVariable,
    VariableRace,
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: FindingCode,
    pub subjects: Vec<String>,
    pub message: String,
}

impl Finding {
    fn new<S: Into<String>>(
        severity: Severity,
        code: FindingCode,
        subjects: impl IntoIterator<Item = S>,
        message: impl Into<String>,
    ) -> Self {
        Finding {
            severity,
            code,
            subjects: subjects.into_iter().map(Into::into).collect(),
            message: message.into(),
        }
    }

    fn error<S: Into<String>>(
        code: FindingCode,
        subjects: impl IntoIterator<Item = S>,
        message: impl Into<String>,
    ) -> Self {
        Self::new(Severity::Error, code, subjects, message)
    }

    fn warning<S: Into<String>>(
        code: FindingCode,
        subjects: impl IntoIterator<Item = S>,
        message: impl Into<String>,
    ) -> Self {
        Self::new(Severity::Warning, code, subjects, message)
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}] {}: {}",
            self.severity,
            self.code,
            self.subjects.join(", "),
            self.message
        )
    }
}

/// Findings sorted by code, then subjects. `ok` is false iff any finding
/// has error severity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    ok: bool,
    findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn from_findings(mut findings: Vec<Finding>) -> Self {
        findings.sort_by(|a, b| {
            (a.code, &a.subjects, &a.message).cmp(&(b.code, &b.subjects, &b.message))
        });
        findings.dedup();
        let ok = findings.iter().all(|f| f.severity != Severity::Error);
        ValidationReport { ok, findings }
    }

    pub fn ok(&self) -> bool {
        self.ok
    }

    pub fn findings(&self) -> &[Finding] {
        &self.findings
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn has_warnings(&self) -> bool {
        self.findings
            .iter()
            .any(|f| f.severity == Severity::Warning)
    }

    pub fn with_code(&self, code: FindingCode) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.code == code)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.findings.len();
        writeln!(
            f,
            "{}, {n} finding{}",
            if self.ok { "OK" } else { "FAILED" },
            if n == 1 { "" } else { "s" }
        )?;
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Runs every check and aggregates the findings.
pub fn validate(program: &Program, dsl: &RobotClassDsl) -> ValidationReport {
    let mut findings = check_duplicate_names(program);
    findings.extend(check_bindings(program, dsl));
    findings.extend(check_unused_variables(program));
    findings.extend(check_mutex_schedulability(program, dsl));
    findings.extend(lint_variable_races(program, dsl));
    ValidationReport::from_findings(findings)
}

/// Names shared between resources, variables and actions. Each namespace is
/// already unique by construction.
pub fn check_duplicate_names(program: &Program) -> Vec<Finding> {
    let mut owners: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in program.resources() {
        owners.entry(&r.name).or_default().push("resource");
    }
    for v in program.variables() {
        owners.entry(&v.name).or_default().push("variable");
    }
    for a in program.actions() {
        owners.entry(a.name()).or_default().push("action");
    }
    owners
        .into_iter()
        .filter(|(_, kinds)| kinds.len() > 1)
        .map(|(name, kinds)| {
            Finding::error(
                FindingCode::DuplicateName,
                [name],
                format!("name is used by more than one {}", kinds.join(" and ")),
            )
        })
        .collect()
}

/// Parameter completeness, variable resolution, type agreement, and reads
/// of variables that nothing can have written.
pub fn check_bindings(program: &Program, dsl: &RobotClassDsl) -> Vec<Finding> {
    use FindingCode::*;
    let mut out = Vec::new();

    for var in program.variables() {
        if dsl.variable_type(&var.type_name).is_none() {
            out.push(Finding::error(
                TypeMismatch,
                [&var.name],
                format!("type `{}` is not defined by the DSL", var.type_name),
            ));
        } else if let Some(init) = &var.init {
            if !dsl.literal_conforms(&var.type_name, init) {
                out.push(Finding::error(
                    TypeMismatch,
                    [&var.name],
                    format!("initializer `{init}` is not a valid {}", var.type_name),
                ));
            }
        }
    }

    for action in program.actions() {
        let Ok(def) = dsl.lookup_action(action.action_type()) else {
            continue;
        };
        for param in &def.parameters {
            match action.arg(&param.name) {
                None => out.push(Finding::error(
                    UnboundParameter,
                    [action.name(), &param.name],
                    format!(
                        "parameter `{}` of {} is not set",
                        param.name, def.identifier
                    ),
                )),
                Some(Binding::Variable(v)) => match program.variable(v) {
                    None => out.push(Finding::error(
                        UnknownVariable,
                        [action.name(), v],
                        format!(
                            "argument `{}` refers to undeclared variable `{v}`",
                            param.name
                        ),
                    )),
                    Some(var) if var.type_name != param.type_name => out.push(Finding::error(
                        TypeMismatch,
                        [action.name(), &param.name],
                        format!(
                            "variable `{v}` has type {} but parameter `{}` expects {}",
                            var.type_name, param.name, param.type_name
                        ),
                    )),
                    Some(_) => {}
                },
                Some(Binding::Literal(lit)) => {
                    if !dsl.literal_conforms(&param.type_name, lit) {
                        out.push(Finding::error(
                            TypeMismatch,
                            [action.name(), &param.name],
                            format!("literal `{lit}` is not a valid {}", param.type_name),
                        ));
                    }
                }
            }
        }
        if let Some(ret) = action.return_binding() {
            match (program.variable(ret), &def.return_type) {
                (None, _) => out.push(Finding::error(
                    UnknownVariable,
                    [action.name(), ret],
                    format!("return value goes to undeclared variable `{ret}`"),
                )),
                (Some(_), None) => out.push(Finding::error(
                    TypeMismatch,
                    [action.name(), ret],
                    format!("{} returns nothing", def.identifier),
                )),
                (Some(var), Some(ty)) if &var.type_name != ty => out.push(Finding::error(
                    TypeMismatch,
                    [action.name(), ret],
                    format!(
                        "{} returns {ty} but variable `{ret}` has type {}",
                        def.identifier, var.type_name
                    ),
                )),
                _ => {}
            }
        }
    }

    if let Ok(graph) = program.dependency_graph() {
        out.extend(uninstantiated_reads(program, &graph));
    }
    out
}

fn uninstantiated_reads(program: &Program, graph: &DependencyGraph<'_>) -> Vec<Finding> {
    let mut out = Vec::new();
    for reader in program.actions() {
        let Some(ri) = graph.index_of(reader.name()) else {
            continue;
        };
        let mut reported = BTreeSet::new();
        for v in reader.reads() {
            let Some(var) = program.variable(v) else {
                continue;
            };
            if var.init.is_some() || !reported.insert(v) {
                continue;
            }
            let written = program.actions().any(|w| {
                w.name() != reader.name()
                    && w.writes() == Some(v)
                    && graph
                        .index_of(w.name())
                        .is_some_and(|wi| !graph.is_ancestor(ri, wi))
            });
            if !written {
                out.push(Finding::warning(
                    FindingCode::UninstantiatedVariable,
                    [reader.name(), v],
                    format!("`{v}` is read but has no initializer and no earlier writer"),
                ));
            }
        }
    }
    out
}

/// Declared variables no action reads or writes.
pub fn check_unused_variables(program: &Program) -> Vec<Finding> {
    let used: BTreeSet<&str> = program
        .actions()
        .flat_map(|a| a.reads().chain(a.writes()))
        .collect();
    program
        .variables()
        .filter(|v| !used.contains(v.name.as_str()))
        .map(|v| {
            Finding::warning(
                FindingCode::UnusedVariable,
                [&v.name],
                "variable is never read or written",
            )
        })
        .collect()
}

fn cyclic_finding(err: ModelError) -> Vec<Finding> {
    match err {
        ModelError::CyclicGraph(cycle) => {
            let message = format!("precedence cycle {}", cycle.join(" -> "));
            vec![Finding::error(FindingCode::CyclicGraph, cycle, message)]
        }
        other => vec![Finding::error(
            FindingCode::CyclicGraph,
            Vec::<String>::new(),
            other.to_string(),
        )],
    }
}

/// One violation per unordered pair of actions whose types are mutually
/// exclusive and which can run at the same time. A cyclic graph yields a
/// single `CyclicGraph` finding instead.
pub fn check_mutex_schedulability(program: &Program, dsl: &RobotClassDsl) -> Vec<Finding> {
    let graph = match program.dependency_graph() {
        Ok(g) => g,
        Err(e) => return cyclic_finding(e),
    };
    let actions: Vec<_> = program.actions().collect();
    let mut out = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        for b in &actions[i + 1..] {
            if dsl.are_mutex(a.action_type(), b.action_type())
                && graph.potentially_parallel(a.name(), b.name()) == Ok(true)
            {
                out.push(Finding::error(
                    FindingCode::MutexViolation,
                    [a.name(), b.name()],
                    format!(
                        "{} and {} must not run simultaneously but are not ordered",
                        a.action_type(),
                        b.action_type()
                    ),
                ));
            }
        }
    }
    out
}

/// Potentially parallel actions that write a variable the other reads or
/// writes. Nothing is reported for cyclic graphs.
pub fn lint_variable_races(program: &Program, _dsl: &RobotClassDsl) -> Vec<Finding> {
    let Ok(graph) = program.dependency_graph() else {
        return Vec::new();
    };
    let actions: Vec<_> = program.actions().collect();
    let mut out = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        for b in &actions[i + 1..] {
            if graph.potentially_parallel(a.name(), b.name()) != Ok(true) {
                continue;
            }
            let mut shared = BTreeSet::new();
            for (w, other) in [(a, b), (b, a)] {
                if let Some(v) = w.writes() {
                    if other.writes() == Some(v) || other.reads().any(|r| r == v) {
                        shared.insert(v);
                    }
                }
            }
            for v in shared {
                out.push(Finding::warning(
                    FindingCode::VariableRace,
                    [a.name(), b.name(), v],
                    format!("`{v}` may be accessed concurrently with at least one write"),
                ));
            }
        }
    }
    out
}
