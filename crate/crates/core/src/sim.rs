//! Deterministic discrete-event execution of programs.
//!
//! Each tick, finishing actions release their resources first; then every
//! eligible action starts, in name order. An action is eligible once all its
//! predecessors have finished and its resource instance is free. Actions
//! occupy the half-open interval `[start, start + duration)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::dsl::RobotClassDsl;
use crate::model::{DurationMap, ModelError, Program, Ticks};
use crate::validate::{validate, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("program has validation errors:\n{0}")]
    InvalidProgram(ValidationReport),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Finish sorts before Start so that events at one tick list releases first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Finish,
    Start,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TraceEvent {
    #[serde(rename = "t")]
    pub time: Ticks,
    pub kind: EventKind,
    pub action: String,
    pub resource: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub start: Ticks,
    pub finish: Ticks,
}

impl Interval {
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start < other.finish && other.start < self.finish
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    events: Vec<TraceEvent>,
    makespan: Ticks,
    schedule: BTreeMap<String, Interval>,
}

#[derive(Serialize)]
struct TraceJson<'a> {
    makespan: Ticks,
    events: &'a [TraceEvent],
}

impl ExecutionTrace {
    /// Builds a trace from explicit intervals, e.g. to check a hand-made
    /// schedule with [`verify_trace`].
    pub fn from_schedule<'a>(
        program: &Program,
        schedule: impl IntoIterator<Item = (&'a str, Interval)>,
    ) -> Result<Self, SimError> {
        let mut map = BTreeMap::new();
        let mut events = Vec::new();
        for (name, iv) in schedule {
            let action = program
                .action(name)
                .ok_or_else(|| ModelError::UnknownAction(name.to_string()))?;
            if iv.finish <= iv.start {
                return Err(ModelError::NonPositiveDuration(name.to_string()).into());
            }
            for (time, kind) in [(iv.start, EventKind::Start), (iv.finish, EventKind::Finish)] {
                events.push(TraceEvent {
                    time,
                    kind,
                    action: name.to_string(),
                    resource: action.resource().to_string(),
                });
            }
            map.insert(name.to_string(), iv);
        }
        events.sort();
        let makespan = map.values().map(|iv| iv.finish).max().unwrap_or(0);
        Ok(ExecutionTrace {
            events,
            makespan,
            schedule: map,
        })
    }

    /// Events ordered by (time, finish before start, action name).
    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn makespan(&self) -> Ticks {
        self.makespan
    }

    pub fn schedule(&self) -> &BTreeMap<String, Interval> {
        &self.schedule
    }

    pub fn interval(&self, action: &str) -> Option<Interval> {
        self.schedule.get(action).copied()
    }

    /// Action names ordered by start time, then name.
    pub fn start_order(&self) -> Vec<&str> {
        let mut v: Vec<_> = self.schedule.iter().collect();
        v.sort_by_key(|(name, iv)| (iv.start, name.as_str()));
        v.into_iter().map(|(name, _)| name.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TraceJson {
            makespan: self.makespan,
            events: &self.events,
        })
        .expect("trace serializes")
    }

    /// Fixed-width text timeline, one row per action, followed by the makespan.
    pub fn timeline(&self) -> String {
        const MAX_COLUMNS: Ticks = 100;
        let scale = self.makespan.div_ceil(MAX_COLUMNS).max(1);
        let columns = self.makespan.div_ceil(scale);
        let rows: Vec<(&str, &str, Interval)> = self
            .start_order()
            .into_iter()
            .map(|name| {
                let resource = self
                    .events
                    .iter()
                    .find(|e| e.action == name)
                    .map(|e| e.resource.as_str())
                    .unwrap_or("");
                (name, resource, self.schedule[name])
            })
            .collect();
        let name_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let res_w = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);

        let mut out = String::new();
        if scale > 1 {
            let _ = writeln!(out, "(one column = {scale} ticks)");
        }
        for (name, resource, iv) in rows {
            let bar: String = (0..columns)
                .map(|c| {
                    let cell = Interval {
                        start: c * scale,
                        finish: (c + 1) * scale,
                    };
                    if cell.overlaps(&iv) {
                        '#'
                    } else {
                        '.'
                    }
                })
                .collect();
            let _ = writeln!(
                out,
                "{name:<name_w$}  {resource:<res_w$}  |{bar}|  [{}, {})",
                iv.start, iv.finish
            );
        }
        let _ = writeln!(out, "makespan: {}", self.makespan);
        out
    }
}

impl fmt::Display for ExecutionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.timeline())
    }
}

/// Maximum finish time over all actions; 0 for an empty trace.
pub fn makespan(trace: &ExecutionTrace) -> Ticks {
    trace.makespan()
}

/// Runs the greedy earliest-start schedule.
///
/// Programs with validation errors are refused unless `force` is set; with
/// `force`, mutually exclusive action types are additionally kept from
/// running at the same time.
pub fn simulate(
    program: &Program,
    dsl: &RobotClassDsl,
    durations: &DurationMap,
    force: bool,
) -> Result<ExecutionTrace, SimError> {
    if !force {
        let report = validate(program, dsl);
        if !report.ok() {
            return Err(SimError::InvalidProgram(report));
        }
    }
    let graph = program.dependency_graph()?;
    durations.check_against(program)?;

    let actions: Vec<_> = program.actions().collect();
    let n = actions.len();
    let mut waiting_on: Vec<usize> = (0..n).map(|i| graph.preds_of(i).len()).collect();
    let mut succs = vec![Vec::new(); n];
    for i in 0..n {
        for &p in graph.preds_of(i) {
            succs[p].push(i);
        }
    }

    let mut started = vec![false; n];
    let mut busy: BTreeSet<&str> = BTreeSet::new();
    let mut running: BTreeSet<(Ticks, usize)> = BTreeSet::new();
    let mut schedule = Vec::with_capacity(n);
    let mut time: Ticks = 0;

    loop {
        while let Some(&(finish, i)) = running.first() {
            if finish != time {
                break;
            }
            running.pop_first();
            busy.remove(actions[i].resource());
            for &s in &succs[i] {
                waiting_on[s] -= 1;
            }
        }

        for i in 0..n {
            if started[i] || waiting_on[i] > 0 || busy.contains(actions[i].resource()) {
                continue;
            }
            if force
                && running.iter().any(|&(_, j)| {
                    dsl.are_mutex(actions[i].action_type(), actions[j].action_type())
                })
            {
                continue;
            }
            let finish = time + durations.get(actions[i].name());
            started[i] = true;
            busy.insert(actions[i].resource());
            running.insert((finish, i));
            schedule.push((
                actions[i].name(),
                Interval {
                    start: time,
                    finish,
                },
            ));
        }

        match running.first() {
            Some(&(next, _)) => time = next,
            None => break,
        }
    }
    debug_assert!(started.iter().all(|s| *s), "acyclic programs always drain");

    ExecutionTrace::from_schedule(program, schedule)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ViolationRule {
    /// An action of the program does not appear in the trace.
    Missing,
    /// An action started before one of its predecessors finished.
    Precedence,
    /// Two actions overlapped on one resource instance.
    ResourceOverlap,
    /// Two mutually exclusive action types overlapped.
    MutexOverlap,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TraceViolation {
    pub rule: ViolationRule,
    pub actions: Vec<String>,
    pub message: String,
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} {}: {}",
            self.rule,
            self.actions.join(", "),
            self.message
        )
    }
}

/// Checks precedence, per-resource exclusivity and mutual exclusion of a
/// trace against its program.
pub fn verify_trace(
    trace: &ExecutionTrace,
    program: &Program,
    dsl: &RobotClassDsl,
) -> Result<Vec<TraceViolation>, SimError> {
    if let Some(unknown) = trace.schedule.keys().find(|a| program.action(a).is_none()) {
        return Err(ModelError::UnknownAction(unknown.clone()).into());
    }
    let mut out = Vec::new();
    for a in program.actions() {
        let Some(iv) = trace.interval(a.name()) else {
            out.push(TraceViolation {
                rule: ViolationRule::Missing,
                actions: vec![a.name().to_string()],
                message: "action never ran".into(),
            });
            continue;
        };
        for pred in a.predecessors() {
            if let Some(p) = trace.interval(pred) {
                if iv.start < p.finish {
                    out.push(TraceViolation {
                        rule: ViolationRule::Precedence,
                        actions: vec![pred.to_string(), a.name().to_string()],
                        message: format!(
                            "{} started at {} before {pred} finished at {}",
                            a.name(),
                            iv.start,
                            p.finish
                        ),
                    });
                }
            }
        }
    }

    let scheduled: Vec<_> = program
        .actions()
        .filter_map(|a| trace.interval(a.name()).map(|iv| (a, iv)))
        .collect();
    for (i, (a, ia)) in scheduled.iter().enumerate() {
        for (b, ib) in &scheduled[i + 1..] {
            if !ia.overlaps(ib) {
                continue;
            }
            let pair = vec![a.name().to_string(), b.name().to_string()];
            if a.resource() == b.resource() {
                out.push(TraceViolation {
                    rule: ViolationRule::ResourceOverlap,
                    actions: pair.clone(),
                    message: format!("both run on `{}` at the same time", a.resource()),
                });
            }
            if dsl.are_mutex(a.action_type(), b.action_type()) {
                out.push(TraceViolation {
                    rule: ViolationRule::MutexOverlap,
                    actions: pair,
                    message: format!(
                        "{} and {} must not run simultaneously",
                        a.action_type(),
                        b.action_type()
                    ),
                });
            }
        }
    }
    out.sort();
    Ok(out)
}
