//! Brute-force oracles and random program generators.
//!
//! Everything here deliberately avoids the graph and scheduling code of
//! `seqc-core`: paths are enumerated, schedules are enumerated, and the
//! simulator oracle steps one tick at a time. Only the plain data accessors
//! of the model are used.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use seqc_core::dsl::{ActionTypeDef, ParameterDef, ResourceComponentTypeDef};
use seqc_core::{
    ActionInstance, DurationMap, Literal, Program, ResourceInstance, RobotClassDsl, Ticks,
    VariableDecl,
};

/// Predecessor lists by action name.
fn preds(program: &Program) -> BTreeMap<&str, Vec<&str>> {
    program
        .actions()
        .map(|a| (a.name(), a.predecessors().collect()))
        .collect()
}

/// Every simple path in the predecessor-to-successor direction, from each
/// node. Exponential, fine for tiny graphs.
pub fn all_simple_paths(program: &Program) -> Vec<Vec<String>> {
    let mut succ: BTreeMap<&str, Vec<&str>> =
        program.actions().map(|a| (a.name(), Vec::new())).collect();
    for a in program.actions() {
        for p in a.predecessors() {
            succ.entry(p).or_default().push(a.name());
        }
    }
    fn walk<'a>(
        node: &'a str,
        succ: &BTreeMap<&'a str, Vec<&'a str>>,
        path: &mut Vec<&'a str>,
        out: &mut Vec<Vec<String>>,
    ) {
        path.push(node);
        out.push(path.iter().map(|s| s.to_string()).collect());
        for next in &succ[node] {
            if !path.contains(next) {
                walk(next, succ, path, out);
            }
        }
        path.pop();
    }
    let mut out = Vec::new();
    for a in program.actions() {
        walk(a.name(), &succ, &mut Vec::new(), &mut out);
    }
    out
}

/// Nodes with a path of length at least one into `target`.
pub fn ancestors_by_paths(program: &Program, target: &str) -> BTreeSet<String> {
    all_simple_paths(program)
        .into_iter()
        .filter(|p| p.len() > 1 && p.last().map(String::as_str) == Some(target))
        .map(|p| p[0].clone())
        .collect()
}

/// Heaviest simple path, by enumeration.
pub fn longest_path(program: &Program, durations: &DurationMap) -> Ticks {
    all_simple_paths(program)
        .iter()
        .map(|p| p.iter().map(|n| durations.get(n)).sum())
        .max()
        .unwrap_or(0)
}

/// The oracle's reading of "a and b may run at the same time".
///
/// Enumerates every assignment of start ticks in `0..n` with unit durations
/// that respects precedence and keeps each resource to one action per tick,
/// and collects the pairs that share a tick in at least one of them.
pub fn overlapping_pairs_unit(program: &Program) -> BTreeSet<(String, String)> {
    let actions: Vec<&ActionInstance> = program.actions().collect();
    let n = actions.len();
    let index: BTreeMap<&str, usize> = actions
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name(), i))
        .collect();
    let pred_idx: Vec<Vec<usize>> = actions
        .iter()
        .map(|a| a.predecessors().map(|p| index[p]).collect())
        .collect();

    let mut found = BTreeSet::new();
    let mut start = vec![usize::MAX; n];
    // assign in index order; a predecessor may come later in index order,
    // so precedence is checked once the assignment is complete
    fn assign(
        i: usize,
        n: usize,
        actions: &[&ActionInstance],
        pred_idx: &[Vec<usize>],
        start: &mut Vec<usize>,
        found: &mut BTreeSet<(usize, usize)>,
    ) {
        if i == n {
            for (j, ps) in pred_idx.iter().enumerate() {
                if ps.iter().any(|&p| start[j] < start[p] + 1) {
                    return;
                }
            }
            for a in 0..n {
                for b in a + 1..n {
                    if start[a] == start[b] {
                        found.insert((a, b));
                    }
                }
            }
            return;
        }
        for t in 0..n {
            let clash =
                (0..i).any(|j| start[j] == t && actions[j].resource() == actions[i].resource());
            if clash {
                continue;
            }
            start[i] = t;
            assign(i + 1, n, actions, pred_idx, start, found);
        }
        start[i] = usize::MAX;
    }
    let mut idx_pairs = BTreeSet::new();
    assign(0, n, &actions, &pred_idx, &mut start, &mut idx_pairs);
    for (a, b) in idx_pairs {
        found.insert((actions[a].name().to_string(), actions[b].name().to_string()));
    }
    found
}

/// Pairs `(a, b)`, `a < b`, the brute-force search says violate mutual exclusion.
pub fn mutex_violations_brute(
    program: &Program,
    dsl: &RobotClassDsl,
) -> BTreeSet<(String, String)> {
    overlapping_pairs_unit(program)
        .into_iter()
        .filter(|(a, b)| {
            let ta = program.action(a).unwrap().action_type();
            let tb = program.action(b).unwrap().action_type();
            dsl.mutex_relation().iter().any(|p| {
                (p.first() == ta && p.second() == tb) || (p.first() == tb && p.second() == ta)
            })
        })
        .collect()
}

/// Greedy list scheduler advancing one tick at a time.
///
/// Same dispatch rule as the production simulator: at each tick, release
/// finished actions, then start eligible actions in name order.
pub fn tick_simulate(
    program: &Program,
    dsl: &RobotClassDsl,
    durations: &DurationMap,
    force: bool,
) -> BTreeMap<String, (Ticks, Ticks)> {
    let preds = preds(program);
    let mut schedule: BTreeMap<String, (Ticks, Ticks)> = BTreeMap::new();
    let total = program.actions().count();
    let mut t: Ticks = 0;
    while schedule.len() < total {
        let running = |sched: &BTreeMap<String, (Ticks, Ticks)>, t: Ticks| -> Vec<String> {
            sched
                .iter()
                .filter(|(_, (s, f))| *s <= t && t < *f)
                .map(|(n, _)| n.clone())
                .collect()
        };
        for a in program.actions() {
            if schedule.contains_key(a.name()) {
                continue;
            }
            let ready = preds[a.name()]
                .iter()
                .all(|p| schedule.get(*p).is_some_and(|(_, f)| *f <= t));
            if !ready {
                continue;
            }
            let now = running(&schedule, t);
            let busy = now
                .iter()
                .any(|n| program.action(n).unwrap().resource() == a.resource());
            let excluded = force
                && now.iter().any(|n| {
                    let other = program.action(n).unwrap().action_type();
                    dsl.mutex_relation().iter().any(|p| {
                        (p.first() == other && p.second() == a.action_type())
                            || (p.second() == other && p.first() == a.action_type())
                    })
                });
            if busy || excluded {
                continue;
            }
            schedule.insert(a.name().to_string(), (t, t + durations.get(a.name())));
        }
        t += 1;
        assert!(t < 1_000_000, "tick oracle did not terminate");
    }
    schedule
}

/// Independent schedule checker. Returns `(rule, a, b)` triples with rules
/// `precedence`, `resource` and `mutex`.
pub fn schedule_violations(
    program: &Program,
    dsl: &RobotClassDsl,
    schedule: &BTreeMap<String, (Ticks, Ticks)>,
) -> Vec<(&'static str, String, String)> {
    let mut out = Vec::new();
    for a in program.actions() {
        let (s, _) = schedule[a.name()];
        for p in a.predecessors() {
            if s < schedule[p].1 {
                out.push(("precedence", p.to_string(), a.name().to_string()));
            }
        }
    }
    let actions: Vec<_> = program.actions().collect();
    for (i, a) in actions.iter().enumerate() {
        for b in &actions[i + 1..] {
            let (sa, fa) = schedule[a.name()];
            let (sb, fb) = schedule[b.name()];
            let overlap = (sa..fa).any(|t| sb <= t && t < fb);
            if !overlap {
                continue;
            }
            if a.resource() == b.resource() {
                out.push(("resource", a.name().to_string(), b.name().to_string()));
            }
            let (ta, tb) = (a.action_type(), b.action_type());
            if dsl.mutex_relation().iter().any(|p| {
                (p.first() == ta && p.second() == tb) || (p.first() == tb && p.second() == ta)
            }) {
                out.push(("mutex", a.name().to_string(), b.name().to_string()));
            }
        }
    }
    out
}

/// Knobs for the random generators.
#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub max_actions: usize,
    pub max_resources: usize,
    pub edge_probability: f64,
    pub mutex_probability: f64,
    /// Force every action onto its own resource instance.
    pub dedicated_resources: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_actions: 6,
            max_resources: 3,
            edge_probability: 0.3,
            mutex_probability: 0.25,
            dedicated_resources: false,
        }
    }
}

const PRIMITIVES: [&str; 4] = ["Int", "Float", "Bool", "String"];

fn literal_for(rng: &mut impl Rng, type_name: &str) -> Literal {
    Literal::scalar(match type_name {
        "Int" => rng.random_range(-50..50).to_string(),
        "Float" => format!("{}.5", rng.random_range(0..20)),
        "Bool" => if rng.random_bool(0.5) {
            "true"
        } else {
            "false"
        }
        .to_string(),
        _ => format!("s{}", rng.random_range(0..100)),
    })
}

/// A DSL with up to three component types of one to three action types
/// each, random primitive parameters and random (possibly reflexive)
/// mutex declarations.
pub fn random_dsl(rng: &mut impl Rng, params: &GenParams) -> RobotClassDsl {
    let n_components = rng.random_range(1..=3);
    let mut type_names = Vec::new();
    let mut components = Vec::new();
    for c in 0..n_components {
        let mut actions = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let id = format!("T{}", type_names.len());
            type_names.push(id.clone());
            let mut def = ActionTypeDef::new(id);
            for p in 0..rng.random_range(0..=2) {
                let ty = PRIMITIVES[rng.random_range(0..PRIMITIVES.len())];
                def.parameters.push(ParameterDef::new(format!("p{p}"), ty));
            }
            if rng.random_bool(0.4) {
                def = def.returns(PRIMITIVES[rng.random_range(0..PRIMITIVES.len())]);
            }
            actions.push(def);
        }
        components.push(ResourceComponentTypeDef::new(format!("C{c}"), actions));
    }
    for i in 0..type_names.len() {
        for j in i..type_names.len() {
            let p = if i == j {
                params.mutex_probability / 4.0
            } else {
                params.mutex_probability
            };
            if rng.random_bool(p) {
                let target = type_names[j].clone();
                let def = components
                    .iter_mut()
                    .flat_map(|c| c.actions.iter_mut())
                    .find(|a| a.identifier == type_names[i])
                    .unwrap();
                def.mutex_types.insert(target);
            }
        }
    }
    RobotClassDsl::new("Random", vec![], components).expect("generated DSL is consistent")
}

/// A random acyclic program over `dsl` with fully bound, well-typed
/// arguments. Edges only run from earlier to later positions of a random
/// permutation, so the graph is a DAG.
pub fn random_program(rng: &mut impl Rng, dsl: &RobotClassDsl, params: &GenParams) -> Program {
    let n = rng.random_range(0..=params.max_actions);
    let n_resources = if params.dedicated_resources {
        n
    } else {
        rng.random_range(1..=params.max_resources)
    };
    let comps = dsl.components();
    let resources: Vec<ResourceInstance> = (0..n_resources)
        .map(|i| {
            ResourceInstance::new(
                format!("r{i}"),
                comps[rng.random_range(0..comps.len())].type_name.clone(),
            )
        })
        .collect();

    let mut names: Vec<String> = (0..n).map(|i| format!("a{i}")).collect();
    names.shuffle(rng);

    let mut variables: BTreeMap<String, VariableDecl> = BTreeMap::new();
    let mut actions = Vec::new();
    for (pos, name) in names.iter().enumerate() {
        let res = if params.dedicated_resources {
            &resources[pos]
        } else {
            &resources[rng.random_range(0..resources.len())]
        };
        let comp = dsl.component(&res.component_type).unwrap();
        let def = &comp.actions[rng.random_range(0..comp.actions.len())];
        let mut a = ActionInstance::new(name.clone(), def.identifier.clone(), res.name.clone());
        for p in &def.parameters {
            if rng.random_bool(0.5) {
                let var = format!("v{}", p.type_name.to_lowercase());
                variables.entry(var.clone()).or_insert_with(|| {
                    let mut v = VariableDecl::new(var.clone(), p.type_name.clone());
                    if rng.random_bool(0.5) {
                        v = v.with_init(literal_for(rng, &p.type_name));
                    }
                    v
                });
                a = a.with_variable_arg(p.name.clone(), var);
            } else {
                a = a.with_literal_arg(p.name.clone(), literal_for(rng, &p.type_name));
            }
        }
        if let Some(ret) = &def.return_type {
            if rng.random_bool(0.5) {
                let var = format!("v{}", ret.to_lowercase());
                variables
                    .entry(var.clone())
                    .or_insert_with(|| VariableDecl::new(var.clone(), ret.clone()));
                a = a.with_return(var);
            }
        }
        for earlier in &names[..pos] {
            if rng.random_bool(params.edge_probability) {
                a = a.after(earlier.clone()).unwrap();
            }
        }
        actions.push(a);
    }

    let mut b = Program::builder("Random", dsl.name());
    for r in resources {
        b = b.resource(r);
    }
    for v in variables.into_values() {
        b = b.variable(v);
    }
    for a in actions {
        b = b.action(a);
    }
    b.build().expect("generated program is consistent")
}

/// Random durations of 1..=5 ticks for every action.
pub fn random_durations(rng: &mut impl Rng, program: &Program) -> DurationMap {
    let mut d = DurationMap::default();
    for a in program.actions() {
        d.insert(a.name(), rng.random_range(1..=5)).unwrap();
    }
    d
}

/// Random strings for template tests: a small ASCII alphabet
/// including `$`, `#`, `\`, braces and newlines.
pub fn random_text(rng: &mut impl Rng, max_len: usize) -> String {
    const ALPHABET: &[u8] = b"ab xyz_.(){}$#\\\n\t;=\"01";
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}
