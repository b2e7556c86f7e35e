//! Queries over the precedence graph of a program.
//!
//! Nodes are indexed in lexicographic name order, so every place where an
//! order among unordered actions is needed falls back to name order.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::{DurationMap, ModelError, Program, Ticks};

/// Acyclic precedence graph of a [`Program`], with precomputed transitive
/// closure.
#[derive(Debug, Clone)]
pub struct DependencyGraph<'p> {
    program: &'p Program,
    names: Vec<&'p str>,
    index: BTreeMap<&'p str, usize>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    order: Vec<usize>,
    ancestors: Vec<BTreeSet<usize>>,
}

impl<'p> DependencyGraph<'p> {
    pub fn new(program: &'p Program) -> Result<Self, ModelError> {
        let names: Vec<&str> = program.actions().map(|a| a.name()).collect();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut preds = vec![Vec::new(); names.len()];
        let mut succs = vec![Vec::new(); names.len()];
        for (i, action) in program.actions().enumerate() {
            for pred in action.predecessors() {
                let p = *index
                    .get(pred)
                    .ok_or_else(|| ModelError::UnknownAction(pred.to_string()))?;
                preds[i].push(p);
                succs[p].push(i);
            }
        }
        for list in preds.iter_mut().chain(succs.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }

        let order = kahn(&preds, &succs).map_err(|remaining| {
            ModelError::CyclicGraph(
                find_cycle(&preds, &remaining)
                    .into_iter()
                    .map(|i| names[i].to_string())
                    .collect(),
            )
        })?;

        let mut ancestors = vec![BTreeSet::new(); names.len()];
        for &v in &order {
            let mut acc = BTreeSet::new();
            for &p in &preds[v] {
                acc.insert(p);
                acc.extend(ancestors[p].iter().copied());
            }
            ancestors[v] = acc;
        }

        Ok(DependencyGraph {
            program,
            names,
            index,
            preds,
            succs,
            order,
            ancestors,
        })
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn idx(&self, name: &str) -> Result<usize, ModelError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownAction(name.to_string()))
    }

    fn collect(&self, set: impl IntoIterator<Item = usize>) -> BTreeSet<&'p str> {
        set.into_iter().map(|i| self.names[i]).collect()
    }

    pub fn predecessors(&self, action: &str) -> Result<BTreeSet<&'p str>, ModelError> {
        Ok(self.collect(self.preds[self.idx(action)?].iter().copied()))
    }

    pub fn successors(&self, action: &str) -> Result<BTreeSet<&'p str>, ModelError> {
        Ok(self.collect(self.succs[self.idx(action)?].iter().copied()))
    }

    /// All actions from which a directed path reaches `action`.
    pub fn ancestors(&self, action: &str) -> Result<BTreeSet<&'p str>, ModelError> {
        Ok(self.collect(self.ancestors[self.idx(action)?].iter().copied()))
    }

    /// All actions reachable from `action`.
    pub fn descendants(&self, action: &str) -> Result<BTreeSet<&'p str>, ModelError> {
        let i = self.idx(action)?;
        Ok(self.collect((0..self.len()).filter(|&j| self.ancestors[j].contains(&i))))
    }

    /// True when a directed path connects the two actions in either direction.
    pub fn ordered(&self, a: &str, b: &str) -> Result<bool, ModelError> {
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        Ok(self.ancestors[i].contains(&j) || self.ancestors[j].contains(&i))
    }

    /// Whether the two actions can ever execute at the same time: neither
    /// precedes the other and they run on different resource instances.
    pub fn potentially_parallel(&self, a: &str, b: &str) -> Result<bool, ModelError> {
        if a == b {
            self.idx(a)?;
            return Err(ModelError::SameAction(a.to_string()));
        }
        if self.ordered(a, b)? {
            return Ok(false);
        }
        let ra = self.program.action(a).map(|x| x.resource());
        let rb = self.program.action(b).map(|x| x.resource());
        Ok(ra != rb)
    }

    /// Total order consistent with all edges; ties broken by action name.
    pub fn topological_order(&self) -> Vec<&'p str> {
        self.order.iter().map(|&i| self.names[i]).collect()
    }

    /// Length of the longest duration-weighted path.
    pub fn critical_path_length(&self, durations: &DurationMap) -> Result<Ticks, ModelError> {
        durations.check_against(self.program)?;
        let mut finish = vec![0 as Ticks; self.len()];
        for &v in &self.order {
            let start = self.preds[v].iter().map(|&p| finish[p]).max().unwrap_or(0);
            finish[v] = start + durations.get(self.names[v]);
        }
        Ok(finish.into_iter().max().unwrap_or(0))
    }

    pub(crate) fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub(crate) fn preds_of(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    pub(crate) fn is_ancestor(&self, anc: usize, of: usize) -> bool {
        self.ancestors[of].contains(&anc)
    }
}

/// Kahn's algorithm with smallest-index-first selection. On a cycle,
/// returns the indices left unprocessed.
fn kahn(preds: &[Vec<usize>], succs: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = indegree
        .iter()
        .enumerate()
        .filter(|(_, d)| **d == 0)
        .map(|(i, _)| Reverse(i))
        .collect();
    let mut order = Vec::with_capacity(preds.len());
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &s in &succs[v] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(Reverse(s));
            }
        }
    }
    if order.len() == preds.len() {
        Ok(order)
    } else {
        Err((0..preds.len()).filter(|&i| indegree[i] > 0).collect())
    }
}

/// Extracts one cycle from the nodes Kahn's algorithm could not process,
/// listed in edge direction and rotated to start at the smallest index.
fn find_cycle(preds: &[Vec<usize>], remaining: &[usize]) -> Vec<usize> {
    let stuck: BTreeSet<usize> = remaining.iter().copied().collect();
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    let mut path = Vec::new();
    let mut v = remaining[0];
    // every stuck node has a stuck predecessor, so this walk must repeat
    while !seen.contains_key(&v) {
        seen.insert(v, path.len());
        path.push(v);
        v = *preds[v]
            .iter()
            .find(|p| stuck.contains(p))
            .expect("stuck node without stuck predecessor");
    }
    let mut cycle = path.split_off(seen[&v]);
    cycle.reverse();
    let min_pos = cycle
        .iter()
        .enumerate()
        .min_by_key(|(_, n)| **n)
        .map(|(i, _)| i)
        .unwrap_or(0);
    cycle.rotate_left(min_pos);
    cycle
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionInstance, ResourceInstance};

    /// Dependency graph with edges A->D, B->D, A->E, C->E, D->E, each action
    /// on its own resource.
    fn fork_join() -> Program {
        let mut b = Program::builder("fork_join", "Generic");
        for r in ["ra", "rb", "rc", "rd", "re"] {
            b = b.resource(ResourceInstance::new(r, "Unit"));
        }
        b.action(ActionInstance::new("A", "Task", "ra"))
            .action(ActionInstance::new("B", "Task", "rb"))
            .action(ActionInstance::new("C", "Task", "rc"))
            .action(
                ActionInstance::new("D", "Task", "rd")
                    .after("A")
                    .unwrap()
                    .after("B")
                    .unwrap(),
            )
            .action(
                ActionInstance::new("E", "Task", "re")
                    .after("A")
                    .unwrap()
                    .after("C")
                    .unwrap()
                    .after("D")
                    .unwrap(),
            )
            .build()
            .unwrap()
    }

    fn names<'a>(v: &[&'a str]) -> BTreeSet<&'a str> {
        v.iter().copied().collect()
    }

    #[test]
    fn fork_join_successors() {
        let p = fork_join();
        let g = p.dependency_graph().unwrap();
        assert_eq!(g.successors("A").unwrap(), names(&["D", "E"]));
        assert!(g.successors("E").unwrap().is_empty());
        assert_eq!(g.successors("A").unwrap(), p.successors("A").unwrap());
    }

    #[test]
    fn fork_join_ancestors() {
        let p = fork_join();
        let g = p.dependency_graph().unwrap();
        assert_eq!(g.ancestors("E").unwrap(), names(&["A", "B", "C", "D"]));
        assert!(g.ancestors("A").unwrap().is_empty());
        assert_eq!(g.descendants("B").unwrap(), names(&["D", "E"]));
        assert_eq!(g.ancestors("Z"), Err(ModelError::UnknownAction("Z".into())));
    }

    #[test]
    fn chain_ancestors() {
        let p = Program::builder("chain", "Generic")
            .resource(ResourceInstance::new("r", "Unit"))
            .action(ActionInstance::new("A", "Task", "r"))
            .action(ActionInstance::new("B", "Task", "r").after("A").unwrap())
            .action(ActionInstance::new("C", "Task", "r").after("B").unwrap())
            .build()
            .unwrap();
        let g = p.dependency_graph().unwrap();
        assert_eq!(g.ancestors("C").unwrap(), names(&["A", "B"]));
    }

    #[test]
    fn fork_join_parallelism() {
        let p = fork_join();
        let g = p.dependency_graph().unwrap();
        assert!(g.potentially_parallel("C", "D").unwrap());
        assert!(!g.potentially_parallel("A", "D").unwrap());
        assert_eq!(
            g.potentially_parallel("A", "A"),
            Err(ModelError::SameAction("A".into()))
        );
    }

    #[test]
    fn same_resource_never_parallel() {
        let p = Program::builder("p", "Generic")
            .resource(ResourceInstance::new("r", "Unit"))
            .action(ActionInstance::new("A", "Task", "r"))
            .action(ActionInstance::new("B", "Task", "r"))
            .build()
            .unwrap();
        let g = p.dependency_graph().unwrap();
        assert!(!g.potentially_parallel("A", "B").unwrap());
    }

    #[test]
    fn fork_join_topological_order() {
        let p = fork_join();
        let g = p.dependency_graph().unwrap();
        assert_eq!(g.topological_order(), vec!["A", "B", "C", "D", "E"]);
    }

    #[test]
    fn empty_program_order() {
        let p = Program::builder("empty", "Generic").build().unwrap();
        assert!(p.dependency_graph().unwrap().topological_order().is_empty());
        assert_eq!(
            p.dependency_graph()
                .unwrap()
                .critical_path_length(&DurationMap::default()),
            Ok(0)
        );
    }

    #[test]
    fn two_cycle_reported() {
        let p = Program::builder("p", "Generic")
            .resource(ResourceInstance::new("r", "Unit"))
            .action(ActionInstance::new("A", "Task", "r").after("B").unwrap())
            .action(ActionInstance::new("B", "Task", "r").after("A").unwrap())
            .build()
            .unwrap();
        assert_eq!(
            p.dependency_graph().unwrap_err(),
            ModelError::CyclicGraph(vec!["A".into(), "B".into()])
        );
    }

    #[test]
    fn cycle_listed_in_edge_direction() {
        // A -> C -> B -> A, plus an acyclic tail D after A
        let p = Program::builder("p", "Generic")
            .resource(ResourceInstance::new("r", "Unit"))
            .action(ActionInstance::new("A", "Task", "r").after("B").unwrap())
            .action(ActionInstance::new("B", "Task", "r").after("C").unwrap())
            .action(ActionInstance::new("C", "Task", "r").after("A").unwrap())
            .action(ActionInstance::new("D", "Task", "r").after("A").unwrap())
            .build()
            .unwrap();
        assert_eq!(
            p.dependency_graph().unwrap_err(),
            ModelError::CyclicGraph(vec!["A".into(), "C".into(), "B".into()])
        );
    }

    #[test]
    fn fork_join_critical_path() {
        let p = fork_join();
        let g = p.dependency_graph().unwrap();
        assert_eq!(g.critical_path_length(&DurationMap::default()), Ok(3));
        let d = DurationMap::default().with("C", 5).unwrap();
        assert_eq!(g.critical_path_length(&d), Ok(6));
        let d = DurationMap::default().with("Q", 5).unwrap();
        assert_eq!(
            g.critical_path_length(&d),
            Err(ModelError::UnknownAction("Q".into()))
        );
    }

    #[test]
    fn single_action_critical_path() {
        let p = Program::builder("p", "Generic")
            .resource(ResourceInstance::new("r", "Unit"))
            .action(ActionInstance::new("X", "Task", "r"))
            .build()
            .unwrap();
        let d = DurationMap::default().with("X", 7).unwrap();
        assert_eq!(
            p.dependency_graph().unwrap().critical_path_length(&d),
            Ok(7)
        );
    }
}
