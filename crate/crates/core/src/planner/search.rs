use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::heuristics::{h_add, h_max, RelaxedGraph};
use super::plan::Plan;
use super::task::{BitSet, GroundTask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Bfs,
    AstarHmax,
    GbfsHadd,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Bfs, Strategy::AstarHmax, Strategy::GbfsHadd];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Bfs => "bfs",
            Strategy::AstarHmax => "astar-hmax",
            Strategy::GbfsHadd => "gbfs-hadd",
        }
    }

    /// Whether returned plans are guaranteed shortest.
    pub fn is_optimal(self) -> bool {
        !matches!(self, Strategy::GbfsHadd)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected bfs, astar-hmax or gbfs-hadd)"))
    }
}

/// Search budget. `None` means unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_expansions: Option<u64>,
    #[serde(with = "opt_millis", default)]
    pub max_time: Option<Duration>,
}

mod opt_millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&(d.as_millis() as u64)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<u64>::deserialize(d)?.map(Duration::from_millis))
    }
}

impl Limits {
    pub fn expansions(n: u64) -> Self {
        Limits { max_expansions: Some(n), max_time: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Solved(Plan),
    Unsolvable,
    ResourceLimit { expansions: u64, elapsed: Duration },
}

impl SolveOutcome {
    pub fn plan(&self) -> Option<&Plan> {
        match self {
            SolveOutcome::Solved(p) => Some(p),
            _ => None,
        }
    }
}

/// Explored states with parent pointers for plan extraction.
struct Space {
    states: Vec<BitSet>,
    parent: Vec<Option<(usize, usize)>>,
    index: HashMap<BitSet, usize>,
}

impl Space {
    fn new(init: &BitSet) -> Self {
        let mut s = Space { states: Vec::new(), parent: Vec::new(), index: HashMap::new() };
        s.insert(init.clone(), None);
        s
    }

    /// Returns the node id and whether the state is new.
    fn insert(&mut self, state: BitSet, parent: Option<(usize, usize)>) -> (usize, bool) {
        match self.index.entry(state) {
            Entry::Occupied(e) => (*e.get(), false),
            Entry::Vacant(e) => {
                let id = self.states.len();
                self.states.push(e.key().clone());
                self.parent.push(parent);
                e.insert(id);
                (id, true)
            }
        }
    }

    fn plan(&self, task: &GroundTask, mut node: usize) -> Plan {
        let mut steps = Vec::new();
        while let Some((p, a)) = self.parent[node] {
            steps.push(task.actions[a].action.clone());
            node = p;
        }
        steps.reverse();
        Plan::new(steps)
    }
}

struct Budget {
    limits: Limits,
    start: Instant,
    expansions: u64,
}

impl Budget {
    fn new(limits: Limits) -> Self {
        Budget { limits, start: Instant::now(), expansions: 0 }
    }

    /// Counts one expansion; returns the limit outcome when exceeded.
    fn expand(&mut self) -> Option<SolveOutcome> {
        let over_count = self.limits.max_expansions.is_some_and(|m| self.expansions >= m);
        // the clock is read every 256 expansions
        let over_time = self.expansions.is_multiple_of(256)
            && self.limits.max_time.is_some_and(|t| self.start.elapsed() >= t);
        if over_count || over_time {
            return Some(SolveOutcome::ResourceLimit { expansions: self.expansions, elapsed: self.start.elapsed() });
        }
        self.expansions += 1;
        None
    }
}

/// Solves `task` with the chosen strategy. Successors are generated in action
/// index order and equal priorities are broken by insertion order, so the
/// result depends only on the task and strategy.
pub fn solve(task: &GroundTask, strategy: Strategy, limits: Limits) -> SolveOutcome {
    match strategy {
        Strategy::Bfs => bfs(task, limits),
        Strategy::AstarHmax => astar(task, limits),
        Strategy::GbfsHadd => gbfs(task, limits),
    }
}

fn bfs(task: &GroundTask, limits: Limits) -> SolveOutcome {
    let mut space = Space::new(&task.init);
    if task.is_goal(&task.init) {
        return SolveOutcome::Solved(Plan::default());
    }
    let mut budget = Budget::new(limits);
    let mut queue = VecDeque::from([0usize]);
    while let Some(node) = queue.pop_front() {
        if let Some(stop) = budget.expand() {
            return stop;
        }
        let state = space.states[node].clone();
        for (i, a) in task.actions.iter().enumerate() {
            if !a.applicable(&state) {
                continue;
            }
            let next = a.apply(&state);
            let goal = task.is_goal(&next);
            let (id, fresh) = space.insert(next, Some((node, i)));
            if fresh {
                if goal {
                    return SolveOutcome::Solved(space.plan(task, id));
                }
                queue.push_back(id);
            }
        }
    }
    SolveOutcome::Unsolvable
}

fn astar(task: &GroundTask, limits: Limits) -> SolveOutcome {
    let graph = RelaxedGraph::new(task);
    let mut space = Space::new(&task.init);
    let Some(h0) = h_max(task, &graph, &task.init) else {
        return SolveOutcome::Unsolvable;
    };
    let mut g: Vec<u64> = vec![0];
    let mut h: Vec<u64> = vec![h0];
    let mut counter = 0u64;
    let mut open = BinaryHeap::from([Reverse((h0, 0u64, counter, 0usize))]);
    let mut budget = Budget::new(limits);
    while let Some(Reverse((_, gn, _, node))) = open.pop() {
        if gn > g[node] {
            continue;
        }
        let state = space.states[node].clone();
        if task.is_goal(&state) {
            return SolveOutcome::Solved(space.plan(task, node));
        }
        if let Some(stop) = budget.expand() {
            return stop;
        }
        for (i, a) in task.actions.iter().enumerate() {
            if !a.applicable(&state) {
                continue;
            }
            let next = a.apply(&state);
            let gc = gn + 1;
            let (id, fresh) = space.insert(next, Some((node, i)));
            if fresh {
                match h_max(task, &graph, &space.states[id]) {
                    Some(hv) => {
                        g.push(gc);
                        h.push(hv);
                    }
                    None => {
                        // dead end: keep the node but never queue it
                        g.push(u64::MAX);
                        h.push(u64::MAX);
                        continue;
                    }
                }
            } else if gc < g[id] && h[id] != u64::MAX {
                // reopen through a cheaper path
                g[id] = gc;
                space.parent[id] = Some((node, i));
            } else {
                continue;
            }
            counter += 1;
            open.push(Reverse((gc + h[id], gc, counter, id)));
        }
    }
    SolveOutcome::Unsolvable
}

fn gbfs(task: &GroundTask, limits: Limits) -> SolveOutcome {
    let graph = RelaxedGraph::new(task);
    let mut space = Space::new(&task.init);
    let Some(h0) = h_add(task, &graph, &task.init) else {
        return SolveOutcome::Unsolvable;
    };
    let mut counter = 0u64;
    let mut open = BinaryHeap::from([Reverse((h0, counter, 0usize))]);
    let mut budget = Budget::new(limits);
    while let Some(Reverse((_, _, node))) = open.pop() {
        let state = space.states[node].clone();
        if task.is_goal(&state) {
            return SolveOutcome::Solved(space.plan(task, node));
        }
        if let Some(stop) = budget.expand() {
            return stop;
        }
        for (i, a) in task.actions.iter().enumerate() {
            if !a.applicable(&state) {
                continue;
            }
            let (id, fresh) = space.insert(a.apply(&state), Some((node, i)));
            if !fresh {
                continue;
            }
            if let Some(hv) = h_add(task, &graph, &space.states[id]) {
                counter += 1;
                open.push(Reverse((hv, counter, id)));
            }
        }
    }
    SolveOutcome::Unsolvable
}

/// Shortest plan length by plain breadth-first enumeration of the reachable
/// space, with no duplicate-state hashing tricks beyond a visited map. Used
/// as a reference in tests. `None` when unsolvable or more than `cap` states.
pub fn oracle_shortest_length(task: &GroundTask, cap: usize) -> Option<Option<usize>> {
    let mut dist: HashMap<BitSet, usize> = HashMap::from([(task.init.clone(), 0)]);
    let mut frontier = vec![task.init.clone()];
    if task.is_goal(&task.init) {
        return Some(Some(0));
    }
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        let mut next_frontier = Vec::new();
        for s in &frontier {
            for a in task.actions.iter().filter(|a| a.applicable(s)) {
                let n = a.apply(s);
                if dist.contains_key(&n) {
                    continue;
                }
                if task.is_goal(&n) {
                    return Some(Some(depth));
                }
                dist.insert(n.clone(), depth);
                if dist.len() > cap {
                    return None;
                }
                next_frontier.push(n);
            }
        }
        frontier = next_frontier;
    }
    Some(None)
}
