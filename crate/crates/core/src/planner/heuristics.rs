use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::task::{BitSet, GroundTask};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Combine {
    Sum,
    Max,
}

/// Precomputed consumer lists so each heuristic call is linear in the task.
#[derive(Clone, Debug)]
pub struct RelaxedGraph {
    consumers: Vec<Vec<usize>>,
    no_pre: Vec<usize>,
}

impl RelaxedGraph {
    pub fn new(task: &GroundTask) -> Self {
        let mut consumers = vec![Vec::new(); task.width()];
        let mut no_pre = Vec::new();
        for (i, a) in task.actions.iter().enumerate() {
            if a.pre.is_empty() {
                no_pre.push(i);
            }
            for &p in &a.pre {
                consumers[p].push(i);
            }
        }
        RelaxedGraph { consumers, no_pre }
    }
}

fn relaxed_cost(task: &GroundTask, graph: &RelaxedGraph, state: &BitSet, mode: Combine) -> Option<u64> {
    let width = task.width();
    let mut cost = vec![u64::MAX; width];
    let mut done = vec![false; width];
    let mut remaining: Vec<usize> = task.actions.iter().map(|a| a.pre.len()).collect();
    let mut pre_cost = vec![0u64; task.actions.len()];
    let mut heap = BinaryHeap::new();

    for i in state.iter() {
        cost[i] = 0;
        heap.push(Reverse((0u64, i)));
    }
    let fire = |a: usize, c: u64, cost: &mut Vec<u64>, heap: &mut BinaryHeap<Reverse<(u64, usize)>>| {
        let c = c.saturating_add(1);
        for &q in &task.actions[a].add {
            if c < cost[q] {
                cost[q] = c;
                heap.push(Reverse((c, q)));
            }
        }
    };
    for &a in &graph.no_pre {
        fire(a, 0, &mut cost, &mut heap);
    }
    while let Some(Reverse((c, p))) = heap.pop() {
        if done[p] || c > cost[p] {
            continue;
        }
        done[p] = true;
        for &a in &graph.consumers[p] {
            pre_cost[a] = match mode {
                Combine::Sum => pre_cost[a].saturating_add(c),
                Combine::Max => pre_cost[a].max(c),
            };
            remaining[a] -= 1;
            if remaining[a] == 0 {
                fire(a, pre_cost[a], &mut cost, &mut heap);
            }
        }
    }

    let mut total = 0u64;
    for &g in &task.goal {
        if cost[g] == u64::MAX {
            return None;
        }
        total = match mode {
            Combine::Sum => total.saturating_add(cost[g]),
            Combine::Max => total.max(cost[g]),
        };
    }
    Some(total)
}

/// Additive delete-relaxation estimate; `None` when the goal is relaxed-unreachable.
pub fn h_add(task: &GroundTask, graph: &RelaxedGraph, state: &BitSet) -> Option<u64> {
    relaxed_cost(task, graph, state, Combine::Sum)
}

/// Max delete-relaxation estimate; admissible for unit costs.
pub fn h_max(task: &GroundTask, graph: &RelaxedGraph, state: &BitSet) -> Option<u64> {
    relaxed_cost(task, graph, state, Combine::Max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ActionRef;

    fn atoms(n: usize) -> Vec<crate::model::GroundAtom> {
        (0..n).map(|i| format!("(p{i:02})").parse().unwrap()).collect()
    }

    fn act(name: &str) -> ActionRef {
        ActionRef { name: name.into(), args: vec![] }
    }

    #[test]
    fn zero_at_goal_and_one_step_gap() {
        let t = GroundTask::from_parts(atoms(2), vec![(act("a"), vec![0], vec![1], vec![])], [0], vec![1]);
        let g = RelaxedGraph::new(&t);
        assert_eq!(h_add(&t, &g, &t.init), Some(1));
        assert_eq!(h_max(&t, &g, &t.init), Some(1));
        let at_goal = BitSet::from_indices(2, [0, 1]);
        assert_eq!(h_add(&t, &g, &at_goal), Some(0));
        assert_eq!(h_max(&t, &g, &at_goal), Some(0));
    }

    #[test]
    fn sum_versus_max() {
        // two independent one-step subgoals
        let t = GroundTask::from_parts(
            atoms(3),
            vec![(act("a"), vec![0], vec![1], vec![]), (act("b"), vec![0], vec![2], vec![])],
            [0],
            vec![1, 2],
        );
        let g = RelaxedGraph::new(&t);
        assert_eq!(h_add(&t, &g, &t.init), Some(2));
        assert_eq!(h_max(&t, &g, &t.init), Some(1));
    }

    #[test]
    fn unreachable_is_none() {
        let t = GroundTask::from_parts(atoms(2), vec![], [0], vec![1]);
        let g = RelaxedGraph::new(&t);
        assert_eq!(h_add(&t, &g, &t.init), None);
        assert_eq!(h_max(&t, &g, &t.init), None);
    }
}
