//! Graph and measure primitives on monomial matrices.
//!
//! [`classify`] splits a support graph into closed communicating classes and
//! transient states. [`invariant_measure`] and [`periodic_components`] give
//! leading-order stationary measures of a class, and [`entrance_law`] the
//! λ→0 absorption law of transient states into the classes.

mod entrance;
mod measure;

use std::collections::BTreeSet;

use num_integer::Integer;

pub use entrance::{entrance_law, EntranceLaw};
pub use measure::{
    invariant_measure, invariant_measure_by_exit_rates, jump_chain, periodic_components,
    JumpChain, MeasureOptions, MonomialMeasure, DEFAULT_CLASS_CAP,
};

use crate::matrix::MonomialMatrix;

/// A directed graph on `0..n` that may carry self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    succ: Vec<BTreeSet<usize>>,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Digraph {
            succ: vec![BTreeSet::new(); n],
        }
    }

    /// Arcs of the off-diagonal support of a monomial matrix (no self-loops).
    pub fn support_of(matrix: &MonomialMatrix) -> Self {
        let mut g = Digraph::new(matrix.size());
        for (i, j, _) in matrix.entries() {
            g.add_arc(i, j);
        }
        g
    }

    pub fn size(&self) -> usize {
        self.succ.len()
    }

    pub fn add_arc(&mut self, from: usize, to: usize) {
        self.succ[from].insert(to);
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(&to)
    }

    pub fn successors(&self, from: usize) -> impl Iterator<Item = usize> + '_ {
        self.succ[from].iter().copied()
    }

    /// The graph with vertices renamed by `perm` (vertex `v` becomes `perm[v]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut g = Digraph::new(self.size());
        for (u, out) in self.succ.iter().enumerate() {
            for &v in out {
                g.add_arc(perm[u], perm[v]);
            }
        }
        g
    }
}

/// Recurrence classes and transient states of a support graph.
///
/// Classes are sorted by their smallest member and members are ascending.
/// `period[k]` belongs to `recurrent[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecomposition {
    pub recurrent: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
    pub period: Vec<u64>,
}

impl ClassDecomposition {
    /// Index of the class containing `state`, if it is recurrent.
    pub fn class_of(&self, state: usize) -> Option<usize> {
        self.recurrent.iter().position(|c| c.binary_search(&state).is_ok())
    }

    pub fn num_states(&self) -> usize {
        self.transient.len() + self.recurrent.iter().map(Vec::len).sum::<usize>()
    }

    /// Per-state class index (`None` for transient states).
    pub fn class_index(&self) -> Vec<Option<usize>> {
        let mut idx = vec![None; self.num_states()];
        for (k, class) in self.recurrent.iter().enumerate() {
            for &s in class {
                idx[s] = Some(k);
            }
        }
        idx
    }
}

/// Strongly connected components (iterative Tarjan), each sorted ascending.
pub fn strongly_connected_components(g: &Digraph) -> Vec<Vec<usize>> {
    let n = g.size();
    let succ: Vec<Vec<usize>> = (0..n).map(|u| g.successors(u).collect()).collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (u, ref mut pos)) = call.last_mut() {
            if *pos < succ[u].len() {
                let v = succ[u][*pos];
                *pos += 1;
                if index[v] == usize::MAX {
                    index[v] = next;
                    low[v] = next;
                    next += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    call.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[u]);
                }
                if low[u] == index[u] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == u {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Splits the vertices into closed strongly connected classes and the rest.
pub fn classify(g: &Digraph) -> ClassDecomposition {
    let n = g.size();
    let comps = strongly_connected_components(g);
    let mut comp_of = vec![0; n];
    for (k, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = k;
        }
    }
    let mut recurrent = Vec::new();
    let mut transient = Vec::new();
    for (k, comp) in comps.iter().enumerate() {
        let closed = comp
            .iter()
            .all(|&u| g.successors(u).all(|v| comp_of[v] == k));
        if closed {
            recurrent.push(comp.clone());
        } else {
            transient.extend_from_slice(comp);
        }
    }
    recurrent.sort_by_key(|c| c[0]);
    transient.sort_unstable();
    let period = recurrent.iter().map(|c| class_period(g, c)).collect();
    ClassDecomposition {
        recurrent,
        transient,
        period,
    }
}

/// BFS levels of `class` from its first member, following arcs inside the class.
pub(crate) fn bfs_levels(g: &Digraph, class: &[usize]) -> Vec<(usize, u64)> {
    let inside: BTreeSet<usize> = class.iter().copied().collect();
    let mut level = std::collections::BTreeMap::new();
    let mut queue = std::collections::VecDeque::new();
    level.insert(class[0], 0u64);
    queue.push_back(class[0]);
    while let Some(u) = queue.pop_front() {
        let lu = level[&u];
        for v in g.successors(u) {
            if inside.contains(&v) && !level.contains_key(&v) {
                level.insert(v, lu + 1);
                queue.push_back(v);
            }
        }
    }
    level.into_iter().collect()
}

/// gcd of cycle lengths in a strongly connected class; 1 for a class without cycles.
fn class_period(g: &Digraph, class: &[usize]) -> u64 {
    let levels: std::collections::BTreeMap<usize, u64> = bfs_levels(g, class).into_iter().collect();
    let mut d = 0u64;
    for &u in class {
        for v in g.successors(u) {
            if let Some(&lv) = levels.get(&v) {
                let lu = levels[&u];
                d = d.gcd(&(lu + 1).abs_diff(lv));
            }
        }
    }
    d.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, arcs: &[(usize, usize)]) -> Digraph {
        let mut g = Digraph::new(n);
        for &(u, v) in arcs {
            g.add_arc(u, v);
        }
        g
    }

    #[test]
    fn worked_example_first_level_support() {
        // States 1..8 as 0..7: self-loops at 1,2,3,4,6; 5 → {1,6,7}; 7 ↔ 8.
        let g = graph(
            8,
            &[(0, 0), (1, 1), (2, 2), (3, 3), (5, 5), (4, 0), (4, 5), (4, 6), (6, 7), (7, 6)],
        );
        let d = classify(&g);
        assert_eq!(d.recurrent, vec![vec![0], vec![1], vec![2], vec![3], vec![5], vec![6, 7]]);
        assert_eq!(d.transient, vec![4]);
        assert_eq!(d.period, vec![1, 1, 1, 1, 1, 2]);
    }

    #[test]
    fn complete_graph_is_aperiodic() {
        let g = graph(3, &[(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
        let d = classify(&g);
        assert_eq!(d.recurrent, vec![vec![0, 1, 2]]);
        assert_eq!(d.period, vec![1]);
    }

    #[test]
    fn self_loop_singleton() {
        let d = classify(&graph(1, &[(0, 0)]));
        assert_eq!(d.recurrent, vec![vec![0]]);
        assert_eq!(d.period, vec![1]);
    }

    #[test]
    fn cycle_periods() {
        let d = classify(&graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]));
        assert_eq!(d.period, vec![4]);
        let d = classify(&graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (1, 0)]));
        assert_eq!(d.period, vec![2]);
    }

    #[test]
    fn chain_into_sink() {
        let d = classify(&graph(3, &[(0, 1), (1, 2)]));
        assert_eq!(d.recurrent, vec![vec![2]]);
        assert_eq!(d.transient, vec![0, 1]);
        assert_eq!(d.class_of(2), Some(0));
        assert_eq!(d.class_of(0), None);
    }

    #[test]
    fn deep_path_does_not_overflow_stack() {
        let n = 200_000;
        let arcs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let d = classify(&graph(n, &arcs));
        assert_eq!(d.recurrent, vec![vec![n - 1]]);
    }
}
