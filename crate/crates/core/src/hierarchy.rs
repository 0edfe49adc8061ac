//! Multi-scale aggregation of a perturbed chain into its limit model.
//!
//! Starting from the chain itself, each level picks the threshold `α_k`
//! (the slowest exit scale of the current recurrent nodes), keeps the
//! transitions of order at most `α_k`, finds the classes that leading-order
//! jumps cannot leave, and collapses each class into one node whose exits
//! are weighted by the class's invariant measure. The loop stops once the
//! threshold reaches 1, i.e. the remaining transitions happen on the time
//! scale of the discount rate or slower.
//!
//! The terminal level yields the entrance law `μ`, the generator `A` of the
//! jumps between final classes and the within-class frequencies `M`, so
//! that the limit position is `P_t = μ e^{At} M`.

use nalgebra::DMatrix;

use crate::asymptotics::{Monomial, RationalExp};
use crate::chain::PerturbedChain;
use crate::error::{Error, Result};
use crate::matrix::MonomialMatrix;
use crate::structure::{
    classify, entrance_law, invariant_measure, ClassDecomposition, Digraph, EntranceLaw,
    MeasureOptions, MonomialMeasure,
};

/// One aggregation step.
///
/// `restricted`, `decomposition` and `measures` live on the previous level's
/// nodes. `aggregated` lives on this level's nodes, `parent` maps previous
/// nodes to this level's nodes and `members` lists the original states of
/// each node of this level.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyLevel {
    pub index: usize,
    pub alpha: RationalExp,
    pub restricted: MonomialMatrix,
    pub decomposition: ClassDecomposition,
    pub measures: Vec<MonomialMeasure>,
    pub aggregated: MonomialMatrix,
    pub parent: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl HierarchyLevel {
    pub fn num_nodes(&self) -> usize {
        self.members.len()
    }

    /// Whether node `node` of this level is one of its recurrent classes.
    pub fn is_class_node(&self, node: usize) -> bool {
        self.class_node_index(node).is_some()
    }

    /// The class index (into `decomposition.recurrent`) represented by a node.
    pub fn class_node_index(&self, node: usize) -> Option<usize> {
        self.decomposition
            .recurrent
            .iter()
            .position(|class| self.parent[class[0]] == node)
    }
}

/// The terminal output of the aggregation.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitModel {
    pub states: Vec<String>,
    /// Final classes as sets of original states, ordered by smallest member.
    pub classes: Vec<Vec<usize>>,
    /// Entrance law, original state × class.
    pub mu: DMatrix<f64>,
    /// Generator over the classes.
    pub a: DMatrix<f64>,
    /// Within-class frequencies, class × original state.
    pub m: DMatrix<f64>,
    /// Averaging period of the sub-unit skeleton.
    pub n: u64,
    pub levels: Vec<HierarchyLevel>,
    pub terminal_alpha: RationalExp,
}

impl LimitModel {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// The threshold sequence, ending with the terminal threshold.
    pub fn alphas(&self) -> Vec<RationalExp> {
        let mut out: Vec<RationalExp> = self.levels.iter().map(|l| l.alpha).collect();
        if out.last() != Some(&self.terminal_alpha) {
            out.push(self.terminal_alpha);
        }
        out
    }

    /// Index of the final class containing an original state.
    pub fn class_of(&self, state: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&state))
    }
}

/// The chain seen as level 0: original states and entries.
struct Base<'a> {
    matrix: &'a MonomialMatrix,
    members: Vec<Vec<usize>>,
}

/// `α` for the level after `level`: the smallest exit exponent of its class nodes.
pub fn next_threshold(level: &HierarchyLevel) -> RationalExp {
    (0..level.num_nodes())
        .filter(|&v| level.is_class_node(v))
        .map(|v| level.aggregated.row_min_exp(v))
        .min()
        .unwrap_or(RationalExp::INFINITY)
}

/// Classes of a restricted matrix under its leading-order jumps: a node
/// belongs to a class when the arcs attaining its row minimum cannot lead
/// out of that class.
pub fn leading_jump_classes(restricted: &MonomialMatrix) -> ClassDecomposition {
    let n = restricted.size();
    let mut g = Digraph::new(n);
    for v in 0..n {
        let min = restricted.row_min_exp(v);
        for (w, m) in restricted.row(v) {
            if m.exp() == min {
                g.add_arc(v, w);
            }
        }
    }
    classify(&g)
}

/// Builds level `index` on top of a previous aggregated matrix.
pub fn build_level(
    previous: &MonomialMatrix,
    previous_members: &[Vec<usize>],
    index: usize,
    alpha: RationalExp,
    opts: &MeasureOptions,
) -> Result<HierarchyLevel> {
    let restricted = previous.filtered(|_, _, m| m.exp() <= alpha);
    let decomposition = leading_jump_classes(&restricted);
    let measures = decomposition
        .recurrent
        .iter()
        .map(|class| invariant_measure(&restricted, class, opts))
        .collect::<Result<Vec<_>>>()?;

    // Nodes: one per class, one per transient node, ordered by smallest original state.
    let mut groups: Vec<(Vec<usize>, Option<usize>)> = decomposition
        .recurrent
        .iter()
        .cloned()
        .enumerate()
        .map(|(c, class)| (class, Some(c)))
        .chain(decomposition.transient.iter().map(|&t| (vec![t], None)))
        .collect();
    let min_member = |g: &[usize]| g.iter().map(|&v| previous_members[v][0]).min();
    groups.sort_by_key(|(g, _)| min_member(g));

    let mut parent = vec![0; previous.size()];
    let mut members = Vec::with_capacity(groups.len());
    for (node, (group, _)) in groups.iter().enumerate() {
        let mut states: Vec<usize> = Vec::new();
        for &v in group {
            parent[v] = node;
            states.extend_from_slice(&previous_members[v]);
        }
        states.sort_unstable();
        members.push(states);
    }

    let mut aggregated = MonomialMatrix::new(groups.len());
    for (node, (group, class)) in groups.iter().enumerate() {
        for &z in group {
            let weight = match class {
                Some(c) => measures[*c].get(z),
                None => Monomial::ONE,
            };
            for (z2, m) in previous.row(z) {
                let dest = parent[z2];
                if dest != node {
                    aggregated.accumulate(node, dest, weight.checked_mul(m)?);
                }
            }
        }
    }

    Ok(HierarchyLevel {
        index,
        alpha,
        restricted,
        decomposition,
        measures,
        aggregated,
        parent,
        members,
    })
}

/// The level used when the chain is critical from the start: every state is
/// its own class.
fn identity_level(base: &Base<'_>, alpha: RationalExp) -> HierarchyLevel {
    let n = base.matrix.size();
    let restricted = MonomialMatrix::new(n);
    let decomposition = classify(&Digraph::new(n));
    HierarchyLevel {
        index: 1,
        alpha,
        measures: (0..n).map(MonomialMeasure::dirac).collect(),
        aggregated: base.matrix.clone(),
        parent: (0..n).collect(),
        members: base.members.clone(),
        restricted,
        decomposition,
    }
}

pub fn analyze(chain: &PerturbedChain) -> Result<LimitModel> {
    analyze_with(chain, &MeasureOptions::default())
}

pub fn analyze_with(chain: &PerturbedChain, opts: &MeasureOptions) -> Result<LimitModel> {
    let n = chain.num_states();
    let base = Base {
        matrix: chain.entries(),
        members: (0..n).map(|s| vec![s]).collect(),
    };
    let distinct = chain.entries().distinct_exponents().len();
    let cap = n * distinct.max(1) + 1;

    let mut levels: Vec<HierarchyLevel> = Vec::new();
    let mut alpha = (0..n)
        .map(|v| base.matrix.row_min_exp(v))
        .min()
        .unwrap_or(RationalExp::INFINITY);
    if alpha >= RationalExp::ONE {
        levels.push(identity_level(&base, alpha));
    } else {
        loop {
            if levels.len() >= cap {
                return Err(Error::Internal(format!(
                    "aggregation did not terminate within {cap} levels"
                )));
            }
            let level = {
                let (matrix, members) = match levels.last() {
                    Some(l) => (&l.aggregated, l.members.as_slice()),
                    None => (base.matrix, base.members.as_slice()),
                };
                build_level(matrix, members, levels.len() + 1, alpha, opts)?
            };
            let next = next_threshold(&level);
            levels.push(level);
            if next <= alpha {
                return Err(Error::Internal(format!(
                    "threshold did not increase: {alpha} then {next}"
                )));
            }
            alpha = next;
            if alpha >= RationalExp::ONE {
                break;
            }
        }
    }
    assemble(chain, levels, alpha, opts)
}

fn assemble(
    chain: &PerturbedChain,
    levels: Vec<HierarchyLevel>,
    terminal_alpha: RationalExp,
    opts: &MeasureOptions,
) -> Result<LimitModel> {
    let n = chain.num_states();
    let last = levels.last().expect("at least one level");
    let num_classes = last.decomposition.recurrent.len();

    let entrance: EntranceLaw = entrance_law(&last.restricted, &last.decomposition, opts)?;

    // Original state → node of the previous-to-last level.
    let mut prev_node: Vec<usize> = (0..n).collect();
    for level in &levels[..levels.len() - 1] {
        for v in prev_node.iter_mut() {
            *v = level.parent[*v];
        }
    }

    let class_of_node: Vec<Option<usize>> = (0..last.num_nodes())
        .map(|v| last.class_node_index(v))
        .collect();
    let classes: Vec<Vec<usize>> = (0..num_classes)
        .map(|c| {
            let node = last.parent[last.decomposition.recurrent[c][0]];
            last.members[node].clone()
        })
        .collect();

    let mu = DMatrix::from_fn(n, num_classes, |s, c| entrance.row(prev_node[s])[c]);

    // Entrance row of a node of the last level.
    let node_entrance = |node: usize| -> Vec<f64> {
        match class_of_node[node] {
            Some(c) => {
                let mut row = vec![0.0; num_classes];
                row[c] = 1.0;
                row
            }
            None => {
                let prev = last
                    .parent
                    .iter()
                    .position(|&p| p == node)
                    .expect("parent map is surjective");
                entrance.row(prev).to_vec()
            }
        }
    };

    let mut a = DMatrix::zeros(num_classes, num_classes);
    if terminal_alpha.is_finite() {
        for node in 0..last.num_nodes() {
            let Some(r) = class_of_node[node] else { continue };
            for (dest, m) in last.aggregated.row(node) {
                if m.exp() < RationalExp::ONE {
                    return Err(Error::Internal(format!(
                        "terminal class exit of order {} below 1",
                        m.exp()
                    )));
                }
                if m.exp() > RationalExp::ONE {
                    continue;
                }
                for (r2, p) in node_entrance(dest).into_iter().enumerate() {
                    if r2 != r {
                        a[(r, r2)] += m.coeff() * p;
                    }
                }
            }
        }
        for r in 0..num_classes {
            let off: f64 = (0..num_classes).filter(|&c| c != r).map(|c| a[(r, c)]).sum();
            a[(r, r)] = -off;
        }
    }

    let mut m = DMatrix::zeros(num_classes, n);
    for s in 0..n {
        let mut node = s;
        let mut weight = Monomial::ONE;
        for level in &levels {
            if let Some(c) = level.decomposition.class_of(node) {
                weight = weight.checked_mul(level.measures[c].get(node))?;
            }
            node = level.parent[node];
        }
        if let Some(r) = class_of_node[node] {
            m[(r, s)] = weight.limit()?;
        }
    }

    Ok(LimitModel {
        states: chain.states().to_vec(),
        classes,
        mu,
        a,
        m,
        n: chain.averaging_period(),
        levels,
        terminal_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(c: f64, num: i64, den: i64) -> Monomial {
        Monomial::new(c, RationalExp::new(num, den).unwrap()).unwrap()
    }

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| i.to_string()).collect()
    }

    fn worked_example(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64, g: f64) -> PerturbedChain {
        let third = mono(1.0 / 3.0, 0, 1);
        PerturbedChain::new(
            names(8),
            [
                (0, 1, mono(a, 1, 5)),
                (0, 3, mono(e, 3, 5)),
                (1, 2, mono(b, 2, 5)),
                (1, 3, mono(f, 4, 5)),
                (2, 0, mono(c, 3, 5)),
                (3, 4, mono(g, 1, 1)),
                (4, 0, third),
                (4, 5, third),
                (4, 7, third),
                (5, 3, mono(d, 1, 5)),
                (6, 7, Monomial::ONE),
                (7, 6, Monomial::ONE),
            ],
        )
        .unwrap()
    }

    #[test]
    fn worked_example_symbolic_values() {
        let (a, b, c, d, e, f, g) = (2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0);
        let model = analyze(&worked_example(a, b, c, d, e, f, g)).unwrap();
        let alphas: Vec<String> = model.alphas().iter().map(|x| x.to_string()).collect();
        assert_eq!(alphas, ["0", "1/5", "2/5", "3/5", "1"]);
        assert_eq!(model.classes, vec![vec![0, 1, 2], vec![3], vec![6, 7]]);
        let rate = c / a * e + c / b * f;
        let expect_a = [[-rate, rate, 0.0], [g / 3.0, -2.0 * g / 3.0, g / 3.0], [0.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((model.a[(i, j)] - expect_a[i][j]).abs() < 1e-12 * rate.max(1.0));
            }
            assert!((model.mu[(4, i)] - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(model.m.row(0).iter().copied().collect::<Vec<_>>(), [0., 0., 1., 0., 0., 0., 0., 0.]);
        assert_eq!(model.m[(1, 3)], 1.0);
        assert_eq!((model.m[(2, 6)], model.m[(2, 7)]), (0.5, 0.5));
        assert_eq!(model.n, 2);

        let step4 = &model.levels[3];
        let v = step4.decomposition.class_of(0).unwrap();
        let pi = &step4.measures[v];
        assert!(pi.get(0).approx_eq(mono(c / a, 2, 5)));
        assert!(pi.get(1).approx_eq(mono(c / b, 1, 5)));
        assert!(pi.get(2).approx_eq(Monomial::ONE));
    }

    #[test]
    fn critical_chain_is_a_single_identity_level() {
        let chain = PerturbedChain::new(names(2), [(0, 1, mono(1.0, 1, 1)), (1, 0, mono(1.0, 1, 1))]).unwrap();
        let model = analyze(&chain).unwrap();
        assert_eq!(model.levels.len(), 1);
        assert_eq!(model.mu, DMatrix::identity(2, 2));
        assert_eq!(model.m, DMatrix::identity(2, 2));
        assert_eq!(model.a, DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]));
    }

    #[test]
    fn frozen_chain_has_zero_generator() {
        let model = analyze(&PerturbedChain::new(names(3), []).unwrap()).unwrap();
        assert!(model.terminal_alpha.is_infinite());
        assert_eq!(model.a, DMatrix::zeros(3, 3));
        assert_eq!(model.alphas(), vec![RationalExp::INFINITY]);
    }

    #[test]
    fn periodic_pair_is_one_class() {
        let chain = PerturbedChain::new(
            names(2),
            [(0, 1, Monomial::ONE), (1, 0, Monomial::ONE)],
        )
        .unwrap();
        let model = analyze(&chain).unwrap();
        assert_eq!(model.classes, vec![vec![0, 1]]);
        assert_eq!(model.a, DMatrix::zeros(1, 1));
        assert_eq!(model.n, 2);
        assert_eq!((model.m[(0, 0)], model.m[(0, 1)]), (0.5, 0.5));
    }
}
