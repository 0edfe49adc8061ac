use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use crate::asymptotics::Monomial;
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::MonomialMatrix;

use super::measure::{invariant_measure, MeasureOptions};
use super::{classify, ClassDecomposition, Digraph};

const RANK_TOL: f64 = 1e-10;

/// Limit absorption law: `rows[state][class]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntranceLaw {
    pub rows: Vec<Vec<f64>>,
}

impl EntranceLaw {
    pub fn row(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }

    pub fn num_classes(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.rows.len();
        DMatrix::from_fn(n, self.num_classes(), |i, j| self.rows[i][j])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Target {
    Node(usize),
    Class(usize),
}

struct Node {
    members: Vec<usize>,
    row: BTreeMap<Target, Monomial>,
    alive: bool,
}

/// λ→0 probability of ending in each recurrent class.
///
/// Transient states are first grouped into traps: sets closed under
/// leading-order jumps. Each trap is replaced by one node whose exit row is
/// the stationary-weighted sum of its members' outgoing entries. Once no trap
/// remains, the leading-order jump chain is absorbing and its absorption
/// probabilities are the answer.
pub fn entrance_law(
    matrix: &MonomialMatrix,
    decomposition: &ClassDecomposition,
    opts: &MeasureOptions,
) -> Result<EntranceLaw> {
    let n = matrix.size();
    let num_classes = decomposition.recurrent.len();
    let class_of = decomposition.class_index();
    if class_of.len() != n {
        return Err(Error::Internal(format!(
            "decomposition covers {} states, matrix has {n}",
            class_of.len()
        )));
    }

    let mut node_of = vec![usize::MAX; n];
    let mut nodes: Vec<Node> = Vec::new();
    for &t in &decomposition.transient {
        node_of[t] = nodes.len();
        nodes.push(Node {
            members: vec![t],
            row: BTreeMap::new(),
            alive: true,
        });
    }
    for &t in &decomposition.transient {
        let mut row = BTreeMap::new();
        for (j, m) in matrix.row(t) {
            let target = match class_of[j] {
                Some(c) => Target::Class(c),
                None => Target::Node(node_of[j]),
            };
            let slot = row.entry(target).or_insert(Monomial::ZERO);
            *slot = *slot + m;
        }
        nodes[node_of[t]].row = row;
    }

    loop {
        let traps = find_traps(&nodes)?;
        if traps.is_empty() {
            break;
        }
        for trap in traps {
            contract(&mut nodes, &trap, opts)?;
        }
    }

    let alive: Vec<usize> = (0..nodes.len()).filter(|&k| nodes[k].alive).collect();
    let local: BTreeMap<usize, usize> = alive.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let m = alive.len();
    let mut off = DMatrix::zeros(m, m);
    let mut slack = vec![0.0; m];
    let mut rhs = DMatrix::zeros(m, num_classes);
    for (i, &k) in alive.iter().enumerate() {
        let lead = leading_arcs(&nodes[k])?;
        let total: f64 = lead.iter().map(|(_, c)| c).sum();
        for (target, c) in lead {
            let p = c / total;
            match target {
                Target::Node(w) => off[(i, local[&w])] += p,
                Target::Class(r) => {
                    rhs[(i, r)] += p;
                    slack[i] += p;
                }
            }
        }
    }
    let absorbed = linalg::solve_m_matrix(&off, &slack, &rhs, RANK_TOL)
        .map_err(|e| Error::Internal(format!("entrance law absorption system: {e}")))?;

    for (i, &k) in alive.iter().enumerate() {
        for &s in &nodes[k].members {
            node_of[s] = i;
        }
    }
    let rows = (0..n)
        .map(|s| match class_of[s] {
            Some(c) => {
                let mut row = vec![0.0; num_classes];
                row[c] = 1.0;
                row
            }
            None => absorbed.row(node_of[s]).iter().copied().collect(),
        })
        .collect();
    Ok(EntranceLaw { rows })
}

/// Destinations attaining the minimal exponent of a node's row, with coefficients.
fn leading_arcs(node: &Node) -> Result<Vec<(Target, f64)>> {
    let min = node
        .row
        .values()
        .map(|m| m.exp())
        .min()
        .ok_or_else(|| {
            Error::Internal(format!(
                "transient states {:?} have no outgoing transition",
                node.members
            ))
        })?;
    Ok(node
        .row
        .iter()
        .filter(|(_, m)| m.exp() == min)
        .map(|(&t, m)| (t, m.coeff()))
        .collect())
}

/// Closed classes of the leading-jump graph that avoid every recurrent class.
fn find_traps(nodes: &[Node]) -> Result<Vec<Vec<usize>>> {
    let alive: Vec<usize> = (0..nodes.len()).filter(|&k| nodes[k].alive).collect();
    let local: BTreeMap<usize, usize> = alive.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let mut g = Digraph::new(alive.len());
    let mut escapes = vec![false; alive.len()];
    for (i, &k) in alive.iter().enumerate() {
        for (target, _) in leading_arcs(&nodes[k])? {
            match target {
                Target::Node(w) => g.add_arc(i, local[&w]),
                Target::Class(_) => escapes[i] = true,
            }
        }
    }
    Ok(classify(&g)
        .recurrent
        .into_iter()
        .filter(|class| class.iter().all(|&i| !escapes[i]))
        .map(|class| class.into_iter().map(|i| alive[i]).collect())
        .collect())
}

fn contract(nodes: &mut Vec<Node>, trap: &[usize], opts: &MeasureOptions) -> Result<()> {
    let inside: BTreeSet<usize> = trap.iter().copied().collect();
    let pos: BTreeMap<usize, usize> = trap.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let mut internal = MonomialMatrix::new(trap.len());
    for (i, &k) in trap.iter().enumerate() {
        for (target, &m) in &nodes[k].row {
            if let Target::Node(w) = target {
                if let Some(&j) = pos.get(w) {
                    internal.set(i, j, m);
                }
            }
        }
    }
    let local_ids: Vec<usize> = (0..trap.len()).collect();
    let pi = invariant_measure(&internal, &local_ids, opts)?;

    let mut row: BTreeMap<Target, Monomial> = BTreeMap::new();
    let mut members = Vec::new();
    for (i, &k) in trap.iter().enumerate() {
        members.extend_from_slice(&nodes[k].members);
        let weight = pi.get(i);
        for (&target, &m) in &nodes[k].row {
            if matches!(target, Target::Node(w) if inside.contains(&w)) {
                continue;
            }
            let slot = row.entry(target).or_insert(Monomial::ZERO);
            *slot = *slot + weight.checked_mul(m)?;
        }
        nodes[k].alive = false;
    }
    members.sort_unstable();
    let new_id = nodes.len();
    nodes.push(Node {
        members,
        row,
        alive: true,
    });

    for node in nodes.iter_mut().filter(|n| n.alive) {
        let redirected: Vec<Target> = node
            .row
            .keys()
            .filter(|t| matches!(t, Target::Node(w) if inside.contains(w)))
            .copied()
            .collect();
        for t in redirected {
            let m = node.row.remove(&t).expect("key listed above");
            let slot = node.row.entry(Target::Node(new_id)).or_insert(Monomial::ZERO);
            *slot = *slot + m;
        }
    }
    Ok(())
}
