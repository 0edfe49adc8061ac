use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::asymptotics::{Monomial, RationalExp};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::MonomialMatrix;

use super::{bfs_levels, Digraph};

/// Largest class handled by [`invariant_measure`] unless configured otherwise.
pub const DEFAULT_CLASS_CAP: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasureOptions {
    pub class_cap: usize,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            class_cap: DEFAULT_CLASS_CAP,
        }
    }
}

/// A leading-order probability measure: state → monomial.
///
/// The values ⊕-sum to `1·λ^0`, so at least one state carries exponent 0 and
/// every exponent is nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialMeasure {
    values: BTreeMap<usize, Monomial>,
}

impl MonomialMeasure {
    pub fn dirac(state: usize) -> Self {
        MonomialMeasure {
            values: BTreeMap::from([(state, Monomial::ONE)]),
        }
    }

    /// Divides nonnegative weights by their ⊕-sum. Zero weights are dropped.
    pub fn normalized(weights: impl IntoIterator<Item = (usize, Monomial)>) -> Result<Self> {
        let weights: BTreeMap<usize, Monomial> =
            weights.into_iter().filter(|(_, m)| !m.is_zero()).collect();
        let total: Monomial = weights.values().copied().sum();
        if total.is_zero() {
            return Err(Error::Internal("cannot normalise an all-zero measure".into()));
        }
        let values = weights
            .into_iter()
            .map(|(s, m)| Ok((s, m.checked_div(total)?)))
            .collect::<Result<_>>()?;
        Ok(MonomialMeasure { values })
    }

    pub fn get(&self, state: usize) -> Monomial {
        self.values.get(&state).copied().unwrap_or(Monomial::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Monomial)> + '_ {
        self.values.iter().map(|(&s, &m)| (s, m))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same support, exponents and coefficients within the monomial tolerance.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .all(|(s, m)| m.approx_eq(other.get(*s)))
    }
}

/// The jump chain: off-diagonal entries divided by the row exit monomial.
/// Rows without exit keep a unit self-loop, recorded in `self_loop`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpChain {
    pub off: MonomialMatrix,
    pub self_loop: Vec<bool>,
}

pub fn jump_chain(matrix: &MonomialMatrix) -> Result<JumpChain> {
    let n = matrix.size();
    let mut off = MonomialMatrix::new(n);
    let mut self_loop = vec![false; n];
    for i in 0..n {
        let exit = matrix.row_exit(i);
        if exit.is_zero() {
            self_loop[i] = true;
            continue;
        }
        for (j, m) in matrix.row(i) {
            off.set(i, j, m.checked_div(exit)?);
        }
    }
    Ok(JumpChain { off, self_loop })
}

/// Leading-order stationary measure of `class` under the arcs of `matrix`
/// between class members.
///
/// The weights are the arborescence sums of the Markov chain tree theorem.
/// They are accumulated by state reduction (GTH elimination carried out in
/// monomial arithmetic), which only adds, multiplies and divides nonnegative
/// quantities, so leading terms are exact.
pub fn invariant_measure(
    matrix: &MonomialMatrix,
    class: &[usize],
    opts: &MeasureOptions,
) -> Result<MonomialMeasure> {
    let n = class.len();
    if n == 0 {
        return Err(Error::Internal("invariant measure of an empty class".into()));
    }
    if n > opts.class_cap {
        return Err(Error::Resource(format!(
            "recurrence class of {n} states exceeds the class size cap {}; raise the cap to proceed",
            opts.class_cap
        )));
    }
    if n == 1 {
        return Ok(MonomialMeasure::dirac(class[0]));
    }

    let local = matrix.restrict_to(class);
    let mut a = vec![vec![Monomial::ZERO; n]; n];
    for (i, j, m) in local.entries() {
        a[i][j] = m;
    }

    for k in (1..n).rev() {
        let s: Monomial = a[k][..k].iter().copied().sum();
        if s.is_zero() {
            return Err(Error::Internal(format!(
                "class {class:?} is not strongly connected under the given arcs"
            )));
        }
        for row in a.iter_mut().take(k) {
            row[k] = row[k].checked_div(s)?;
        }
        for i in 0..k {
            let aik = a[i][k];
            if aik.is_zero() {
                continue;
            }
            for j in 0..k {
                if i != j && !a[k][j].is_zero() {
                    a[i][j] = a[i][j] + aik.checked_mul(a[k][j])?;
                }
            }
        }
    }

    let mut x = vec![Monomial::ZERO; n];
    x[0] = Monomial::ONE;
    for k in 1..n {
        let mut acc = Monomial::ZERO;
        for i in 0..k {
            acc = acc + x[i].checked_mul(a[i][k])?;
        }
        x[k] = acc;
    }
    if x.iter().any(|m| m.is_zero()) {
        return Err(Error::Internal(format!(
            "class {class:?} is not strongly connected under the given arcs"
        )));
    }
    MonomialMeasure::normalized(class.iter().copied().zip(x))
}

/// Stationary measure from exit rates: `π(k) ∝ π̂(k) / exit(k)`, with `π̂`
/// the stationary law of the jump chain.
///
/// Applies when every internal arc of a row sits at that row's minimal
/// internal exponent, so that the jump chain inside the class is a constant
/// stochastic matrix. Used as an independent check of [`invariant_measure`].
pub fn invariant_measure_by_exit_rates(
    matrix: &MonomialMatrix,
    class: &[usize],
) -> Result<MonomialMeasure> {
    let n = class.len();
    if n == 1 {
        return Ok(MonomialMeasure::dirac(class[0]));
    }
    let local = matrix.restrict_to(class);
    let hat = jump_chain(&local)?;
    let mut p = DMatrix::zeros(n, n);
    for (i, j, m) in hat.off.entries() {
        if m.exp() != RationalExp::ZERO {
            return Err(Error::Domain(format!(
                "jump chain of class {class:?} is not constant: entry ({i},{j}) is {m}"
            )));
        }
        p[(i, j)] = m.coeff();
    }
    let pi_hat = linalg::stationary_distribution(&p)?;
    let weights = (0..n)
        .map(|k| {
            let w = Monomial::constant(pi_hat[k])?.checked_div(local.row_exit(k))?;
            Ok((class[k], w))
        })
        .collect::<Result<Vec<_>>>()?;
    MonomialMeasure::normalized(weights)
}

/// Invariant measures of the `d` cyclic subclasses of a class of period `d`.
///
/// Subclass `C_1` contains the smallest member; `C_{k+1}` follows `C_k`. Each
/// measure is the class measure conditioned on its subclass, so their
/// average is the class measure.
pub fn periodic_components(
    matrix: &MonomialMatrix,
    class: &[usize],
    d: u64,
    opts: &MeasureOptions,
) -> Result<Vec<MonomialMeasure>> {
    let pi = invariant_measure(matrix, class, opts)?;
    if d <= 1 {
        return Ok(vec![pi]);
    }
    let local = matrix.restrict_to(class);
    let g = Digraph::support_of(&local);
    let local_class: Vec<usize> = (0..class.len()).collect();
    let levels: BTreeMap<usize, u64> = bfs_levels(&g, &local_class).into_iter().collect();
    if levels.len() != class.len() {
        return Err(Error::Internal(format!("class {class:?} is not strongly connected")));
    }
    for (u, v, _) in local.entries() {
        if (levels[&u] + 1) % d != levels[&v] % d {
            return Err(Error::Internal(format!(
                "period {d} does not match the cycle structure of class {class:?}"
            )));
        }
    }
    (0..d)
        .map(|k| {
            let part = levels
                .iter()
                .filter(|&(_, &l)| l % d == k)
                .map(|(&u, _)| (class[u], pi.get(class[u])));
            MonomialMeasure::normalized(part)
                .map_err(|_| Error::Internal(format!("empty cyclic subclass {k} of {class:?}")))
        })
        .collect()
}
