use std::collections::BTreeMap;

use crate::asymptotics::{Monomial, RationalExp};

/// A square matrix of off-diagonal monomial entries.
///
/// Diagonal entries are never stored: for a stochastic family the diagonal
/// is implied by the row sum. Zero monomials are never stored either.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialMatrix {
    rows: Vec<BTreeMap<usize, Monomial>>,
}

impl MonomialMatrix {
    pub fn new(size: usize) -> Self {
        MonomialMatrix {
            rows: vec![BTreeMap::new(); size],
        }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// Overwrites entry `(from, to)`. Zero values and diagonal positions are ignored.
    pub fn set(&mut self, from: usize, to: usize, value: Monomial) {
        if from == to {
            return;
        }
        if value.is_zero() {
            self.rows[from].remove(&to);
        } else {
            self.rows[from].insert(to, value);
        }
    }

    /// Leading-order accumulation `entry(from, to) ⊕= value`.
    pub fn accumulate(&mut self, from: usize, to: usize, value: Monomial) {
        if from == to || value.is_zero() {
            return;
        }
        let slot = self.rows[from].entry(to).or_insert(Monomial::ZERO);
        *slot = *slot + value;
    }

    pub fn get(&self, from: usize, to: usize) -> Monomial {
        self.rows[from].get(&to).copied().unwrap_or(Monomial::ZERO)
    }

    pub fn row(&self, from: usize) -> impl Iterator<Item = (usize, Monomial)> + '_ {
        self.rows[from].iter().map(|(&j, &m)| (j, m))
    }

    pub fn row_len(&self, from: usize) -> usize {
        self.rows[from].len()
    }

    /// All stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Monomial)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |(&j, &m)| (i, j, m)))
    }

    /// Leading term of the total off-diagonal row mass.
    pub fn row_exit(&self, from: usize) -> Monomial {
        self.rows[from].values().copied().sum()
    }

    /// Smallest exponent in a row (`+∞` for an empty row).
    pub fn row_min_exp(&self, from: usize) -> RationalExp {
        self.rows[from]
            .values()
            .map(|m| m.exp())
            .min()
            .unwrap_or(RationalExp::INFINITY)
    }

    /// Sum of the coefficients of exponent-0 entries in a row.
    pub fn row_constant_mass(&self, from: usize) -> f64 {
        self.rows[from]
            .values()
            .filter(|m| m.exp() == RationalExp::ZERO)
            .map(|m| m.coeff())
            .sum()
    }

    /// Keeps only entries accepted by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(usize, usize, Monomial) -> bool) -> Self {
        let mut out = MonomialMatrix::new(self.size());
        for (i, j, m) in self.entries() {
            if keep(i, j, m) {
                out.set(i, j, m);
            }
        }
        out
    }

    /// Submatrix on `states` (local indices follow the order of `states`).
    pub fn restrict_to(&self, states: &[usize]) -> Self {
        let local: BTreeMap<usize, usize> =
            states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let mut out = MonomialMatrix::new(states.len());
        for (k, &s) in states.iter().enumerate() {
            for (j, m) in self.row(s) {
                if let Some(&l) = local.get(&j) {
                    out.set(k, l, m);
                }
            }
        }
        out
    }

    /// Distinct exponents present, ascending.
    pub fn distinct_exponents(&self) -> Vec<RationalExp> {
        let mut exps: Vec<RationalExp> = self.entries().map(|(_, _, m)| m.exp()).collect();
        exps.sort();
        exps.dedup();
        exps
    }
}
