//! Brute-force numerics at a concrete λ, used to check the limit model.
//!
//! Powers `Q_λ^n` with `n = ⌊t/λ⌋` reach 10^12 at λ = 1e−12. They are formed
//! by binary powering in double-double arithmetic: in plain `f64` a diagonal
//! `1 − 1e−12` keeps only four significant digits of its exit rate.
//! Resolvents `λ(Id − (1−λ)Q)^{-1}` are solved in `f64` with the
//! subtraction-free elimination of [`crate::linalg`].

use std::ops::Mul;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::asymptotics::RationalExp;
use crate::chain::PerturbedChain;
use crate::error::{Error, Result};
use crate::evaluator::{occupation, position, Horizon};
use crate::hierarchy::LimitModel;
use crate::linalg::{solve_m_matrix, sup_distance};

/// Largest power handled by [`matrix_power_position`].
pub const MAX_POWER: u64 = 1 << 62;

/// Dense square matrix in double-double precision.
#[derive(Clone, Debug)]
pub struct DdMatrix {
    n: usize,
    a: Vec<TwoFloat>,
}

impl DdMatrix {
    pub fn zeros(n: usize) -> Self {
        DdMatrix {
            n,
            a: vec![TwoFloat::from(0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = TwoFloat::from(1.0);
        }
        m
    }

    /// Stochastic matrix with the given off-diagonal entries and diagonal
    /// `1 − Σ off-diagonal` computed in double-double.
    pub fn stochastic_from_f64(off: &DMatrix<f64>) -> Self {
        let n = off.nrows();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.a[i * n + j] = TwoFloat::from(off[(i, j)]);
                }
            }
        }
        m.fill_diagonal();
        m
    }

    fn fill_diagonal(&mut self) {
        let n = self.n;
        for i in 0..n {
            let mut s = TwoFloat::from(0.0);
            for j in 0..n {
                if j != i {
                    s += self.a[i * n + j];
                }
            }
            let d = TwoFloat::from(1.0) - s;
            self.a[i * n + i] = if d < TwoFloat::from(0.0) { TwoFloat::from(0.0) } else { d };
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> TwoFloat {
        self.a[i * self.n + j]
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).hi() + self.get(i, j).lo())
    }

    fn add(&self, other: &Self) -> Self {
        DdMatrix {
            n: self.n,
            a: self.a.iter().zip(&other.a).map(|(x, y)| *x + *y).collect(),
        }
    }

    fn scaled(&self, s: TwoFloat) -> Self {
        DdMatrix {
            n: self.n,
            a: self.a.iter().map(|x| *x * s).collect(),
        }
    }
}

impl Mul for &DdMatrix {
    type Output = DdMatrix;

    fn mul(self, rhs: &DdMatrix) -> DdMatrix {
        let n = self.n;
        let mut out = DdMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik.hi() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let b = rhs.a[k * n + j];
                    if b.hi() != 0.0 {
                        out.a[i * n + j] += aik * b;
                    }
                }
            }
        }
        out
    }
}

/// `Q_λ` in double-double: exact monomials off the diagonal, except in rows
/// that leave their state with limit probability 1, where the exponent-0
/// entries share the remaining mass so that the diagonal is 0.
pub fn instantiate_dd(chain: &PerturbedChain, lambda: f64) -> Result<DdMatrix> {
    if !(lambda > 0.0 && lambda <= chain.lambda_max()) {
        return Err(Error::Domain(format!(
            "λ = {lambda} outside (0, {}]",
            chain.lambda_max()
        )));
    }
    let n = chain.num_states();
    let mut q = DdMatrix::zeros(n);
    for i in 0..n {
        let row: Vec<_> = chain.entries().row(i).collect();
        let mut slow = TwoFloat::from(0.0);
        for &(j, m) in &row {
            if m.exp() > RationalExp::ZERO {
                let v = TwoFloat::from(m.eval(lambda));
                q.a[i * n + j] = v;
                slow += v;
            }
        }
        let mass = row
            .iter()
            .filter(|(_, m)| m.exp() == RationalExp::ZERO)
            .fold(TwoFloat::from(0.0), |acc, (_, m)| acc + m.coeff());
        let share = if chain.is_exactly_leaving(i) {
            (TwoFloat::from(1.0) - slow) / mass
        } else {
            TwoFloat::from(1.0)
        };
        for &(j, m) in &row {
            if m.exp() == RationalExp::ZERO {
                q.a[i * n + j] = share * m.coeff();
            }
        }
    }
    q.fill_diagonal();
    Ok(q)
}

/// `Q_λ` as a dense `f64` stochastic matrix.
pub fn instantiate(chain: &PerturbedChain, lambda: f64) -> Result<DMatrix<f64>> {
    Ok(instantiate_dd(chain, lambda)?.to_f64())
}

/// `⌊t/λ⌋`, robust to `t/λ` landing a rounding error below an integer.
pub fn stage_count(t: f64, lambda: f64) -> Result<u64> {
    let x = t / lambda;
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("invalid horizon t = {t}, λ = {lambda}")));
    }
    let n = (x * (1.0 + 4.0 * f64::EPSILON)).floor();
    if n > MAX_POWER as f64 {
        return Err(Error::Resource(format!(
            "⌊t/λ⌋ = {n:e} exceeds the supported power 2^62"
        )));
    }
    Ok(n as u64)
}

pub fn matrix_power(q: &DdMatrix, mut n: u64) -> DdMatrix {
    let mut result = DdMatrix::identity(q.size());
    let mut base = q.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// `(1/N) Σ_{r=1..N} Q^{⌊t/λ⌋ + r}`.
pub fn matrix_power_position(q: &DdMatrix, t: f64, lambda: f64, period: u64) -> Result<DMatrix<f64>> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    if period == 0 {
        return Err(Error::Domain("averaging period must be positive".into()));
    }
    let n = stage_count(t, lambda)?;
    let mut current = matrix_power(q, n);
    let mut acc = DdMatrix::zeros(q.size());
    for _ in 0..period {
        current = &current * q;
        acc = acc.add(&current);
    }
    Ok(acc.scaled(TwoFloat::from(1.0) / TwoFloat::from(period as f64)).to_f64())
}

/// `Σ_{k<n} B^k` for `B = βQ`, by doubling.
pub fn geometric_power_sum(q: &DdMatrix, beta: TwoFloat, n: u64) -> DdMatrix {
    let size = q.size();
    let step = q.scaled(beta);
    let mut sum = DdMatrix::zeros(size);
    let mut power = DdMatrix::identity(size);
    if n == 0 {
        return sum;
    }
    for bit in (0..64 - n.leading_zeros()).rev() {
        // (sum, power) = (S_k, B^k) → (S_{2k}, B^{2k})
        sum = sum.add(&(&power * &sum));
        power = &power * &power;
        if (n >> bit) & 1 == 1 {
            sum = sum.add(&power);
            power = &power * &step;
        }
    }
    sum
}

/// `(1/n) Σ_{k<n} Q^k`.
pub fn cesaro_average(q: &DdMatrix, n: u64) -> DMatrix<f64> {
    let sum = geometric_power_sum(q, TwoFloat::from(1.0), n);
    sum.scaled(TwoFloat::from(1.0) / TwoFloat::from(n as f64)).to_f64()
}

/// `Σ_{m=1..n} λ(1−λ)^{m−1} Q^{m−1}` for `n = ⌊t/λ⌋`, or the full series.
pub fn discounted_sum(q: &DdMatrix, lambda: f64, horizon: Horizon) -> Result<DMatrix<f64>> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("λ = {lambda} outside (0, 1]")));
    }
    match horizon {
        Horizon::Finite(t) => {
            let n = stage_count(t, lambda)?;
            let beta = TwoFloat::from(1.0) - TwoFloat::from(lambda);
            Ok(geometric_power_sum(q, beta, n).scaled(TwoFloat::from(lambda)).to_f64())
        }
        Horizon::Total => resolvent(&q.to_f64(), lambda),
    }
}

/// `λ(Id − (1−λ)Q)^{-1}`; only the off-diagonal entries of `q` are read.
pub fn resolvent(q: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    let beta = 1.0 - lambda;
    let off = q * beta;
    let rhs = DMatrix::identity(n, n) * lambda;
    solve_m_matrix(&off, &vec![lambda; n], &rhs, 0.0)
        .map_err(|e| Error::Internal(format!("resolvent solve failed: {e}")))
}

/// Probability of reaching each of `targets` (sets of states) before any
/// other target; only off-diagonal entries of `q` are read.
pub fn absorption_probabilities(q: &DMatrix<f64>, targets: &[Vec<usize>]) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    let mut target_of = vec![None; n];
    for (k, set) in targets.iter().enumerate() {
        for &s in set {
            target_of[s] = Some(k);
        }
    }
    let free: Vec<usize> = (0..n).filter(|&s| target_of[s].is_none()).collect();
    let m = free.len();
    let mut off = DMatrix::zeros(m, m);
    let mut slack = vec![0.0; m];
    let mut rhs = DMatrix::zeros(m, targets.len());
    for (a, &i) in free.iter().enumerate() {
        for j in 0..n {
            if j == i {
                continue;
            }
            match target_of[j] {
                Some(k) => {
                    rhs[(a, k)] += q[(i, j)];
                    slack[a] += q[(i, j)];
                }
                None => off[(a, free.iter().position(|&f| f == j).unwrap())] = q[(i, j)],
            }
        }
    }
    let x = solve_m_matrix(&off, &slack, &rhs, 0.0)?;
    let mut out = DMatrix::zeros(n, targets.len());
    for s in 0..n {
        match target_of[s] {
            Some(k) => out[(s, k)] = 1.0,
            None => {
                let a = free.iter().position(|&f| f == s).unwrap();
                out.set_row(s, &x.row(a));
            }
        }
    }
    Ok(out)
}

/// One point of a convergence sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub position_err: f64,
    pub occupation_t_err: f64,
    pub total_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    pub position_monotone: bool,
    pub occupation_t_monotone: bool,
    pub total_monotone: bool,
}

/// Allowed growth between consecutive errors of a sweep.
pub const SWEEP_SLACK: f64 = 1.5;
/// Errors below this level are treated as rounding noise by the monotonicity check.
pub const SWEEP_NOISE: f64 = 1e-12;

/// Whether `errors` never grow by more than the slack factor.
pub fn non_increasing(errors: &[f64]) -> bool {
    errors.windows(2).all(|w| w[1] <= SWEEP_SLACK * w[0] + SWEEP_NOISE)
}

impl Sweep {
    pub fn monotone(&self) -> bool {
        self.position_monotone && self.occupation_t_monotone && self.total_monotone
    }

    pub fn last(&self) -> &SweepPoint {
        self.points.last().expect("sweeps have at least one point")
    }

    /// The diagnostics document: one object per λ.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.points).expect("sweep points always serialise")
    }
}

/// Oracle errors against the model at each λ (evaluated in parallel).
pub fn convergence_sweep(
    chain: &PerturbedChain,
    model: &LimitModel,
    t: f64,
    lambdas: &[f64],
) -> Result<Sweep> {
    if lambdas.is_empty() {
        return Err(Error::Domain("empty λ list".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("λ values must be strictly decreasing".into()));
    }
    let model_position = position(model, t)?;
    let model_occ = occupation(model, Horizon::Finite(t))?.matrix;
    let model_total = occupation(model, Horizon::Total)?.matrix;

    let run = |lambda: f64| -> Result<SweepPoint> {
        let q = instantiate_dd(chain, lambda)?;
        let pos = matrix_power_position(&q, t, lambda, model.n)?;
        let occ = discounted_sum(&q, lambda, Horizon::Finite(t))?;
        let total = discounted_sum(&q, lambda, Horizon::Total)?;
        Ok(SweepPoint {
            lambda,
            position_err: sup_distance(&pos, &model_position),
            occupation_t_err: sup_distance(&occ, &model_occ),
            total_err: sup_distance(&total, &model_total),
        })
    };
    let points = std::thread::scope(|scope| {
        let handles: Vec<_> = lambdas.iter().map(|&l| scope.spawn(move || run(l))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let series = |f: fn(&SweepPoint) -> f64| points.iter().map(f).collect::<Vec<_>>();
    Ok(Sweep {
        position_monotone: non_increasing(&series(|p| p.position_err)),
        occupation_t_monotone: non_increasing(&series(|p| p.occupation_t_err)),
        total_monotone: non_increasing(&series(|p| p.total_err)),
        points,
    })
}
