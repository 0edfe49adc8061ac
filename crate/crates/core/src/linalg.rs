//! Subtraction-free dense solvers for M-matrix systems.
//!
//! Absorption probabilities, resolvents and stationary vectors of stochastic
//! matrices all reduce to systems `W X = B` with `W = diag(σ + O·1) − O`,
//! `O ≥ 0` off-diagonal, slack `σ ≥ 0` and `B ≥ 0`. Gaussian elimination in
//! the Grassmann–Taksar–Heyman style keeps every intermediate quantity a sum
//! of nonnegative terms, so results keep full relative accuracy even when `W`
//! is nearly singular (for instance the resolvent `I − (1−λ)Q` at λ = 1e−12).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `W X = rhs` for `W = diag(slack + Σ_j off[i][j]) − off`.
///
/// Only off-diagonal entries of `off` are read. Elimination aborts with an
/// internal error when a pivot does not exceed `pivot_floor`.
pub fn solve_m_matrix(
    off: &DMatrix<f64>,
    slack: &[f64],
    rhs: &DMatrix<f64>,
    pivot_floor: f64,
) -> Result<DMatrix<f64>> {
    let n = off.nrows();
    assert_eq!(off.ncols(), n);
    assert_eq!(slack.len(), n);
    assert_eq!(rhs.nrows(), n);

    let mut o = off.clone();
    for i in 0..n {
        o[(i, i)] = 0.0;
    }
    let mut sigma = slack.to_vec();
    let mut b = rhs.clone();
    let mut pivots = vec![0.0; n];

    for k in 0..n {
        let pivot = sigma[k] + (k + 1..n).map(|j| o[(k, j)]).sum::<f64>();
        if pivot.is_nan() || pivot <= pivot_floor {
            return Err(Error::Internal(format!(
                "singular M-matrix system: pivot {pivot:e} at step {k}"
            )));
        }
        pivots[k] = pivot;
        for i in k + 1..n {
            let f = o[(i, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            o[(i, k)] = 0.0;
            for j in k + 1..n {
                if j != i {
                    let okj = o[(k, j)];
                    o[(i, j)] += f * okj;
                }
            }
            sigma[i] += f * sigma[k];
            for c in 0..b.ncols() {
                let bkc = b[(k, c)];
                b[(i, c)] += f * bkc;
            }
        }
    }

    let mut x = DMatrix::zeros(n, b.ncols());
    for i in (0..n).rev() {
        for c in 0..b.ncols() {
            let mut acc = b[(i, c)];
            for j in i + 1..n {
                acc += o[(i, j)] * x[(j, c)];
            }
            x[(i, c)] = acc / pivots[i];
        }
    }
    Ok(x)
}

/// Stationary distribution of an irreducible stochastic matrix (GTH algorithm).
/// Only off-diagonal entries are read.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    if n == 0 {
        return Err(Error::Domain("empty matrix has no stationary distribution".into()));
    }
    let mut a = p.clone();
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[(k, j)]).sum();
        if s <= 0.0 {
            return Err(Error::Internal(format!(
                "matrix is reducible: state {k} cannot reach lower-indexed states"
            )));
        }
        for i in 0..k {
            a[(i, k)] /= s;
        }
        for i in 0..k {
            let aik = a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            for j in 0..k {
                if i != j {
                    let akj = a[(k, j)];
                    a[(i, j)] += aik * akj;
                }
            }
        }
    }
    let mut x = DVector::zeros(n);
    x[0] = 1.0;
    for k in 1..n {
        x[k] = (0..k).map(|i| x[i] * a[(i, k)]).sum();
    }
    let total = x.sum();
    Ok(x / total)
}

/// Dense solve through LU with partial pivoting.
pub fn lu_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Internal("linear system is singular".into()))
}

/// Largest absolute entrywise difference.
pub fn sup_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
