#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use perturbed_occupation::asymptotics::{Monomial, RationalExp};
use perturbed_occupation::chain::PerturbedChain;
use perturbed_occupation::matrix::MonomialMatrix;
use perturbed_occupation::structure::MonomialMeasure;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load(name: &str) -> PerturbedChain {
    PerturbedChain::load(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn exp(num: i64, den: i64) -> RationalExp {
    RationalExp::new(num, den).unwrap()
}

pub fn mono(c: f64, num: i64, den: i64) -> Monomial {
    Monomial::new(c, exp(num, den)).unwrap()
}

pub fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// Exponent grid used by the random stochasticity suite.
pub const GRID: [(i64, i64); 7] = [(0, 1), (1, 5), (1, 3), (1, 2), (1, 1), (3, 2), (2, 1)];

/// A random valid chain on 1..=max_states states with exponents from `grid`.
///
/// Exponent-0 coefficients in a row are scaled to total mass at most 1; about
/// one row in six is made exactly leaving (mass 1).
pub fn random_chain(r: &mut ChaCha8Rng, max_states: usize, grid: &[(i64, i64)]) -> PerturbedChain {
    let n = r.random_range(1..=max_states);
    let mut entries = Vec::new();
    for i in 0..n {
        let mut targets: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        targets.shuffle(r);
        let k = r.random_range(0..=targets.len());
        let mut row: Vec<(usize, f64, RationalExp)> = targets[..k]
            .iter()
            .map(|&j| {
                let (p, q) = grid[r.random_range(0..grid.len())];
                (j, r.random_range(0.1..2.0), exp(p, q))
            })
            .collect();
        let zero: f64 = row.iter().filter(|e| e.2 == RationalExp::ZERO).map(|e| e.1).sum();
        if zero > 0.0 {
            let target = if r.random_bool(1.0 / 6.0) { 1.0 } else { r.random_range(0.1..0.95) };
            for e in row.iter_mut().filter(|e| e.2 == RationalExp::ZERO) {
                e.1 *= target / zero;
            }
        }
        entries.extend(row.into_iter().map(|(j, c, e)| (i, j, Monomial::new(c, e).unwrap())));
    }
    PerturbedChain::new(names(n), entries).unwrap()
}

/// Critical chain on 3..=5 states: rate-λ arcs with coefficients in [0.2, 1]
/// plus λ^{3/2} noise with coefficients in [1e−4, 1e−3].
pub fn random_critical_chain(r: &mut ChaCha8Rng) -> PerturbedChain {
    let n = r.random_range(3..=5);
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let u: f64 = r.random();
            if u < 0.5 {
                entries.push((i, j, mono(r.random_range(0.2..1.0), 1, 1)));
            } else if u < 0.8 {
                entries.push((i, j, mono(r.random_range(1e-4..1e-3), 3, 2)));
            }
        }
    }
    PerturbedChain::new(names(n), entries).unwrap()
}

/// Absorbing chain: state 0 leaves at exponent `e` towards 1..=3 targets,
/// with an optional slower entry at `e + 1/2`; all other states are frozen.
pub fn random_absorbing_chain(r: &mut ChaCha8Rng, e: RationalExp) -> PerturbedChain {
    let targets = r.random_range(1..=3);
    let n = targets + 2;
    let mut entries: Vec<(usize, usize, Monomial)> = (1..=targets)
        .map(|j| (0, j, Monomial::new(r.random_range(0.2..2.0), e).unwrap()))
        .collect();
    if r.random_bool(0.5) {
        let slower = e.checked_add(exp(1, 2)).unwrap();
        entries.push((0, targets + 1, Monomial::new(r.random_range(0.2..2.0), slower).unwrap()));
    }
    PerturbedChain::new(names(n), entries).unwrap()
}

/// A chain with absorbing targets and transient sets that are closed under
/// leading-order jumps. Exponents lie on the lattice of halves and each trap
/// leaves half an order above its internal rate, so the numeric limits expand
/// in powers of λ^{1/2} and extrapolate cleanly from λ ≥ 1e−7.
/// Returns the chain and the target states.
pub fn random_trap_chain(r: &mut ChaCha8Rng) -> (PerturbedChain, Vec<usize>) {
    loop {
        let (chain, targets) = trap_chain_candidate(r);
        if chain.lambda_max() >= 1e-3 {
            return (chain, targets);
        }
    }
}

fn trap_chain_candidate(r: &mut ChaCha8Rng) -> (PerturbedChain, Vec<usize>) {
    let num_targets = r.random_range(2..=3);
    let num_traps = r.random_range(1..=2);
    let internal_grid = [(0, 1), (1, 2), (1, 1)];
    
    let mut traps: Vec<Vec<usize>> = Vec::new();
    let mut next = num_targets;
    for _ in 0..num_traps {
        let size = r.random_range(2..=3);
        traps.push((next..next + size).collect());
        next += size;
    }
    let free: Vec<usize> = (next..next + r.random_range(0..=2)).collect();
    let n = next + free.len();
    let mut m = MonomialMatrix::new(n);

    for (k, trap) in traps.iter().enumerate() {
        let (p, q) = internal_grid[r.random_range(0..internal_grid.len())];
        let inner = exp(p, q);
        let size = trap.len();
        for (a, &u) in trap.iter().enumerate() {
            // A cycle through the trap, plus an optional chord.
            let v = trap[(a + 1) % size];
            m.set(u, v, Monomial::new(r.random_range(0.2..0.45), inner).unwrap());
            if size == 3 && r.random_bool(0.5) {
                let w = trap[(a + 2) % size];
                m.set(u, w, Monomial::new(r.random_range(0.2..0.45), inner).unwrap());
            }
        }
        // Exits at one slower order: to targets, and possibly to a later trap.
        let e = inner.checked_add(exp(1, 2)).unwrap();
        let exits = r.random_range(1..=3);
        for _ in 0..exits {
            let u = trap[r.random_range(0..size)];
            let dest = if k + 1 < traps.len() && r.random_bool(0.3) {
                traps[k + 1][0]
            } else {
                r.random_range(0..num_targets)
            };
            m.accumulate(u, dest, Monomial::new(r.random_range(0.2..2.0), e).unwrap());
        }
    }
    for &f in &free {
        let trap = &traps[r.random_range(0..traps.len())];
        m.set(f, trap[r.random_range(0..trap.len())], mono(r.random_range(0.2..0.5), 0, 1));
        if r.random_bool(0.5) {
            m.set(f, r.random_range(0..num_targets), mono(r.random_range(0.2..0.5), 0, 1));
        }
    }
    let chain = PerturbedChain::from_matrix(names(n), m).unwrap();
    (chain, (0..num_targets).collect())
}

/// Aitken Δ² limit of three terms; falls back to the last term when the
/// second differences are too small to trust.
pub fn aitken(x1: f64, x2: f64, x3: f64) -> f64 {
    let d1 = x2 - x1;
    let d2 = x3 - x2;
    let denom = d2 - d1;
    if denom.abs() < 1e-14 || d2.abs() < 1e-13 {
        return x3;
    }
    let corrected = x3 - d2 * d2 / denom;
    // Reject corrections that overshoot by more than the observed drift.
    if (corrected - x3).abs() > 10.0 * d2.abs() {
        x3
    } else {
        corrected
    }
}

pub fn extrapolate(ms: &[DMatrix<f64>; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(ms[0].nrows(), ms[0].ncols(), |i, j| {
        aitken(ms[0][(i, j)], ms[1][(i, j)], ms[2][(i, j)])
    })
}

/// Richardson limit of three samples `x(λ_k)`, assuming
/// `x(λ) = x* + a·λ^{γ1} + b·λ^{γ2} + …`.
pub fn richardson(lambdas: [f64; 3], ms: &[DMatrix<f64>; 3], gammas: [f64; 2]) -> DMatrix<f64> {
    let v = DMatrix::from_fn(3, 3, |k, c| if c == 0 { 1.0 } else { lambdas[k].powf(gammas[c - 1]) });
    let lu = v.lu();
    DMatrix::from_fn(ms[0].nrows(), ms[0].ncols(), |i, j| {
        let rhs = DVector::from_fn(3, |k, _| ms[k][(i, j)]);
        lu.solve(&rhs).expect("distinct sample points")[0]
    })
}

pub fn max_row_sum_error(m: &DMatrix<f64>, target: f64) -> f64 {
    m.row_iter().map(|r| (r.sum() - target).abs()).fold(0.0, f64::max)
}

/// Stationary vector by a plain LU solve of `π(I − P) = 0, Σπ = 1`.
pub fn dense_stationary(p: &DMatrix<f64>) -> DVector<f64> {
    let n = p.nrows();
    let mut a = (DMatrix::identity(n, n) - p).transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    a.lu().solve(&b).expect("irreducible chain")
}

/// Leading-order arborescence sums by exhaustive enumeration: for each root,
/// every choice of one out-arc per other state that reaches the root.
pub fn arborescence_measure(matrix: &MonomialMatrix, class: &[usize]) -> MonomialMeasure {
    let local = matrix.restrict_to(class);
    let n = class.len();
    let arcs: Vec<Vec<(usize, Monomial)>> = (0..n).map(|i| local.row(i).collect()).collect();
    let mut weights = Vec::new();
    for root in 0..n {
        let others: Vec<usize> = (0..n).filter(|&v| v != root).collect();
        let mut total = Monomial::ZERO;
        let mut choice = vec![0usize; others.len()];
        'outer: loop {
            let mut succ = vec![usize::MAX; n];
            let mut w = Monomial::ONE;
            let mut valid = true;
            for (k, &v) in others.iter().enumerate() {
                if arcs[v].is_empty() {
                    valid = false;
                    break;
                }
                let (to, m) = arcs[v][choice[k]];
                succ[v] = to;
                w = w * m;
            }
            if valid && others.iter().all(|&v| reaches(&succ, v, root, n)) {
                total = total + w;
            }
            for k in 0..others.len() {
                choice[k] += 1;
                if choice[k] < arcs[others[k]].len().max(1) {
                    continue 'outer;
                }
                choice[k] = 0;
            }
            break;
        }
        weights.push((class[root], total));
    }
    MonomialMeasure::normalized(weights).unwrap()
}

fn reaches(succ: &[usize], mut v: usize, root: usize, n: usize) -> bool {
    for _ in 0..n {
        if v == root {
            return true;
        }
        v = succ[v];
    }
    v == root
}
