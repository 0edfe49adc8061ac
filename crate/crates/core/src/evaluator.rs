//! Positions, occupation measures and payoffs of a [`LimitModel`], plus the
//! closed forms for absorbing and critical families.

use nalgebra::DMatrix;

use crate::asymptotics::RationalExp;
use crate::chain::PerturbedChain;
use crate::error::{Error, Result};
use crate::expm::expm;
use crate::hierarchy::LimitModel;
use crate::linalg::lu_solve;

/// Time at which a position is queried: absolute time `t`, or the fraction
/// `f` of total discounted weight already played (`t = −ln(1 − f)`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PositionTime {
    Time(f64),
    Fraction(f64),
}

impl PositionTime {
    pub fn to_time(self) -> Result<f64> {
        match self {
            PositionTime::Time(t) if t.is_finite() && t >= 0.0 => Ok(t),
            PositionTime::Time(t) => Err(Error::Domain(format!("time must be finite and nonnegative, got {t}"))),
            PositionTime::Fraction(f) if (0.0..1.0).contains(&f) => Ok(-(-f).ln_1p()),
            PositionTime::Fraction(f) => Err(Error::Domain(format!("fraction must lie in [0, 1), got {f}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionQuery {
    pub time: PositionTime,
    pub from: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Total,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupationResult {
    pub matrix: DMatrix<f64>,
    pub horizon: Horizon,
}

/// `μ e^{At} M`; `μM` at `t = 0`.
pub fn position(model: &LimitModel, t: f64) -> Result<DMatrix<f64>> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(&model.mu * &model.m);
    }
    Ok(&model.mu * expm(&model.a, t)? * &model.m)
}

/// Position rows for a query: all rows, or the single row of `query.from`.
pub fn position_query(model: &LimitModel, query: &PositionQuery) -> Result<DMatrix<f64>> {
    let p = position(model, query.time.to_time()?)?;
    match query.from {
        None => Ok(p),
        Some(s) if s < model.num_states() => Ok(p.rows(s, 1).into_owned()),
        Some(s) => Err(Error::Domain(format!("state index {s} out of range"))),
    }
}

/// Discounted occupation over `[0, t]`, or over the whole game.
pub fn occupation(model: &LimitModel, horizon: Horizon) -> Result<OccupationResult> {
    let l = model.num_classes();
    let id = DMatrix::<f64>::identity(l, l);
    let inner = match horizon {
        Horizon::Total => lu_solve(&(&id - &model.a), &id)?,
        Horizon::Finite(t) => {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::Domain(format!("horizon must be positive and finite, got {t}")));
            }
            let shifted = &model.a - &id;
            let decay = expm(&model.a, t)? * (-t).exp();
            lu_solve(&shifted, &(decay - &id))?
        }
    };
    Ok(OccupationResult {
        matrix: &model.mu * inner * &model.m,
        horizon,
    })
}

/// `μ (Id − A)^{-1} M g`.
pub fn limit_payoff(model: &LimitModel, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != model.num_states() {
        return Err(Error::invalid(
            "g",
            format!("payoff vector has {} entries for {} states", g.len(), model.num_states()),
        ));
    }
    let total = occupation(model, Horizon::Total)?.matrix;
    let g = nalgebra::DVector::from_column_slice(g);
    Ok((total * g).iter().copied().collect())
}

/// The state with outgoing transitions when all others are absorbing.
fn absorbing_source(chain: &PerturbedChain) -> Result<usize> {
    let active: Vec<usize> = (0..chain.num_states())
        .filter(|&s| chain.entries().row_len(s) > 0)
        .collect();
    match active.as_slice() {
        [s] => Ok(*s),
        _ => Err(Error::Domain(format!(
            "chain is not absorbing: {} states have outgoing transitions",
            active.len()
        ))),
    }
}

/// Limit position from the single non-absorbing state `ω_0` at time `t > 0`.
pub fn absorbing_closed_form(chain: &PerturbedChain, t: f64) -> Result<Vec<f64>> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::Domain(format!("time must be positive and finite, got {t}")));
    }
    let source = absorbing_source(chain)?;
    let exit = chain.row_exit(source);
    let (c, e) = (exit.exit.coeff(), exit.exit.exp());
    let mut row = vec![0.0; chain.num_states()];
    let leave = match e.cmp(&RationalExp::ONE) {
        std::cmp::Ordering::Greater => 0.0,
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Equal => -(-c * t).exp_m1(),
    };
    row[source] = 1.0 - leave;
    for &w in &exit.attaining {
        row[w] = leave * chain.entries().get(source, w).coeff() / c;
    }
    Ok(row)
}

/// `A(ω,ω') = c` where the exponent is exactly 1, else 0; zero row sums.
pub fn critical_generator(chain: &PerturbedChain) -> Result<DMatrix<f64>> {
    let n = chain.num_states();
    let mut a = DMatrix::zeros(n, n);
    for (i, j, m) in chain.entries().entries() {
        if m.exp() < RationalExp::ONE {
            return Err(Error::Domain(format!(
                "chain is not critical: entry {} → {} has exponent {}",
                chain.states()[i],
                chain.states()[j],
                m.exp()
            )));
        }
        if m.exp() == RationalExp::ONE {
            a[(i, j)] = m.coeff();
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = -off;
    }
    Ok(a)
}

/// `e^{At}` with the critical generator.
pub fn critical_closed_form(chain: &PerturbedChain, t: f64) -> Result<DMatrix<f64>> {
    expm(&critical_generator(chain)?, t)
}
