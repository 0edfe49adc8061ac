//! Zero-sum stochastic games played with regular stationary strategy families.
//!
//! Fixing `x_λ` and `y_λ` turns the game into a perturbed chain
//! `Q_λ(ω,·) = Σ_{i,j} x_λ(ω,i) y_λ(ω,j) q(·|ω,i,j)` and a stage payoff
//! vector `g_λ`. The limit discounted payoff is then the limit occupation
//! measure applied to `lim g_λ`.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::asymptotics::{Monomial, RationalExp};
use crate::chain::{PerturbedChain, MASS_TOL};
use crate::error::{Error, Result};
use crate::evaluator::limit_payoff;
use crate::hierarchy::analyze;
use crate::matrix::MonomialMatrix;
use crate::oracle::resolvent;

const PROB_TOL: f64 = 1e-12;

/// A finite stochastic game with per-state action sets.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticGame {
    pub states: Vec<String>,
    pub actions1: Vec<Vec<String>>,
    pub actions2: Vec<Vec<String>>,
    /// `payoff[ω][i][j]` in `[0, 1]`.
    pub payoff: Vec<Vec<Vec<f64>>>,
    /// `transition[ω][i][j][ω']`.
    pub transition: Vec<Vec<Vec<Vec<f64>>>>,
}

/// `family[ω]` maps action indices to the leading monomial of their probability.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularStrategyFamily {
    pub family: Vec<BTreeMap<usize, Monomial>>,
}

/// A game file: the game and one strategy family per player.
#[derive(Clone, Debug, PartialEq)]
pub struct GameSetup {
    pub game: StochasticGame,
    pub strategy1: RegularStrategyFamily,
    pub strategy2: RegularStrategyFamily,
}

type ActionMap = BTreeMap<String, Vec<String>>;
type StrategyMap = BTreeMap<String, BTreeMap<String, Monomial>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    states: Vec<String>,
    actions1: ActionMap,
    actions2: ActionMap,
    payoff: BTreeMap<String, Vec<Vec<f64>>>,
    transition: BTreeMap<String, BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>>,
    strategy1: StrategyMap,
    strategy2: StrategyMap,
}

impl StochasticGame {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_states();
        if n == 0 {
            return Err(Error::invalid("states", "state list is empty"));
        }
        for (w, name) in self.states.iter().enumerate() {
            let (a1, a2) = (self.actions1[w].len(), self.actions2[w].len());
            if a1 == 0 || a2 == 0 {
                return Err(Error::invalid(format!("actions[{name}]"), "empty action set"));
            }
            if self.payoff[w].len() != a1 || self.payoff[w].iter().any(|r| r.len() != a2) {
                return Err(Error::invalid(format!("payoff.{name}"), format!("expected a {a1}×{a2} matrix")));
            }
            for (i, row) in self.payoff[w].iter().enumerate() {
                for (j, &g) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(&g) {
                        return Err(Error::invalid(format!("payoff.{name}[{i}][{j}]"), format!("payoff {g} outside [0, 1]")));
                    }
                }
            }
            for i in 0..a1 {
                for j in 0..a2 {
                    let loc = || {
                        format!(
                            "transition.{name}.{}.{}",
                            self.actions1[w][i], self.actions2[w][j]
                        )
                    };
                    let q = &self.transition[w][i][j];
                    if q.len() != n || q.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                        return Err(Error::invalid(loc(), "probabilities must be nonnegative"));
                    }
                    let total: f64 = q.iter().sum();
                    if (total - 1.0).abs() > PROB_TOL {
                        return Err(Error::invalid(loc(), format!("probabilities sum to {total}")));
                    }
                }
            }
        }
        Ok(())
    }
}

impl RegularStrategyFamily {
    /// A stationary strategy: action `choice[ω]` with probability 1.
    pub fn pure(choice: &[usize]) -> Self {
        RegularStrategyFamily {
            family: choice.iter().map(|&a| BTreeMap::from([(a, Monomial::ONE)])).collect(),
        }
    }

    pub fn validate(&self, actions: &[Vec<String>], states: &[String], player: u8) -> Result<()> {
        if self.family.len() != states.len() {
            return Err(Error::invalid(format!("strategy{player}"), "one entry per state is required"));
        }
        for (w, strat) in self.family.iter().enumerate() {
            let loc = format!("strategy{player}.{}", states[w]);
            if strat.is_empty() {
                return Err(Error::invalid(loc, "empty support"));
            }
            let mut mass = 0.0;
            for (&a, m) in strat {
                if a >= actions[w].len() {
                    return Err(Error::invalid(&loc, format!("action index {a} out of range")));
                }
                if m.is_zero() || m.exp().is_negative() {
                    return Err(Error::invalid(&loc, format!("invalid probability {m}")));
                }
                if m.exp() == RationalExp::ZERO {
                    mass += m.coeff();
                }
            }
            if (mass - 1.0).abs() > MASS_TOL {
                return Err(Error::invalid(loc, format!("exponent-0 probabilities sum to {mass}, not 1")));
            }
        }
        Ok(())
    }

    /// Action probabilities at a concrete λ: monomials for positive
    /// exponents, the remaining mass shared by the exponent-0 actions.
    pub fn at(&self, state: usize, lambda: f64) -> Vec<(usize, f64)> {
        let strat = &self.family[state];
        let slow: f64 = strat
            .values()
            .filter(|m| m.exp() > RationalExp::ZERO)
            .map(|m| m.eval(lambda))
            .sum();
        let mass: f64 = strat
            .values()
            .filter(|m| m.exp() == RationalExp::ZERO)
            .map(|m| m.coeff())
            .sum();
        strat
            .iter()
            .map(|(&a, m)| {
                let p = if m.exp() == RationalExp::ZERO {
                    m.coeff() / mass * (1.0 - slow)
                } else {
                    m.eval(lambda)
                };
                (a, p)
            })
            .collect()
    }
}

impl GameSetup {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        let index: BTreeMap<&str, usize> = file.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if index.len() != file.states.len() {
            return Err(Error::invalid("states", "duplicate state names"));
        }
        let per_state = |field: &str, map: &ActionMap| -> Result<Vec<Vec<String>>> {
            check_keys(field, map.keys(), &index)?;
            file.states
                .iter()
                .map(|s| {
                    map.get(s)
                        .cloned()
                        .ok_or_else(|| Error::invalid(format!("{field}.{s}"), "missing state"))
                })
                .collect()
        };
        let actions1 = per_state("actions1", &file.actions1)?;
        let actions2 = per_state("actions2", &file.actions2)?;
        check_keys("payoff", file.payoff.keys(), &index)?;
        check_keys("transition", file.transition.keys(), &index)?;

        let n = file.states.len();
        let mut payoff = Vec::with_capacity(n);
        let mut transition = Vec::with_capacity(n);
        for (w, s) in file.states.iter().enumerate() {
            payoff.push(
                file.payoff
                    .get(s)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("payoff.{s}"), "missing state"))?,
            );
            let table = file
                .transition
                .get(s)
                .ok_or_else(|| Error::invalid(format!("transition.{s}"), "missing state"))?;
            let mut rows = Vec::new();
            for a1 in &actions1[w] {
                let by_a2 = table
                    .get(a1)
                    .ok_or_else(|| Error::invalid(format!("transition.{s}.{a1}"), "missing action"))?;
                let mut cols = Vec::new();
                for a2 in &actions2[w] {
                    let law = by_a2
                        .get(a2)
                        .ok_or_else(|| Error::invalid(format!("transition.{s}.{a1}.{a2}"), "missing action"))?;
                    let mut q = vec![0.0; n];
                    for (dest, &p) in law {
                        let d = *index.get(dest.as_str()).ok_or_else(|| {
                            Error::invalid(format!("transition.{s}.{a1}.{a2}"), format!("unknown state {dest:?}"))
                        })?;
                        q[d] = p;
                    }
                    cols.push(q);
                }
                rows.push(cols);
            }
            transition.push(rows);
        }
        let game = StochasticGame {
            states: file.states.clone(),
            actions1,
            actions2,
            payoff,
            transition,
        };
        game.validate()?;

        let strategy = |player: u8, map: &StrategyMap, actions: &[Vec<String>]| -> Result<RegularStrategyFamily> {
            check_keys(&format!("strategy{player}"), map.keys(), &index)?;
            let mut family = Vec::with_capacity(n);
            for (w, s) in file.states.iter().enumerate() {
                let loc = format!("strategy{player}.{s}");
                let strat = map.get(s).ok_or_else(|| Error::invalid(&loc, "missing state"))?;
                let mut out = BTreeMap::new();
                for (a, &m) in strat {
                    let k = actions[w]
                        .iter()
                        .position(|x| x == a)
                        .ok_or_else(|| Error::invalid(&loc, format!("unknown action {a:?}")))?;
                    out.insert(k, m);
                }
                family.push(out);
            }
            let fam = RegularStrategyFamily { family };
            fam.validate(actions, &file.states, player)?;
            Ok(fam)
        };
        let strategy1 = strategy(1, &file.strategy1, &game.actions1)?;
        let strategy2 = strategy(2, &file.strategy2, &game.actions2)?;
        Ok(GameSetup {
            game,
            strategy1,
            strategy2,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }
}

fn check_keys<'a>(field: &str, keys: impl Iterator<Item = &'a String>, index: &BTreeMap<&str, usize>) -> Result<()> {
    for k in keys {
        if !index.contains_key(k.as_str()) {
            return Err(Error::invalid(format!("{field}.{k}"), "unknown state"));
        }
    }
    Ok(())
}

/// The induced perturbed chain and the limit stage payoff vector.
pub fn compile(
    game: &StochasticGame,
    x: &RegularStrategyFamily,
    y: &RegularStrategyFamily,
) -> Result<(PerturbedChain, Vec<f64>)> {
    game.validate()?;
    x.validate(&game.actions1, &game.states, 1)?;
    y.validate(&game.actions2, &game.states, 2)?;
    let n = game.num_states();
    let mut entries = MonomialMatrix::new(n);
    let mut g = vec![0.0; n];
    for w in 0..n {
        let mut reward = Monomial::ZERO;
        for (&i, &xi) in &x.family[w] {
            for (&j, &yj) in &y.family[w] {
                let weight = xi.checked_mul(yj)?;
                reward = reward + weight.scale(game.payoff[w][i][j])?;
                for (dest, &p) in game.transition[w][i][j].iter().enumerate() {
                    if dest != w && p > 0.0 {
                        entries.accumulate(w, dest, weight.scale(p)?);
                    }
                }
            }
        }
        g[w] = reward.limit()?;
    }
    let chain = PerturbedChain::from_matrix(game.states.clone(), entries)?;
    Ok((chain, g))
}

/// `lim_{λ→0} γ_λ(·, x_λ, y_λ)`.
pub fn limit_game_payoff(
    game: &StochasticGame,
    x: &RegularStrategyFamily,
    y: &RegularStrategyFamily,
) -> Result<Vec<f64>> {
    let (chain, g) = compile(game, x, y)?;
    limit_payoff(&analyze(&chain)?, &g)
}

/// Transition matrix and stage payoff under the strategies at a concrete λ.
pub fn instantiate_game(
    game: &StochasticGame,
    x: &RegularStrategyFamily,
    y: &RegularStrategyFamily,
    lambda: f64,
) -> (DMatrix<f64>, Vec<f64>) {
    let n = game.num_states();
    let mut q = DMatrix::zeros(n, n);
    let mut g = vec![0.0; n];
    for w in 0..n {
        for (i, xi) in x.at(w, lambda) {
            for (j, yj) in y.at(w, lambda) {
                g[w] += xi * yj * game.payoff[w][i][j];
                for (dest, &p) in game.transition[w][i][j].iter().enumerate() {
                    q[(w, dest)] += xi * yj * p;
                }
            }
        }
    }
    (q, g)
}

/// `γ_λ = Σ_m λ(1−λ)^{m−1} Q_λ^{m−1} g_λ`.
pub fn discounted_payoff(
    game: &StochasticGame,
    x: &RegularStrategyFamily,
    y: &RegularStrategyFamily,
    lambda: f64,
) -> Result<Vec<f64>> {
    let (q, g) = instantiate_game(game, x, y, lambda);
    let occ = resolvent(&q, lambda)?;
    Ok((occ * DVector::from_vec(g)).iter().copied().collect())
}
