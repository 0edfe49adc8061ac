//! Perturbed chain families `Q_λ(ω,ω') ~ c·λ^e` and their row quantities.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{Monomial, RationalExp};
use crate::error::{Error, Result};
use crate::matrix::MonomialMatrix;
use crate::structure::{classify, Digraph};

/// Tolerance on the exponent-0 row mass when deciding whether a row leaves
/// its state with probability tending to 1.
pub const MASS_TOL: f64 = 1e-9;

/// A finite family of stochastic matrices given by the leading monomials of
/// its off-diagonal entries. Diagonals are implied.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedChain {
    states: Vec<String>,
    entries: MonomialMatrix,
    exactly_leaving: Vec<bool>,
    lambda_max: f64,
}

/// Leading term of the probability of leaving a state.
#[derive(Clone, Debug, PartialEq)]
pub struct RowExit {
    pub state: usize,
    pub exit: Monomial,
    pub attaining: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    states: Vec<String>,
    transitions: Vec<TransitionRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionRecord {
    from: String,
    to: String,
    coeff: f64,
    exp: String,
}

impl PerturbedChain {
    /// Builds and validates a chain from indexed transitions.
    pub fn new(
        states: Vec<String>,
        transitions: impl IntoIterator<Item = (usize, usize, Monomial)>,
    ) -> Result<Self> {
        check_states(&states)?;
        let n = states.len();
        let mut entries = MonomialMatrix::new(n);
        let mut seen = BTreeSet::new();
        for (k, (from, to, m)) in transitions.into_iter().enumerate() {
            let loc = format!("transitions[{k}]");
            if from >= n || to >= n {
                return Err(Error::invalid(loc, format!("state index out of range ({from}→{to})")));
            }
            check_entry(&loc, &states[from], &states[to], from, to, m)?;
            if !seen.insert((from, to)) {
                return Err(Error::invalid(
                    loc,
                    format!("duplicate transition {} → {}", states[from], states[to]),
                ));
            }
            entries.set(from, to, m);
        }
        Self::from_matrix(states, entries)
    }

    /// Builds a chain from a monomial matrix (diagonal ignored).
    pub fn from_matrix(states: Vec<String>, entries: MonomialMatrix) -> Result<Self> {
        check_states(&states)?;
        if entries.size() != states.len() {
            return Err(Error::invalid(
                "transitions",
                format!("matrix has {} rows for {} states", entries.size(), states.len()),
            ));
        }
        let mut exactly_leaving = Vec::with_capacity(states.len());
        for (i, name) in states.iter().enumerate() {
            for (j, m) in entries.row(i) {
                check_entry(&format!("row {name}"), name, &states[j], i, j, m)?;
            }
            let mass = entries.row_constant_mass(i);
            if mass > 1.0 + MASS_TOL {
                return Err(Error::invalid(
                    format!("row {name}"),
                    format!("exponent-0 transition mass {mass} exceeds 1"),
                ));
            }
            exactly_leaving.push(mass >= 1.0 - MASS_TOL);
        }
        let mut chain = PerturbedChain {
            states,
            entries,
            exactly_leaving,
            lambda_max: 1.0,
        };
        chain.lambda_max = chain.compute_lambda_max()?;
        Ok(chain)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ChainFile = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        check_states(&file.states)?;
        let index: BTreeMap<&str, usize> = file
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut transitions = Vec::with_capacity(file.transitions.len());
        for (k, t) in file.transitions.iter().enumerate() {
            let lookup = |field: &str, name: &str| {
                index.get(name).copied().ok_or_else(|| {
                    Error::invalid(format!("transitions[{k}].{field}"), format!("unknown state {name:?}"))
                })
            };
            let from = lookup("from", &t.from)?;
            let to = lookup("to", &t.to)?;
            let exp: RationalExp = t
                .exp
                .parse()
                .map_err(|e: Error| Error::parse(format!("transitions[{k}].exp"), e.to_string()))?;
            if !t.coeff.is_finite() || t.coeff <= 0.0 {
                return Err(Error::invalid(
                    format!("transitions[{k}].coeff"),
                    format!("coefficient must be a positive finite number, got {}", t.coeff),
                ));
            }
            if exp.is_negative() || exp.is_infinite() {
                return Err(Error::invalid(
                    format!("transitions[{k}].exp"),
                    format!("exponent must be finite and nonnegative, got {exp}"),
                ));
            }
            let m = Monomial::new(t.coeff, exp).map_err(|e| Error::invalid(format!("transitions[{k}]"), e.to_string()))?;
            transitions.push((from, to, m));
        }
        Self::new(file.states, transitions)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: format!("{}: {location}", path.display()),
                message,
            },
            Error::Invalid { location, message } => Error::Invalid {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }

    /// The chain file rendering (pretty JSON).
    pub fn to_json(&self) -> String {
        let file = ChainFile {
            states: self.states.clone(),
            transitions: self
                .entries
                .entries()
                .map(|(i, j, m)| TransitionRecord {
                    from: self.states[i].clone(),
                    to: self.states[j].clone(),
                    coeff: m.coeff(),
                    exp: m.exp().to_string(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("chain files always serialise")
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn entries(&self) -> &MonomialMatrix {
        &self.entries
    }

    /// Largest λ at which every implied diagonal is nonnegative.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Whether the row's exponent-0 mass is 1, so the diagonal vanishes in the limit.
    pub fn is_exactly_leaving(&self, state: usize) -> bool {
        self.exactly_leaving[state]
    }

    pub fn row_exit(&self, state: usize) -> RowExit {
        let exit = self.entries.row_exit(state);
        let attaining = self
            .entries
            .row(state)
            .filter(|(_, m)| m.exp() == exit.exp())
            .map(|(j, _)| j)
            .collect();
        RowExit {
            state,
            exit,
            attaining,
        }
    }

    /// Arcs with exponent below 1, plus a self-loop wherever the diagonal has a
    /// positive limit.
    pub fn sub_unit_skeleton(&self) -> Digraph {
        let mut g = Digraph::new(self.num_states());
        for (i, j, m) in self.entries.entries() {
            if m.exp() < RationalExp::ONE {
                g.add_arc(i, j);
            }
        }
        for i in 0..self.num_states() {
            if !self.exactly_leaving[i] {
                g.add_arc(i, i);
            }
        }
        g
    }

    /// Product of the periods of the recurrence classes of the sub-unit skeleton.
    pub fn averaging_period(&self) -> u64 {
        classify(&self.sub_unit_skeleton())
            .period
            .iter()
            .fold(1u64, |acc, &d| acc.saturating_mul(d))
    }

    /// Off-diagonal values of row `state` at a concrete λ.
    ///
    /// Entries are the exact monomials `c·λ^e`, except in exactly-leaving rows
    /// where the exponent-0 entries share `1 − Σ(positive-exponent entries)`
    /// in proportion to their coefficients, so that the diagonal is 0.
    pub fn instantiated_row(&self, state: usize, lambda: f64) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = self
            .entries
            .row(state)
            .map(|(j, m)| (j, m.eval(lambda)))
            .collect();
        if self.exactly_leaving[state] {
            let mass = self.entries.row_constant_mass(state);
            let slow: f64 = self
                .entries
                .row(state)
                .filter(|(_, m)| m.exp() > RationalExp::ZERO)
                .map(|(_, m)| m.eval(lambda))
                .sum();
            let share = (1.0 - slow).max(0.0) / mass;
            for ((_, v), (_, m)) in row.iter_mut().zip(self.entries.row(state)) {
                if m.exp() == RationalExp::ZERO {
                    *v = m.coeff() * share;
                }
            }
        }
        row
    }

    fn row_feasible(&self, state: usize, lambda: f64) -> bool {
        let slow: f64 = self
            .entries
            .row(state)
            .filter(|(_, m)| m.exp() > RationalExp::ZERO)
            .map(|(_, m)| m.eval(lambda))
            .sum();
        if self.exactly_leaving[state] {
            slow <= 1.0
        } else {
            self.entries.row_constant_mass(state) + slow <= 1.0
        }
    }

    fn compute_lambda_max(&self) -> Result<f64> {
        let feasible = |lambda: f64| (0..self.num_states()).all(|s| self.row_feasible(s, lambda));
        if feasible(1.0) {
            return Ok(1.0);
        }
        let (mut lo, mut hi) = (-700.0f64, 0.0f64);
        if !feasible(lo.exp()) {
            return Err(Error::invalid(
                "transitions",
                "no λ in (0,1] gives nonnegative diagonals",
            ));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid.exp()) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo.exp())
    }
}

fn check_states(states: &[String]) -> Result<()> {
    if states.is_empty() {
        return Err(Error::invalid("states", "state list is empty"));
    }
    let mut seen = BTreeSet::new();
    for (k, s) in states.iter().enumerate() {
        if !seen.insert(s.as_str()) {
            return Err(Error::invalid(format!("states[{k}]"), format!("duplicate state {s:?}")));
        }
    }
    Ok(())
}

fn check_entry(loc: &str, from_name: &str, to_name: &str, from: usize, to: usize, m: Monomial) -> Result<()> {
    if from == to {
        return Err(Error::invalid(
            loc,
            format!("self-transition {from_name} → {to_name}; diagonals are implied"),
        ));
    }
    if m.is_zero() {
        return Err(Error::invalid(loc, "zero transitions must be omitted"));
    }
    if m.exp().is_negative() {
        return Err(Error::invalid(loc, format!("negative exponent {}", m.exp())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| i.to_string()).collect()
    }

    fn mono(c: f64, num: i64, den: i64) -> Monomial {
        Monomial::new(c, RationalExp::new(num, den).unwrap()).unwrap()
    }

    #[test]
    fn loads_symmetric_pair() {
        let text = r#"{"states":["1","2"],"transitions":[
            {"from":"1","to":"2","coeff":1.0,"exp":"1"},
            {"from":"2","to":"1","coeff":1.0,"exp":"1"}]}"#;
        let chain = PerturbedChain::from_json_str(text).unwrap();
        assert_eq!(chain.lambda_max(), 1.0);
        assert_eq!(chain.num_states(), 2);
        let back = PerturbedChain::from_json_str(&chain.to_json()).unwrap();
        assert_eq!(back, chain);
    }

    #[test]
    fn rejects_excess_constant_mass() {
        let err = PerturbedChain::new(names(3), [(0, 1, Monomial::ONE), (0, 2, mono(0.5, 0, 1))]);
        assert!(matches!(err, Err(Error::Invalid { .. })));
    }

    #[test]
    fn reports_field_locations() {
        let cases = [
            (r#"{"states":[],"transitions":[]}"#, "states"),
            (r#"{"states":["a","a"],"transitions":[]}"#, "states[1]"),
            (r#"{"states":["a"],"transitions":[{"from":"a","to":"b","coeff":1,"exp":"0"}]}"#, "transitions[0].to"),
            (r#"{"states":["a","b"],"transitions":[{"from":"a","to":"b","coeff":-1,"exp":"0"}]}"#, "transitions[0].coeff"),
            (r#"{"states":["a","b"],"transitions":[{"from":"a","to":"b","coeff":1,"exp":"-1/2"}]}"#, "transitions[0].exp"),
            (r#"{"states":["a","b"],"transitions":[{"from":"a","to":"a","coeff":1,"exp":"1"}]}"#, "transitions[0]"),
        ];
        for (text, loc) in cases {
            match PerturbedChain::from_json_str(text) {
                Err(Error::Invalid { location, .. }) | Err(Error::Parse { location, .. }) => {
                    assert_eq!(location, loc, "{text}")
                }
                other => panic!("{text}: {other:?}"),
            }
        }
        let dup = r#"{"states":["a","b"],"transitions":[
            {"from":"a","to":"b","coeff":1,"exp":"1"},{"from":"a","to":"b","coeff":1,"exp":"2"}]}"#;
        assert!(matches!(PerturbedChain::from_json_str(dup), Err(Error::Invalid { .. })));
        let extra = r#"{"states":["a"],"transitions":[],"extra":1}"#;
        assert!(matches!(PerturbedChain::from_json_str(extra), Err(Error::Parse { .. })));
    }

    #[test]
    fn row_exit_cases() {
        let chain = PerturbedChain::new(
            names(4),
            [(0, 1, mono(1.0, 1, 5)), (0, 2, mono(1.0, 3, 5)), (1, 2, mono(2.0, 1, 2)), (1, 3, mono(3.0, 1, 2))],
        )
        .unwrap();
        let r = chain.row_exit(0);
        assert!(r.exit.approx_eq(mono(1.0, 1, 5)));
        assert_eq!(r.attaining, vec![1]);
        let r = chain.row_exit(1);
        assert!(r.exit.approx_eq(mono(5.0, 1, 2)));
        assert_eq!(r.attaining, vec![2, 3]);
        let r = chain.row_exit(3);
        assert!(r.exit.is_zero());
        assert!(r.attaining.is_empty());
    }

    #[test]
    fn skeleton_and_period() {
        let swap = PerturbedChain::new(names(2), [(0, 1, Monomial::ONE), (1, 0, Monomial::ONE)]).unwrap();
        let g = swap.sub_unit_skeleton();
        assert!(g.has_arc(0, 1) && g.has_arc(1, 0));
        assert!(!g.has_arc(0, 0) && !g.has_arc(1, 1));
        assert_eq!(swap.averaging_period(), 2);

        let frozen = PerturbedChain::new(names(3), []).unwrap();
        assert_eq!(frozen.averaging_period(), 1);

        let slow = PerturbedChain::new(names(2), [(0, 1, mono(1.0, 1, 1)), (1, 0, mono(1.0, 1, 1))]).unwrap();
        let g = slow.sub_unit_skeleton();
        assert!(g.has_arc(0, 0) && g.has_arc(1, 1) && !g.has_arc(0, 1));
    }

    #[test]
    fn lambda_max_bisection() {
        // 0.5 + 2λ ≤ 1 ⇔ λ ≤ 1/4.
        let chain = PerturbedChain::new(names(3), [(0, 1, mono(0.5, 0, 1)), (0, 2, mono(2.0, 1, 1))]).unwrap();
        assert!((chain.lambda_max() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn exactly_leaving_rows_have_zero_diagonal() {
        let third = mono(1.0 / 3.0, 0, 1);
        let chain = PerturbedChain::new(names(4), [(0, 1, third), (0, 2, third), (0, 3, third), (1, 0, mono(1.0, 1, 2))])
            .unwrap();
        assert!(chain.is_exactly_leaving(0));
        assert!(!chain.is_exactly_leaving(1));
        for lambda in [1.0, 1e-3, 1e-12] {
            let s: f64 = chain.instantiated_row(0, lambda).iter().map(|(_, v)| v).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
