//! Machine-readable rendering of a [`LimitModel`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::asymptotics::RationalExp;
use crate::error::{Error, Result};
use crate::hierarchy::LimitModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub states: Vec<String>,
    pub alphas: Vec<RationalExp>,
    pub levels: Vec<LevelReport>,
    pub classes: Vec<Vec<String>>,
    pub mu: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    pub n: u64,
}

/// One level: its nodes as sets of original states, which of them are the
/// classes formed at this level, the class measures and the aggregated entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelReport {
    pub index: usize,
    pub alpha: RationalExp,
    pub nodes: Vec<Vec<String>>,
    pub classes: Vec<ClassReport>,
    pub transient: Vec<usize>,
    pub aggregated: Vec<EntryReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassReport {
    pub node: usize,
    pub period: u64,
    pub measure: Vec<MeasureEntry>,
}

/// Value of a class measure on one node of the previous level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureEntry {
    pub states: Vec<String>,
    pub coeff: f64,
    pub exp: RationalExp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryReport {
    pub from: usize,
    pub to: usize,
    pub coeff: f64,
    pub exp: RationalExp,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl Report {
    pub fn from_model(model: &LimitModel) -> Self {
        let name = |s: &usize| model.states[*s].clone();
        let names = |set: &[usize]| set.iter().map(name).collect::<Vec<_>>();
        let mut prev_members: Vec<Vec<usize>> = (0..model.num_states()).map(|s| vec![s]).collect();
        let mut levels = Vec::with_capacity(model.levels.len());
        for level in &model.levels {
            let classes = level
                .decomposition
                .recurrent
                .iter()
                .enumerate()
                .map(|(c, class)| ClassReport {
                    node: level.parent[class[0]],
                    period: level.decomposition.period[c],
                    measure: level.measures[c]
                        .iter()
                        .map(|(v, m)| MeasureEntry {
                            states: names(&prev_members[v]),
                            coeff: m.coeff(),
                            exp: m.exp(),
                        })
                        .collect(),
                })
                .collect();
            levels.push(LevelReport {
                index: level.index,
                alpha: level.alpha,
                nodes: level.members.iter().map(|m| names(m)).collect(),
                classes,
                transient: level.decomposition.transient.iter().map(|&t| level.parent[t]).collect(),
                aggregated: level
                    .aggregated
                    .entries()
                    .map(|(from, to, m)| EntryReport {
                        from,
                        to,
                        coeff: m.coeff(),
                        exp: m.exp(),
                    })
                    .collect(),
            });
            prev_members = level.members.clone();
        }
        Report {
            states: model.states.clone(),
            alphas: model.alphas(),
            levels,
            classes: model.classes.iter().map(|c| names(c)).collect(),
            mu: rows(&model.mu),
            a: rows(&model.a),
            m: rows(&model.m),
            n: model.n,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }

    /// Whether the report's numeric content equals the model's.
    pub fn matches(&self, model: &LimitModel) -> bool {
        self.states == model.states
            && self.alphas == model.alphas()
            && self.levels.len() == model.levels.len()
            && self.mu == rows(&model.mu)
            && self.a == rows(&model.a)
            && self.m == rows(&model.m)
            && self.n == model.n
            && self.classes.len() == model.classes.len()
    }
}
