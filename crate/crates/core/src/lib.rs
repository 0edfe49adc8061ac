//! Limit behaviour of Markov chains whose transition probabilities are
//! monomials `c·λ^e` in a small parameter `λ`.
//!
//! A chain is analyzed level by level. At each threshold `α` the recurrent
//! classes of the transitions of order at most `α` are aggregated under their
//! leading-order stationary measures. Once `α ≥ 1` the result is a
//! [`hierarchy::LimitModel`]: an entrance law `μ`, a generator `A` over the
//! final classes, within-class frequencies `M` and an averaging period `N`.
//! Positions on the rescaled time axis `t = λ·n` are then `μ e^{At} M`.
//!
//! ```no_run
//! use perturbed_occupation::chain::PerturbedChain;
//! use perturbed_occupation::evaluator::position;
//! use perturbed_occupation::hierarchy::analyze;
//!
//! let chain = PerturbedChain::load("chain.json")?;
//! let model = analyze(&chain)?;
//! let p = position(&model, 1.0)?;
//! # Ok::<(), perturbed_occupation::error::Error>(())
//! ```
//!
//! [`oracle`] recomputes the same quantities directly from `Q_λ` in
//! double-double arithmetic, and [`game`] compiles stochastic games with
//! monomial strategy families into chains.

pub mod asymptotics;
pub mod chain;
pub mod error;
pub mod matrix;
pub mod linalg;
pub mod expm;
pub mod structure;
pub mod hierarchy;
pub mod report;
pub mod evaluator;
pub mod oracle;
pub mod game;
pub mod cli;
