//! Discounted occupation measures and limit payoffs in the three regimes of a
//! symmetric two-state chain `λ^a`.

use perturbed_occupation::asymptotics::{Monomial, RationalExp};
use perturbed_occupation::chain::PerturbedChain;
use perturbed_occupation::evaluator::{limit_payoff, occupation, Horizon};
use perturbed_occupation::hierarchy::analyze;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for a in ["1/2", "1", "2"] {
        let m = Monomial::new(1.0, a.parse::<RationalExp>()?)?;
        let chain = PerturbedChain::new(vec!["1".into(), "2".into()], [(0, 1, m), (1, 0, m)])?;
        let model = analyze(&chain)?;
        let total = occupation(&model, Horizon::Total)?.matrix;
        let early = occupation(&model, Horizon::Finite(1.0))?.matrix;
        let payoff = limit_payoff(&model, &[1.0, 0.0])?;
        println!("a = {a}");
        println!("  total occupation from 1: [{:.4}, {:.4}]", total[(0, 0)], total[(0, 1)]);
        println!("  occupation up to t = 1 from 1: [{:.4}, {:.4}]", early[(0, 0)], early[(0, 1)]);
        println!("  payoff of g = (1, 0): [{:.4}, {:.4}]", payoff[0], payoff[1]);
    }
    Ok(())
}
