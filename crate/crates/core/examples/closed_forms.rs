//! Absorbing and critical chains against their closed forms.

use perturbed_occupation::chain::PerturbedChain;
use perturbed_occupation::evaluator::{absorbing_closed_form, critical_closed_form, position};
use perturbed_occupation::hierarchy::analyze;
use perturbed_occupation::linalg::sup_distance;

fn load(name: &str) -> Result<PerturbedChain, Box<dyn std::error::Error>> {
    Ok(PerturbedChain::load(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR")))?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["absorbing_e1_2.json", "absorbing_e1.json", "absorbing_e3_2.json"] {
        let chain = load(name)?;
        let model = analyze(&chain)?;
        let closed = absorbing_closed_form(&chain, 1.0)?;
        let algo = position(&model, 1.0)?;
        let diff = closed.iter().enumerate().map(|(j, v)| (algo[(0, j)] - v).abs()).fold(0.0, f64::max);
        println!("{name}: closed form {closed:.4?}, difference {diff:.1e}");
    }
    let chain = load("critical_cycle.json")?;
    let model = analyze(&chain)?;
    for t in [0.5, 2.0] {
        let d = sup_distance(&position(&model, t)?, &critical_closed_form(&chain, t)?);
        println!("critical_cycle.json, t = {t}: |algorithm − e^(At)| = {d:.1e}");
    }
    Ok(())
}
