//! Direct powers of `Q_λ` against the limit model as `λ` shrinks.

use perturbed_occupation::chain::PerturbedChain;
use perturbed_occupation::hierarchy::analyze;
use perturbed_occupation::oracle::convergence_sweep;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ill.json");
    let chain = PerturbedChain::load(path)?;
    let model = analyze(&chain)?;
    let sweep = convergence_sweep(&chain, &model, 1.0, &[1e-3, 1e-6, 1e-9, 1e-12])?;
    println!("{:>8} {:>12} {:>12} {:>12}", "λ", "position", "occ. to t", "total");
    for p in &sweep.points {
        println!("{:>8.0e} {:>12.3e} {:>12.3e} {:>12.3e}", p.lambda, p.position_err, p.occupation_t_err, p.total_err);
    }
    println!("non-increasing: {}", sweep.monotone());
    Ok(())
}
