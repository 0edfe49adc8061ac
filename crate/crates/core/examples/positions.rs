//! Limit positions `μ e^{At} M`, by time and by fraction of the game played.

use perturbed_occupation::chain::PerturbedChain;
use perturbed_occupation::evaluator::{position_query, PositionQuery, PositionTime};
use perturbed_occupation::hierarchy::analyze;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ill.json");
    let chain = PerturbedChain::load(path)?;
    let model = analyze(&chain)?;
    let from = chain.state_index("1");

    for time in [PositionTime::Time(0.0), PositionTime::Time(0.5), PositionTime::Time(2.0), PositionTime::Fraction(0.9)] {
        let row = position_query(&model, &PositionQuery { time, from })?;
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.4}")).collect();
        println!("{time:?} (t = {:.4}) from state 1: [{}]", time.to_time()?, cells.join(", "));
    }
    Ok(())
}
