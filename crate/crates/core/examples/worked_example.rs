//! The eight-state example: thresholds, classes at each level and the final
//! model `(μ, A, M, N)`.

use perturbed_occupation::chain::PerturbedChain;
use perturbed_occupation::hierarchy::analyze;
use perturbed_occupation::report::Report;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ill.json");
    let chain = PerturbedChain::load(path)?;
    let model = analyze(&chain)?;

    let alphas: Vec<String> = model.alphas().iter().map(|a| a.to_string()).collect();
    println!("thresholds: {}", alphas.join(", "));
    for level in &model.levels {
        let classes: Vec<Vec<&str>> = level
            .decomposition
            .recurrent
            .iter()
            .map(|c| level.members[level.parent[c[0]]].iter().map(|&s| chain.states()[s].as_str()).collect())
            .collect();
        println!("level {} (α = {}): classes {classes:?}", level.index, level.alpha);
    }
    let names = |c: &Vec<usize>| c.iter().map(|&s| chain.states()[s].clone()).collect::<Vec<_>>();
    println!("final classes: {:?}", model.classes.iter().map(names).collect::<Vec<_>>());
    println!("μ = {}A = {}M = {}N = {}", model.mu, model.a, model.m, model.n);

    let report = Report::from_model(&model);
    println!("report is {} bytes of JSON", report.to_json().len());
    Ok(())
}
