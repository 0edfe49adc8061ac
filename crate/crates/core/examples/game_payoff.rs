//! A two-state game: compile strategy families into a chain and compare the
//! limit payoff with discounted payoffs at small `λ`.

use perturbed_occupation::game::{compile, discounted_payoff, limit_game_payoff, GameSetup};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/game_switch.json");
    let setup = GameSetup::load(path)?;
    let (chain, g) = compile(&setup.game, &setup.strategy1, &setup.strategy2)?;
    println!("compiled chain:\n{}", chain.to_json());
    println!("limit stage payoff: {g:?}");
    let limit = limit_game_payoff(&setup.game, &setup.strategy1, &setup.strategy2)?;
    println!("limit payoff: {limit:.6?}");
    for lambda in [1e-2, 1e-4, 1e-6] {
        let v = discounted_payoff(&setup.game, &setup.strategy1, &setup.strategy2, lambda)?;
        println!("λ = {lambda:e}: {v:.6?}");
    }
    Ok(())
}
