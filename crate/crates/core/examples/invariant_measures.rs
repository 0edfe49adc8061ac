//! Leading-order stationary measures of a class, and the entrance law of
//! transient states.

use perturbed_occupation::asymptotics::{Monomial, RationalExp};
use perturbed_occupation::matrix::MonomialMatrix;
use perturbed_occupation::structure::{
    classify, entrance_law, invariant_measure, invariant_measure_by_exit_rates, Digraph, MeasureOptions,
};

fn mono(c: f64, e: &str) -> Monomial {
    Monomial::new(c, e.parse::<RationalExp>().unwrap()).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A three-cycle that is fast on one arc and slow on another.
    let mut m = MonomialMatrix::new(3);
    m.set(0, 1, mono(2.0, "1/5"));
    m.set(1, 2, mono(3.0, "2/5"));
    m.set(2, 0, mono(5.0, "3/5"));
    let opts = MeasureOptions::default();
    let pi = invariant_measure(&m, &[0, 1, 2], &opts)?;
    let check = invariant_measure_by_exit_rates(&m, &[0, 1, 2])?;
    for (s, w) in pi.iter() {
        println!("π({}) = {w}", s + 1);
    }
    println!("exit-rate formula agrees: {}", pi.approx_eq(&check));

    // Two absorbing targets reached from a transient pair that traps itself
    // at leading order and escapes at order 1/2.
    let mut t = MonomialMatrix::new(4);
    t.set(2, 3, mono(0.5, "0"));
    t.set(3, 2, mono(0.5, "0"));
    t.set(2, 0, mono(1.0, "1/2"));
    t.set(3, 1, mono(3.0, "1/2"));
    let decomposition = classify(&Digraph::support_of(&t));
    let law = entrance_law(&t, &decomposition, &opts)?;
    println!("classes {:?}, transient {:?}", decomposition.recurrent, decomposition.transient);
    for s in 0..4 {
        println!("entrance law from {}: {:.4?}", s + 1, law.row(s));
    }
    Ok(())
}
