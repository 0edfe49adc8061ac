//! Leading-order arithmetic: `⊕` keeps the smaller exponent, `⊗` adds them.

use perturbed_occupation::asymptotics::{Monomial, RationalExp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Monomial::new(2.0, "1/5".parse()?)?;
    let b = Monomial::new(3.0, "2/5".parse()?)?;
    let c = Monomial::new(0.5, RationalExp::new(1, 5)?)?;

    println!("a = {a}, b = {b}, c = {c}");
    println!("a ⊕ b = {}", a + b);
    println!("a ⊕ c = {}", a + c);
    println!("a ⊗ b = {}", a * b);
    println!("b / a = {}", b.checked_div(a)?);
    for lambda in [1e-2, 1e-4, 1e-6] {
        println!("λ = {lambda:e}: (a+b)(λ) / (a⊕b)(λ) = {:.6}", (a.eval(lambda) + b.eval(lambda)) / (a + b).eval(lambda));
    }
    println!("limits: a → {}, constant 0.25 → {}", a.limit()?, Monomial::constant(0.25)?.limit()?);
    println!("json: {}", serde_json::to_string(&a)?);
    Ok(())
}
