// Prints the model catalog and checks self-similarity of each example kernel.

use ssgauss::list_models;

pub fn run_example() -> ssgauss::Result<()> {
    for entry in list_models() {
        let m = &entry.example;
        let (s, t, c) = (0.3, 0.8, 2.5);
        let scaled = m.kernel(c * s, c * t)?;
        let expected = c.powf(2.0 * m.beta) * m.kernel(s, t)?;
        println!(
            "{:<8} α = {:<10} β = {:<8} λ = {:<10} example {:<24} R(0.3,0.8) = {:.6}  scaling error {:.1e}",
            entry.id,
            entry.alpha,
            entry.beta,
            entry.lambda,
            m.name,
            m.kernel(s, t)?,
            (scaled - expected).abs()
        );
    }
    Ok(())
}

fn main() -> ssgauss::Result<()> {
    run_example()
}
