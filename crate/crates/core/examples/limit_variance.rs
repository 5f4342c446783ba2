// Limit variances σ² for Hermite functionals, per chaos, across α.

use ssgauss::limitvar::{gate_holds, DEFAULT_REL_TOL};
use ssgauss::{sigma_q_sq, sigma_sq, FunctionSpec};

pub fn run_example() -> ssgauss::Result<()> {
    println!("σ_q²(α) for q = 2, 3, 4");
    for alpha in [0.2, 0.5, 0.9, 1.0, 1.2, 1.4] {
        let mut row = format!("  α = {alpha:<4}");
        for q in 2..=4 {
            if gate_holds(alpha, q) {
                row += &format!("  {:>10.6}", sigma_q_sq(alpha, q, DEFAULT_REL_TOL)?.value);
            } else {
                row += &format!("  {:>10}", "-");
            }
        }
        println!("{row}");
    }

    let f = FunctionSpec::EvenPower { p: 2 }.build()?;
    let lv = sigma_sq(&f, 0.5, DEFAULT_REL_TOL)?;
    println!("x^4 - 3 at α = 0.5: σ² = {:.10} (tail ≤ {:.1e})", lv.sigma_sq, lv.tail_bound);
    for term in &lv.per_chaos {
        println!("  q = {}: c_q = {:.3}, σ_q² = {:.8}", term.q, term.coeff, term.sigma_q_sq);
    }
    Ok(())
}

fn main() -> ssgauss::Result<()> {
    run_example()
}
