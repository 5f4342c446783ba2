// Hermite coefficients of a few functions, by quadrature and in closed form.

use ssgauss::hermite::expand;
use ssgauss::FunctionSpec;

pub fn run_example() -> ssgauss::Result<()> {
    let closed = FunctionSpec::EvenPower { p: 2 }.build()?;
    let numeric = expand("x^4 - 3", |x| x.powi(4) - 3.0, 8, 64)?;
    println!("x^4 - 3");
    for q in 1..=6 {
        println!("  c_{q}: closed {:>10.6}  quadrature {:>10.6}", closed.coeff(q), numeric.coeff(q));
    }

    let abs3 = FunctionSpec::OddAbsPower { p: 1 }.build()?;
    println!("|x|^3 - E|Z|^3, Hermite rank {}", abs3.rank);
    for (q, c) in abs3.terms().take(5) {
        println!("  c_{q} = {c:.6}");
    }

    let f = expand("cos(x) - e^{-1/2}", |x| x.cos() - (-0.5f64).exp(), 10, 64)?;
    println!("cos(x) - e^(-1/2), rank {}", f.rank);
    for (q, c) in f.terms() {
        println!("  c_{q} = {c:+.6}");
    }
    Ok(())
}

fn main() -> ssgauss::Result<()> {
    run_example()
}
