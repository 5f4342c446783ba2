// Draws fBm increments by Cholesky factorization and compares the sample
// covariance with the exact one.

use ssgauss::{sample_batch, IncrementCovariance, ModelKind, ModelSpec};

pub fn run_example() -> ssgauss::Result<()> {
    let model = ModelSpec::new(ModelKind::Fbm { h: 0.7 })?;
    let (n, len, rows) = (32, 8, 4000);
    let batch = sample_batch(&model, n, len, rows, 7)?;
    let ic = IncrementCovariance::new(&model, n, len)?;
    println!("{}: lag, exact cov, sample cov of increments 0 and lag", model.name);
    for lag in 0..len {
        let sample = (0..rows).map(|i| batch.row(i)[0] * batch.row(i)[lag]).sum::<f64>() / rows as f64;
        println!("  {lag}  {:>10.6}  {:>10.6}", ic.cov.get(0, lag), sample);
    }
    Ok(())
}

fn main() -> ssgauss::Result<()> {
    run_example()
}
