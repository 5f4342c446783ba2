// A small Monte Carlo run of F_n(t) for the Swanson process.

use ssgauss::{run_experiment, ExperimentConfig, FunctionSpec, ModelKind, Tolerances};

pub fn run_example() -> ssgauss::Result<()> {
    let cfg = ExperimentConfig {
        model: ModelKind::Swanson,
        f: FunctionSpec::Hermite { q: 2 },
        n: 128,
        t_grid: vec![0.5, 1.0],
        replicas: 1000,
        seed: 1,
        increments: None,
        tolerances: Tolerances::default(),
        bootstrap: 100,
        all_pairs: false,
    };
    let r = run_experiment(&cfg)?;
    println!("{} with {}: σ² = {:.6}", r.model.name, r.function.label, r.limit.sigma_sq);
    for s in &r.per_time {
        println!(
            "  t = {}: exact {:.4}, sample {:.4} ± {:.4}, kurtosis ratio {:.3}, KS p {:.3}",
            s.t, s.exact_var, s.sample_var, s.var_se, s.kurtosis_ratio, s.ks_p
        );
    }
    for c in &r.cross {
        println!("  cov of increments {:?} and {:?}: {:+.4} (se {:.4})", c.first, c.second, c.cov, c.se);
    }
    println!("passed: {}", r.verdicts.passed);
    Ok(())
}

fn main() -> ssgauss::Result<()> {
    run_example()
}
