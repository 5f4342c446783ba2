// Numerical audit of the covariance hypotheses for two models.

use ssgauss::analysis::DEFAULT_SLOPE_TOL;
use ssgauss::{check_all, ModelKind, ModelSpec};

pub fn run_example() -> ssgauss::Result<()> {
    for kind in [ModelKind::Subfbm { h: 0.35 }, ModelKind::DwZ1 { alpha: 0.5 }] {
        let model = ModelSpec::new(kind)?;
        println!("{}", model.name);
        for r in check_all(&model, DEFAULT_SLOPE_TOL)? {
            println!(
                "  {:<10} sup ratio {:>10.3e}  trend {:>6.3}  {}",
                format!("{:?}", r.target),
                r.ratio_sup,
                r.trend_slope,
                if r.verdict { "ok" } else { "FAIL" }
            );
        }
    }
    Ok(())
}

fn main() -> ssgauss::Result<()> {
    run_example()
}
