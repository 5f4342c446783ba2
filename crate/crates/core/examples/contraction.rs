// Contraction norms ‖f_n ⊗_1 f_n‖² and the total-variation estimate.

use ssgauss::{contraction_report, ModelKind, ModelSpec};

pub fn run_example() -> ssgauss::Result<()> {
    for kind in [ModelKind::Fbm { h: 0.5 }, ModelKind::Bifbm { h: 0.6, k: 0.5 }] {
        let model = ModelSpec::new(kind)?;
        let r = contraction_report(&model, 2, 1, &[32, 64, 128, 256], 1.0, true)?;
        println!("{}", model.name);
        for (i, (n, norm)) in r.n_values.iter().zip(&r.norms).enumerate() {
            match &r.tv_bound {
                Some(tv) => println!("  n = {n:<4} norm {norm:.4e}  tv bound {:.4}", tv[i]),
                None => println!("  n = {n:<4} norm {norm:.4e}"),
            }
        }
    }
    Ok(())
}

fn main() -> ssgauss::Result<()> {
    run_example()
}
