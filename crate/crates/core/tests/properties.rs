use proptest::prelude::*;

use ssgauss::analysis::contraction_norm_corr;
use ssgauss::covgrid::IncrementCovariance;
use ssgauss::hermite::{FunctionSpec, HermiteFunction};
use ssgauss::matrix::SymMatrix;
use ssgauss::models::{ModelKind, ModelSpec};
use ssgauss::montecarlo::{
    exact_variance_on, kolmogorov_survival, ks_test, CrossStats, TimeStats, Tolerances, Verdicts,
};
use ssgauss::numeric::floor_nt;

fn any_model() -> impl Strategy<Value = ModelKind> {
    prop_oneof![
        (0.05..0.95f64).prop_map(|h| ModelKind::Fbm { h }),
        (0.1..0.9f64, 0.1..1.0f64).prop_map(|(h, k)| ModelKind::Bifbm { h, k }),
        (0.05..0.95f64).prop_map(|h| ModelKind::Subfbm { h }),
        Just(ModelKind::Swanson),
        (0.1..0.9f64).prop_map(|alpha| ModelKind::DwZ1 { alpha }),
        (0.1..0.9f64).prop_map(|alpha| ModelKind::DwZ2 { alpha }),
    ]
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

/// Gram matrix of random unit vectors: a valid correlation matrix.
fn gram(raw: &[Vec<f64>]) -> SymMatrix {
    let units: Vec<Vec<f64>> = raw
        .iter()
        .map(|v| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.iter().map(|x| x / norm).collect()
        })
        .collect();
    SymMatrix::from_fn(units.len(), |i, j| units[i].iter().zip(&units[j]).map(|(a, b)| a * b).sum())
}

fn correlation_matrix() -> impl Strategy<Value = SymMatrix> {
    (2usize..=8).prop_flat_map(|dim| {
        prop::collection::vec(prop::collection::vec(-1.0..1.0f64, dim), dim).prop_map(|raw| gram(&raw))
    })
}

fn quadruple_sum(corr: &SymMatrix, q: usize, r: usize) -> f64 {
    let len = corr.dim();
    let p = |i, j, e: usize| corr.get(i, j).powi(e as i32);
    let mut s = 0.0;
    for j in 0..len {
        for k in 0..len {
            for l in 0..len {
                for m in 0..len {
                    s += p(j, k, r) * p(l, m, r) * p(j, l, q - r) * p(k, m, q - r);
                }
            }
        }
    }
    s
}

fn time_stats() -> impl Strategy<Value = TimeStats> {
    (
        0.5..2.0f64,
        -0.5..0.5f64,
        0.01..0.2f64,
        0.5..1.5f64,
        0.01..0.2f64,
        0.0..1.0f64,
    )
        .prop_map(|(exact, dv, var_se, kurt, kurt_se, ks_p)| TimeStats {
            t: 1.0,
            floor_nt: 64,
            exact_var: exact,
            predicted_var: exact,
            mean: 0.0,
            mean_se: 0.01,
            sample_var: exact + dv,
            var_se,
            fourth_moment: 3.0 * kurt * exact * exact,
            kurtosis_ratio: kurt,
            kurtosis_se: kurt_se,
            ks_stat: 0.01,
            ks_p,
        })
}

fn cross_stats() -> impl Strategy<Value = CrossStats> {
    (-0.2..0.2f64, 0.01..0.1f64, any::<bool>()).prop_map(|(cov, se, consecutive)| CrossStats {
        first: (0.0, 0.5),
        second: (0.5, 1.0),
        consecutive,
        cov,
        se,
        exact: 0.0,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric(kind in any_model(), s in 0.01..5.0f64, t in 0.01..5.0f64) {
        let m = ModelSpec::new(kind).unwrap();
        let (a, b) = (m.kernel(s, t).unwrap(), m.kernel(t, s).unwrap());
        prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
    }

    #[test]
    fn kernel_is_self_similar(
        kind in any_model(),
        s in 0.05..3.0f64,
        t in 0.05..3.0f64,
        c in 0.1..10.0f64,
    ) {
        let m = ModelSpec::new(kind).unwrap();
        let lhs = m.kernel(c * s, c * t).unwrap();
        let rhs = c.powf(2.0 * m.beta) * m.kernel(s, t).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10), "{lhs} vs {rhs}");
    }

    #[test]
    fn increment_correlations_are_bounded(kind in any_model(), n in 2usize..40) {
        let m = ModelSpec::new(kind).unwrap();
        let ic = IncrementCovariance::new(&m, n, n).unwrap();
        for j in 0..n {
            prop_assert!((ic.corr.get(j, j) - 1.0).abs() < 1e-12);
            for k in 0..j {
                let r = ic.corr.get(j, k);
                prop_assert!(r.abs() <= 1.0 + 1e-9, "ρ[{j}][{k}] = {r}");
            }
        }
    }

    #[test]
    fn contraction_trace_matches_quadruple_sum(
        corr in correlation_matrix(),
        q in 2usize..=5,
        r_seed in 0usize..100,
        c in 0.1..3.0f64,
    ) {
        let r = 1 + r_seed % (q - 1);
        let dim = corr.dim();
        let fast = contraction_norm_corr(&corr, dim, q, r, c, dim).unwrap();
        let slow = c.powi(4) * quadruple_sum(&corr, q, r) / (dim * dim) as f64;
        prop_assert!(close(fast, slow, 1e-12), "{fast} vs {slow}");
    }

    #[test]
    fn exact_variance_is_additive_over_chaoses(
        kind in any_model(),
        c2 in -2.0..2.0f64,
        c3 in -2.0..2.0f64,
        c4 in -2.0..2.0f64,
        n in 4usize..48,
    ) {
        let m = ModelSpec::new(kind).unwrap();
        let ic = IncrementCovariance::new(&m, n, n).unwrap();
        let whole = HermiteFunction::from_coeffs("mix", vec![0.0, 0.0, c2, c3, c4]).unwrap();
        let parts: f64 = [(2, c2), (3, c3), (4, c4)]
            .iter()
            .map(|&(q, c)| {
                let mut coeffs = vec![0.0; q + 1];
                coeffs[q] = 1.0;
                let single = HermiteFunction::from_coeffs("h", coeffs).unwrap();
                c * c * exact_variance_on(&ic, &single, 1.0).unwrap()
            })
            .sum();
        let v = exact_variance_on(&ic, &whole, 1.0).unwrap();
        prop_assert!(close(v, parts, 1e-12), "{v} vs {parts}");
    }

    #[test]
    fn ks_statistic_and_p_value_are_in_range(
        values in prop::collection::vec(-10.0..10.0f64, 1..200),
        scale in 0.1..5.0f64,
    ) {
        let (d, p) = ks_test(&values, scale);
        prop_assert!(d > 0.0 && d <= 1.0, "D = {d}");
        prop_assert!((0.0..=1.0).contains(&p), "p = {p}");
    }

    #[test]
    fn kolmogorov_survival_is_non_increasing(x in 0.0..4.0f64, dx in 0.0..1.0f64) {
        prop_assert!(kolmogorov_survival(x + dx) <= kolmogorov_survival(x) + 1e-12);
    }

    #[test]
    fn verdicts_are_pure_and_monotone_in_tolerance(
        times in prop::collection::vec(time_stats(), 1..5),
        cross in prop::collection::vec(cross_stats(), 0..5),
        widen in 1.0..3.0f64,
    ) {
        let tol = Tolerances::default();
        let v = Verdicts::derive(&times, &cross, &tol);
        prop_assert_eq!(&v, &Verdicts::derive(&times, &cross, &tol));
        let loose = Tolerances {
            variance_se: tol.variance_se * widen,
            kurtosis_se: tol.kurtosis_se * widen,
            ks_p: tol.ks_p / widen,
            cross_se: tol.cross_se * widen,
        };
        if v.passed {
            prop_assert!(Verdicts::derive(&times, &cross, &loose).passed);
        }
        prop_assert_eq!(v.cross.len(), cross.iter().filter(|c| c.consecutive).count());
    }

    #[test]
    fn floor_nt_inverts_grid_points(n in 1usize..100_000, k_frac in 0.0..=1.0f64) {
        let k = (k_frac * n as f64).round() as usize;
        prop_assert_eq!(floor_nt(n, k as f64 / n as f64), k);
    }

    #[test]
    fn even_power_variance_dominates_its_second_chaos(kind in any_model(), n in 4usize..32) {
        let m = ModelSpec::new(kind).unwrap();
        let ic = IncrementCovariance::new(&m, n, n).unwrap();
        let f = FunctionSpec::EvenPower { p: 2 }.build().unwrap();
        let h2 = FunctionSpec::Hermite { q: 2 }.build().unwrap();
        let whole = exact_variance_on(&ic, &f, 1.0).unwrap();
        let second = 36.0 * exact_variance_on(&ic, &h2, 1.0).unwrap();
        prop_assert!(whole >= second * (1.0 - 1e-12));
    }
}
