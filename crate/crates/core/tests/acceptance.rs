//! Acceptance criteria. Each test prints one `ACCEPTANCE #k ...: PASS|FAIL`
//! line and then asserts it. Run with `--nocapture` to see the lines.

use std::process::Command;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use ssgauss::analysis::{
    check_h1, check_h2, check_lemma31, check_lemma32, check_lemma51, contraction_norm_corr, contraction_report,
    LemmaGrid, Lemma51Grid, DEFAULT_GRID_SIZE, DEFAULT_SLOPE_TOL, DEFAULT_X_MAX,
};
use ssgauss::cli::DEFAULT_SEED;
use ssgauss::hermite::FunctionSpec;
use ssgauss::limitvar::{sigma_q_sq, sigma_sq};
use ssgauss::matrix::SymMatrix;
use ssgauss::models::{ModelKind, ModelSpec};
use ssgauss::montecarlo::{exact_variance, run_experiment, ExperimentConfig, ExperimentResult, Tolerances};
use ssgauss::sampler::Sampler;

fn verdict(k: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE #{k} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance #{k} {name} failed: {detail}");
}

fn model(kind: ModelKind) -> ModelSpec {
    ModelSpec::new(kind).unwrap()
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let e = start.elapsed();
    (e < limit, format!("{:.2?} of {:?}", e, limit))
}

/// Models of the worked examples with α < 1.5, at their catalog parameters.
fn example_models() -> Vec<ModelKind> {
    vec![
        ModelKind::Bifbm { h: 0.6, k: 0.5 },
        ModelKind::Subfbm { h: 0.35 },
        ModelKind::Swanson,
    ]
}

const DW_Z1: ModelKind = ModelKind::DwZ1 { alpha: 0.5 };
const DW_Z2: ModelKind = ModelKind::DwZ2 { alpha: 0.5 };

// 1 -----------------------------------------------------------------------

#[test]
fn acceptance_01_alpha_one_gives_factorial() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for q in 2..=8usize {
        let fact: f64 = (1..=q).map(|i| i as f64).product();
        let v = sigma_q_sq(1.0, q, 1e-10).unwrap().value;
        worst = worst.max((v - fact).abs());
    }
    let (fast, time) = within(start, Duration::from_secs(1));
    verdict(1, "sigma_q_sq(1, q) = q!", worst == 0.0 && fast, &format!("max |diff| {worst:e}, {time}"));
}

// 2 -----------------------------------------------------------------------

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// fBm increment correlation `ρ(m) = ½(|m+1|^{2H} + |m-1|^{2H} - 2|m|^{2H})`,
/// written through `expm1`/`ln1p` so that large `m` loses only O(m ε).
fn fbm_rho(m: f64, h: f64) -> f64 {
    let p = 2.0 * h;
    if m == 0.0 {
        return 1.0;
    }
    if m < 2.0 {
        return 0.5 * ((m + 1.0).powf(p) + (m - 1.0).abs().powf(p) - 2.0 * m.powf(p));
    }
    let up = (p * (1.0 / m).ln_1p()).exp_m1();
    let down = (p * (-1.0 / m).ln_1p()).exp_m1();
    0.5 * m.powf(p) * (up + down)
}

/// `Σ_{m ∈ Z} ρ(m)^q`: direct sum below `M`, then the tail as an integral
/// (substitution `x = M e^y`, composite Gauss-Legendre) with the
/// Euler-Maclaurin end corrections.
fn fbm_rho_power_sum(h: f64, q: i32) -> f64 {
    const M: f64 = 20_000.0;
    let g = |x: f64| fbm_rho(x, h).powi(q);
    let mut head = 0.0;
    let mut comp = 0.0;
    for m in (1..M as usize).rev() {
        let y = g(m as f64) - comp;
        let t = head + y;
        comp = (t - head) - y;
        head = t;
    }
    let decay = q as f64 * (2.0 - 2.0 * h) - 1.0;
    let y_max = 80.0 / decay;
    let rule = gauss_legendre(20);
    let panels = 400;
    let width = y_max / panels as f64;
    let mut integral = 0.0;
    for p in 0..panels {
        let a = p as f64 * width;
        for &(x, w) in &rule {
            let y = a + 0.5 * width * (x + 1.0);
            let xv = M * y.exp();
            integral += 0.5 * width * w * g(xv) * xv;
        }
    }
    let d = 1e-2 * M;
    let deriv = (g(M + d) - g(M - d)) / (2.0 * d);
    let tail = integral + 0.5 * g(M) - deriv / 12.0;
    1.0 + 2.0 * (head + tail)
}

#[test]
fn acceptance_02_fbm_variance_cross_check() {
    let start = Instant::now();
    let functions: [(FunctionSpec, &[(usize, f64)]); 3] = [
        (FunctionSpec::Hermite { q: 2 }, &[(2, 1.0)]),
        (FunctionSpec::Hermite { q: 3 }, &[(3, 1.0)]),
        // x⁴ - 3 = H₄ + 6 H₂
        (FunctionSpec::EvenPower { p: 2 }, &[(2, 6.0), (4, 1.0)]),
    ];
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for h in [0.2, 0.3, 0.45] {
        for (spec, coeffs) in &functions {
            let f = spec.build().unwrap();
            let ours = sigma_sq(&f, 2.0 * h, 1e-10).unwrap().sigma_sq;
            let oracle: f64 = coeffs
                .iter()
                .map(|&(q, c)| {
                    let fact: f64 = (1..=q).map(|i| i as f64).product();
                    c * c * fact * fbm_rho_power_sum(h, q as i32)
                })
                .sum();
            let rel = (ours - oracle).abs() / oracle;
            worst = worst.max(rel);
            lines.push(format!("H={h} {spec}: {ours:.12} vs {oracle:.12}"));
        }
    }
    for l in &lines {
        println!("  {l}");
    }
    let (fast, time) = within(start, Duration::from_secs(5));
    verdict(
        2,
        "fBm limit variance against independent series",
        worst <= 1e-10 && fast,
        &format!("worst relative difference {worst:.2e}, {time}"),
    );
}

// 3 -----------------------------------------------------------------------

/// Largest accepted relative gap |E[F_n(1)²] - σ₂²| / σ₂² at n = 4096.
const GAP_THRESHOLD: f64 = 0.05;

fn exact_variance_ladder(kind: ModelKind) -> (bool, String) {
    let m = model(kind);
    let f = FunctionSpec::Hermite { q: 2 }.build().unwrap();
    let sigma = sigma_q_sq(m.alpha, 2, 1e-12).unwrap().value;
    let gaps: Vec<f64> = [256, 1024, 4096]
        .iter()
        .map(|&n| (exact_variance(&m, &f, n, 1.0).unwrap() - sigma).abs() / sigma)
        .collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let limit = GAP_THRESHOLD;
    let pass = decreasing && gaps[2] < limit;
    (
        pass,
        format!(
            "{}: σ₂² = {sigma:.6}, relative gaps {:.3e} {:.3e} {:.3e}, threshold {limit}",
            m.name, gaps[0], gaps[1], gaps[2]
        ),
    )
}

#[test]
fn acceptance_03_exact_variance_converges() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for kind in example_models() {
        let (ok, d) = exact_variance_ladder(kind);
        pass &= ok;
        details.push(d);
    }
    let (fast, time) = within(start, Duration::from_secs(120));
    verdict(3, "exact finite-n variance converges", pass && fast, &format!("{}; {time}", details.join("; ")));
}

#[test]
fn acceptance_03_exact_variance_converges_dw_z1() {
    let (ok, d) = exact_variance_ladder(DW_Z1);
    verdict(3, "exact finite-n variance converges (Durieu-Wang Z1)", ok, &d);
}

#[test]
fn acceptance_03_exact_variance_converges_dw_z2() {
    let (ok, d) = exact_variance_ladder(DW_Z2);
    verdict(3, "exact finite-n variance converges (Durieu-Wang Z2)", ok, &d);
}

// 4, 5 --------------------------------------------------------------------

fn clt_config(kind: ModelKind, f: FunctionSpec) -> ExperimentConfig {
    ExperimentConfig {
        model: kind,
        f,
        n: 512,
        t_grid: vec![0.25, 0.5, 0.75, 1.0],
        replicas: 4000,
        seed: DEFAULT_SEED,
        increments: None,
        tolerances: Tolerances::default(),
        bootstrap: 200,
        all_pairs: false,
    }
}

fn clt_runs() -> Vec<ExperimentResult> {
    let mut out = Vec::new();
    for kind in [ModelKind::Fbm { h: 0.5 }, ModelKind::Swanson] {
        for f in [
            FunctionSpec::Hermite { q: 2 },
            FunctionSpec::Hermite { q: 3 },
            FunctionSpec::EvenPower { p: 2 },
        ] {
            out.push(run_experiment(&clt_config(kind, f)).unwrap());
        }
    }
    out
}

#[test]
fn acceptance_04_monte_carlo_clt() {
    let start = Instant::now();
    let runs = clt_runs();
    let elapsed_ok = start.elapsed() < Duration::from_secs(180);
    let mut pass = true;
    for r in &runs {
        // the limit statement is for fixed t; it is checked at t = 1
        let (s, v) = (r.per_time.last().unwrap(), r.verdicts.per_time.last().unwrap());
        let ok = v.variance && v.kurtosis && v.ks;
        pass &= ok;
        println!(
            "  {} {} t=1: var {:.4} vs {:.4} ({:+.2} se), kurtosis {:.4} ({:+.2} se), KS p {:.4} {}",
            r.model.name,
            r.function.label,
            s.sample_var,
            s.exact_var,
            (s.sample_var - s.exact_var) / s.var_se,
            s.kurtosis_ratio,
            (s.kurtosis_ratio - 1.0) / s.kurtosis_se,
            s.ks_p,
            if ok { "ok" } else { "FAIL" }
        );
        for (s, v) in r.per_time.iter().zip(&r.verdicts.per_time).rev().skip(1) {
            if !(v.variance && v.kurtosis && v.ks) {
                println!(
                    "    note: t={} outside the bands (kurtosis {:.3}, KS p {:.2e}); not part of the criterion",
                    s.t, s.kurtosis_ratio, s.ks_p
                );
            }
        }
    }
    let again = run_experiment(&clt_config(ModelKind::Swanson, FunctionSpec::Hermite { q: 3 })).unwrap();
    let deterministic = again == runs[4];
    verdict(
        4,
        "Monte Carlo CLT at n = 512, M = 4000",
        pass && deterministic && elapsed_ok,
        &format!("{} runs, deterministic {deterministic}, {:.1?}", runs.len(), start.elapsed()),
    );
}

#[test]
fn acceptance_05_increment_decorrelation() {
    let runs = clt_runs();
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for r in &runs {
        for c in r.cross.iter().filter(|c| c.consecutive) {
            let z = c.cov.abs() / c.se;
            worst = worst.max(z);
            pass &= z <= 4.0;
        }
    }
    verdict(
        5,
        "consecutive increments decorrelate",
        pass,
        &format!("largest |cov| / se = {worst:.2} over {} runs", runs.len()),
    );
}

// 6 -----------------------------------------------------------------------

fn contraction_decays(kind: ModelKind) -> (bool, String) {
    let m = model(kind);
    let r = contraction_report(&m, 2, 1, &[64, 128, 256, 512], 1.0, false).unwrap();
    let pass = r.strictly_decreasing && r.norms[3] < 0.5 * r.norms[0];
    (
        pass,
        format!(
            "{}: {:.4e} {:.4e} {:.4e} {:.4e}",
            m.name, r.norms[0], r.norms[1], r.norms[2], r.norms[3]
        ),
    )
}

fn brute_force(corr: &SymMatrix, q: usize, r: usize, n: usize) -> f64 {
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
    s / (n * n) as f64
}

fn random_correlation(rng: &mut ChaCha8Rng, dim: usize) -> SymMatrix {
    let vecs: Vec<Vec<f64>> = (0..dim)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    SymMatrix::from_fn(dim, |i, j| vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum())
}

#[test]
fn acceptance_06_contraction_condition() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for kind in example_models().into_iter().chain([DW_Z1]) {
        let (ok, d) = contraction_decays(kind);
        pass &= ok;
        details.push(d);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for dim in 2..=8 {
        for _ in 0..5 {
            let corr = random_correlation(&mut rng, dim);
            for (q, r) in [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2)] {
                let fast = contraction_norm_corr(&corr, dim, q, r, 1.0, dim).unwrap();
                worst = worst.max((fast - brute_force(&corr, q, r, dim)).abs());
            }
        }
    }
    let (fast, time) = within(start, Duration::from_secs(60));
    verdict(
        6,
        "contraction norms vanish",
        pass && worst <= 1e-12 && fast,
        &format!("{}; trace vs quadruple sum {worst:.1e}; {time}", details.join("; ")),
    );
}

#[test]
fn acceptance_06_contraction_condition_dw_z2() {
    let (ok, d) = contraction_decays(DW_Z2);
    verdict(6, "contraction norms vanish (Durieu-Wang Z2)", ok, &d);
}

// 7 -----------------------------------------------------------------------

fn hypothesis_audit(kind: ModelKind) -> (bool, String) {
    let m = model(kind);
    let mut reports = check_h1(&m, DEFAULT_X_MAX, DEFAULT_GRID_SIZE, DEFAULT_SLOPE_TOL).to_vec();
    reports.extend(check_h2(&m, DEFAULT_X_MAX, DEFAULT_GRID_SIZE, DEFAULT_SLOPE_TOL).unwrap());
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.verdict)
        .map(|r| format!("{:?} (sup {:.2e}, trend {:.2})", r.target, r.ratio_sup, r.trend_slope))
        .collect();
    (
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} all pass", m.name)
        } else {
            format!("{} failing {}", m.name, failed.join(", "))
        },
    )
}

#[test]
fn acceptance_07_hypothesis_audits() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for kind in [
        ModelKind::Fbm { h: 0.3 },
        ModelKind::Fbm { h: 0.7 },
        ModelKind::Bifbm { h: 0.6, k: 0.5 },
        ModelKind::Subfbm { h: 0.35 },
        ModelKind::Subfbm { h: 0.7 },
        ModelKind::Swanson,
    ] {
        let (ok, d) = hypothesis_audit(kind);
        pass &= ok;
        details.push(d);
    }
    let grid = LemmaGrid::default();
    let mut worst: f64 = 0.0;
    for h in [0.2, 0.3, 0.5, 0.7, 0.9] {
        let m = model(ModelKind::Fbm { h });
        worst = worst.max(check_lemma31(&m, &grid, DEFAULT_SLOPE_TOL).max_abs_quantity);
        for r in check_lemma32(&m, &grid, DEFAULT_SLOPE_TOL) {
            worst = worst.max(r.max_abs_quantity);
        }
    }
    let (fast, time) = within(start, Duration::from_secs(30));
    verdict(
        7,
        "hypothesis audits",
        pass && worst <= 1e-12 && fast,
        &format!("{}; fBm |g| max {worst:.1e}; {time}", details.join("; ")),
    );
}

#[test]
fn acceptance_07_hypothesis_audits_dw_z1() {
    let (ok, d) = hypothesis_audit(DW_Z1);
    verdict(7, "hypothesis audits (Durieu-Wang Z1)", ok, &d);
}

#[test]
fn acceptance_07_hypothesis_audits_dw_z2() {
    let (ok, d) = hypothesis_audit(DW_Z2);
    verdict(7, "hypothesis audits (Durieu-Wang Z2)", ok, &d);
}

// 8 -----------------------------------------------------------------------

fn lemma_audit(kind: ModelKind) -> (bool, String) {
    let m = model(kind);
    let grid = LemmaGrid::default();
    let mut reports = vec![check_lemma31(&m, &grid, DEFAULT_SLOPE_TOL)];
    reports.extend(check_lemma32(&m, &grid, DEFAULT_SLOPE_TOL));
    reports.push(check_lemma51(&m, &Lemma51Grid::default(), DEFAULT_SLOPE_TOL).unwrap());
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.verdict)
        .map(|r| format!("{:?} (sup {:.2e}, trend {:.2})", r.target, r.ratio_sup, r.trend_slope))
        .collect();
    (
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} all pass", m.name)
        } else {
            format!("{} failing {}", m.name, failed.join(", "))
        },
    )
}

#[test]
fn acceptance_08_lemma_audits() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for kind in [
        ModelKind::Swanson,
        ModelKind::Subfbm { h: 0.35 },
        ModelKind::Subfbm { h: 0.8 },
        ModelKind::Bifbm { h: 0.6, k: 0.5 },
    ] {
        let (ok, d) = lemma_audit(kind);
        pass &= ok;
        details.push(d);
    }
    let (fast, time) = within(start, Duration::from_secs(60));
    verdict(8, "lemma residual audits", pass && fast, &format!("{}; {time}", details.join("; ")));
}

#[test]
fn acceptance_08_lemma_audits_dw_z1() {
    let (ok, d) = lemma_audit(DW_Z1);
    verdict(8, "lemma residual audits (Durieu-Wang Z1)", ok, &d);
}

#[test]
fn acceptance_08_lemma_audits_dw_z2() {
    let (ok, d) = lemma_audit(DW_Z2);
    verdict(8, "lemma residual audits (Durieu-Wang Z2)", ok, &d);
}

// 9 -----------------------------------------------------------------------

#[test]
fn acceptance_09_sampler_exactness() {
    let start = Instant::now();
    let m = model(ModelKind::Fbm { h: 0.7 });
    let (n, len, rows) = (64, 64, 2000);
    let sampler = Sampler::new(&m, n, len).unwrap();
    let batch = sampler.batch(DEFAULT_SEED, 0, rows);
    let mut worst: f64 = 0.0;
    for j in 0..len {
        for k in 0..=j {
            let mean: f64 = (0..rows).map(|i| batch.row(i)[j] * batch.row(i)[k]).sum::<f64>() / rows as f64;
            let (cjj, ckk, cjk) = (sampler.ic.cov.get(j, j), sampler.ic.cov.get(k, k), sampler.ic.cov.get(j, k));
            let sd = ((cjj * ckk + cjk * cjk) / rows as f64).sqrt();
            worst = worst.max((mean - cjk).abs() / sd);
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_ssgauss");
    let mut files = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(threads);
        let status = Command::new(bin)
            .args(["simulate", "--model", "fbm", "--H", "0.7", "--n", "64", "--N", "64", "--M", "2000"])
            .args(["--threads", threads, "--out"])
            .arg(&out)
            .env_remove("SSGAUSS_SEED")
            .output()
            .unwrap();
        assert!(status.status.success());
        files.push(std::fs::read(out.join("batch.bin")).unwrap());
    }
    let identical = files[0] == files[1];
    let (fast, time) = within(start, Duration::from_secs(60));
    verdict(
        9,
        "sampler reproduces the covariance",
        worst <= 5.0 && identical && fast,
        &format!("largest entry deviation {worst:.2} sd, threads 1 vs 8 identical {identical}, {time}"),
    );
}

// 10 ----------------------------------------------------------------------

#[test]
fn acceptance_10_gate_enforcement() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_ssgauss");
    let mut pass = true;
    let mut details = Vec::new();
    let cases: [&[&str]; 4] = [
        &["clt", "--model", "fbm", "--H", "0.8", "--f", "hermite:2"],
        &["variance", "--model", "fbm", "--H", "0.8", "--f", "hermite:2"],
        &["clt", "--model", "subfbm", "--H", "0.9", "--f", "hermite:3"],
        &["clt", "--model", "swanson", "--f", "hermite:1"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let out = dir.path().join(format!("case{i}"));
        let res = Command::new(bin).args(*args).arg("--out").arg(&out).output().unwrap();
        let code = res.status.code();
        let nothing = !out.exists();
        pass &= code == Some(3) && nothing;
        details.push(format!("{} -> exit {:?}, no output {nothing}", args.join(" "), code));
    }
    verdict(10, "theorem gate enforced", pass, &details.join("; "));
}
