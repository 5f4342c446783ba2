//! The functional `F_n(t) = n^{-1/2} Σ_{j < ⌊nt⌋} f(Y_{j,n})`, its exact
//! finite-`n` variance, and replicated experiments probing the Gaussian limit.

use std::io::Write;

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covgrid::IncrementCovariance;
use crate::error::{Error, Result};
use crate::hermite::{FunctionSpec, HermiteFunction};
use crate::limitvar::{self, gate_holds, LimitVariance};
use crate::matrix::SymMatrix;
use crate::models::{ModelKind, ModelSpec};
use crate::numeric::{factorial, floor_nt, KahanSum};
use crate::sampler::Sampler;

pub const MIN_REPLICAS: usize = 100;
pub const DEFAULT_REPLICAS: usize = 4000;
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// `F_n(t)` for one normalized increment row.
pub fn functional(normalized: &[f64], f: &HermiteFunction, n: usize, t: f64) -> Result<f64> {
    let len = floor_nt(n, t);
    if len > normalized.len() {
        return Err(Error::GridOverflow {
            needed: len,
            available: normalized.len(),
        });
    }
    if len == 0 {
        return Ok(0.0);
    }
    let sum: f64 = normalized[..len].iter().map(|&y| f.eval(y)).sum();
    Ok(sum / (n as f64).sqrt())
}

/// `(1/n) Σ_{j ∈ I, k ∈ J} ρ_{jk}^q` for index ranges `I = a0..a1`, `J = b0..b1`.
fn block_power_sum(corr: &SymMatrix, q: usize, a: (usize, usize), b: (usize, usize)) -> f64 {
    let rows: Vec<f64> = (a.0..a.1)
        .into_par_iter()
        .map(|j| {
            let mut acc = KahanSum::new();
            for k in b.0..b.1 {
                acc.add(corr.get(j, k).powi(q as i32));
            }
            acc.value()
        })
        .collect();
    rows.into_iter().collect::<KahanSum>().value()
}

/// `Σ_{j,k < L} ρ_{jk}^q`, using symmetry.
fn square_power_sum(corr: &SymMatrix, q: usize, len: usize) -> f64 {
    let rows: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|j| {
            let mut acc = KahanSum::new();
            acc.add(1.0);
            for &r in &corr.row(j)[..j] {
                acc.add(2.0 * r.powi(q as i32));
            }
            acc.value()
        })
        .collect();
    rows.into_iter().collect::<KahanSum>().value()
}

/// Per-chaos terms `q! c_q² (1/n) Σ_{j,k<⌊nt⌋} ρ_{jk}^q`.
pub fn exact_variance_per_chaos(
    ic: &IncrementCovariance,
    f: &HermiteFunction,
    t: f64,
) -> Result<Vec<(usize, f64)>> {
    let len = floor_nt(ic.n, t);
    if len > ic.len() {
        return Err(Error::GridOverflow {
            needed: len,
            available: ic.len(),
        });
    }
    Ok(f.terms()
        .map(|(q, c)| {
            let s = if len == 0 { 0.0 } else { square_power_sum(&ic.corr, q, len) };
            (q, factorial(q) * c * c * s / ic.n as f64)
        })
        .collect())
}

/// Exact `E[F_n(t)²]` on a prebuilt covariance grid.
pub fn exact_variance_on(ic: &IncrementCovariance, f: &HermiteFunction, t: f64) -> Result<f64> {
    Ok(exact_variance_per_chaos(ic, f, t)?
        .into_iter()
        .map(|(_, v)| v)
        .collect::<KahanSum>()
        .value())
}

/// Exact `E[F_n(t)²]`.
pub fn exact_variance(model: &ModelSpec, f: &HermiteFunction, n: usize, t: f64) -> Result<f64> {
    let len = floor_nt(n, t);
    if len == 0 {
        return Ok(0.0);
    }
    let ic = IncrementCovariance::new(model, n, len)?;
    exact_variance_on(&ic, f, t)
}

/// Exact `E[(F_n(b) - F_n(a)) (F_n(d) - F_n(c))]` for `a <= b <= c <= d`.
pub fn exact_cross_covariance(
    ic: &IncrementCovariance,
    f: &HermiteFunction,
    first: (f64, f64),
    second: (f64, f64),
) -> Result<f64> {
    let idx = |t: f64| floor_nt(ic.n, t);
    let (a, b) = (idx(first.0), idx(first.1));
    let (c, d) = (idx(second.0), idx(second.1));
    if d > ic.len() || b > ic.len() {
        return Err(Error::GridOverflow {
            needed: b.max(d),
            available: ic.len(),
        });
    }
    let mut acc = KahanSum::new();
    for (q, coeff) in f.terms() {
        let s = block_power_sum(&ic.corr, q, (a, b), (c, d));
        acc.add(factorial(q) * coeff * coeff * s / ic.n as f64);
    }
    Ok(acc.value())
}

/// Acceptance bands for the experiment verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Sample variance within this many standard errors of the exact variance.
    pub variance_se: f64,
    /// Kurtosis ratio within this many bootstrap standard errors of 1.
    pub kurtosis_se: f64,
    /// Minimum Kolmogorov-Smirnov p-value.
    pub ks_p: f64,
    /// Increment cross-covariances within this many standard errors of 0.
    pub cross_se: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            variance_se: 4.0,
            kurtosis_se: 5.0,
            ks_p: 0.001,
            cross_se: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub f: FunctionSpec,
    pub n: usize,
    pub t_grid: Vec<f64>,
    #[serde(rename = "M")]
    pub replicas: usize,
    pub seed: u64,
    /// Number of increments to simulate; defaults to `⌊n max t⌋`.
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub increments: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Also report covariances of all increment pairs, not only consecutive ones.
    #[serde(default)]
    pub all_pairs: bool,
}

fn default_bootstrap() -> usize {
    DEFAULT_BOOTSTRAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    pub t: f64,
    pub floor_nt: usize,
    pub exact_var: f64,
    /// `σ² t`.
    pub predicted_var: f64,
    pub mean: f64,
    pub mean_se: f64,
    pub sample_var: f64,
    pub var_se: f64,
    pub fourth_moment: f64,
    pub kurtosis_ratio: f64,
    pub kurtosis_se: f64,
    pub ks_stat: f64,
    pub ks_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossStats {
    /// Time intervals `(t_{i-1}, t_i]` and `(t_{j-1}, t_j]`.
    pub first: (f64, f64),
    pub second: (f64, f64),
    pub consecutive: bool,
    pub cov: f64,
    pub se: f64,
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVerdict {
    pub t: f64,
    pub variance: bool,
    pub kurtosis: bool,
    pub ks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub per_time: Vec<TimeVerdict>,
    /// One entry per consecutive pair in `cross`.
    pub cross: Vec<bool>,
    pub passed: bool,
}

impl Verdicts {
    /// Pure function of the stored statistics and tolerances.
    pub fn derive(times: &[TimeStats], cross: &[CrossStats], tol: &Tolerances) -> Self {
        let per_time: Vec<TimeVerdict> = times
            .iter()
            .map(|s| TimeVerdict {
                t: s.t,
                variance: (s.sample_var - s.exact_var).abs() <= tol.variance_se * s.var_se,
                kurtosis: (s.kurtosis_ratio - 1.0).abs() <= tol.kurtosis_se * s.kurtosis_se,
                ks: s.ks_p >= tol.ks_p,
            })
            .collect();
        let cross: Vec<bool> = cross
            .iter()
            .filter(|c| c.consecutive)
            .map(|c| c.cov.abs() <= tol.cross_se * c.se)
            .collect();
        let passed = per_time.iter().all(|v| v.variance && v.kurtosis && v.ks)
            && cross.iter().all(|&ok| ok);
        Self {
            per_time,
            cross,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub model: ModelSpec,
    pub function: HermiteFunction,
    pub limit: LimitVariance,
    pub increments: usize,
    pub cholesky_jitter: f64,
    pub per_time: Vec<TimeStats>,
    pub cross: Vec<CrossStats>,
    pub verdicts: Verdicts,
}

impl ExperimentResult {
    pub fn rederive_verdicts(&self) -> Verdicts {
        Verdicts::derive(&self.per_time, &self.cross, &self.config.tolerances)
    }

    /// One line per grid time: `t,exact_var,sample_var,se,kurtosis_ratio,ks_stat,ks_p`.
    pub fn write_summary_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "t,exact_var,sample_var,se,kurtosis_ratio,ks_stat,ks_p")?;
        for s in &self.per_time {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.t, s.exact_var, s.sample_var, s.var_se, s.kurtosis_ratio, s.ks_stat, s.ks_p
            )?;
        }
        Ok(())
    }
}

/// Theorem gate: Hermite rank at least 2 and `α < 2 - 1/d`.
pub fn check_gate(model: &ModelSpec, f: &HermiteFunction) -> Result<()> {
    let d = f.rank;
    if d < 2 {
        return Err(Error::Gate(format!(
            "{} has Hermite rank {d}; the central limit theorem needs rank d >= 2",
            f.label
        )));
    }
    if !gate_holds(model.alpha, d) {
        return Err(Error::Gate(format!(
            "{} has α = {} and {} has rank {d}; the theorem needs α < 2 - 1/d = {}",
            model.name,
            model.alpha,
            f.label,
            2.0 - 1.0 / d as f64
        )));
    }
    Ok(())
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let model = ModelSpec::new(config.model)?;
    let f = config.f.build()?;
    run_experiment_with(config, &model, &f)
}

/// Runs `config` with an already built model and function (the config's
/// `model` and `f` fields are echoed but not rebuilt).
pub fn run_experiment_with(
    config: &ExperimentConfig,
    model: &ModelSpec,
    f: &HermiteFunction,
) -> Result<ExperimentResult> {
    check_gate(model, f)?;
    let m = config.replicas;
    if m < MIN_REPLICAS {
        return Err(Error::UnderReplication(m));
    }
    let times = &config.t_grid;
    if times.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    let lens: Vec<usize> = times.iter().map(|&t| floor_nt(config.n, t)).collect();
    if lens[0] < 1 {
        return Err(Error::InvalidParameter(format!(
            "⌊n t⌋ = 0 at t = {}; F_n vanishes identically there",
            times[0]
        )));
    }
    let needed = *lens.last().unwrap();
    let available = config.increments.unwrap_or(needed);
    if needed > available {
        return Err(Error::GridOverflow { needed, available });
    }
    let limit = limitvar::sigma_sq(f, model.alpha, limitvar::DEFAULT_REL_TOL)?;

    let sampler = Sampler::new(model, config.n, available)?;
    let sqrt_n = (config.n as f64).sqrt();
    let samples: Vec<Vec<f64>> = (0..m as u64)
        .into_par_iter()
        .map(|r| {
            let y = sampler.draw_normalized(config.seed, r);
            let mut out = Vec::with_capacity(lens.len());
            let mut acc = 0.0;
            let mut j = 0;
            for &len in &lens {
                while j < len {
                    acc += f.eval(y[j]);
                    j += 1;
                }
                out.push(acc / sqrt_n);
            }
            out
        })
        .collect();

    let column = |i: usize| -> Vec<f64> { samples.iter().map(|row| row[i]).collect() };
    let mut per_time = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let values = column(i);
        let exact_var = exact_variance_on(&sampler.ic, f, t)?;
        per_time.push(time_stats(
            t,
            lens[i],
            &values,
            exact_var,
            limit.sigma_sq * t,
            config.bootstrap,
            config.seed,
            i as u64,
        ));
    }

    // increments G(t_i) = F(t_i) - F(t_{i-1}), t_0 = 0
    let bounds: Vec<(f64, f64)> = (0..times.len())
        .map(|i| (if i == 0 { 0.0 } else { times[i - 1] }, times[i]))
        .collect();
    let g: Vec<Vec<f64>> = (0..times.len())
        .map(|i| {
            let cur = column(i);
            if i == 0 {
                cur
            } else {
                let prev = column(i - 1);
                cur.iter().zip(&prev).map(|(a, b)| a - b).collect()
            }
        })
        .collect();
    let mut cross = Vec::new();
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            let consecutive = j == i + 1;
            if !consecutive && !config.all_pairs {
                continue;
            }
            let prods: Vec<f64> = g[i].iter().zip(&g[j]).map(|(a, b)| a * b).collect();
            let (cov, sd) = mean_sd(&prods);
            cross.push(CrossStats {
                first: bounds[i],
                second: bounds[j],
                consecutive,
                cov,
                se: sd / (m as f64).sqrt(),
                exact: exact_cross_covariance(&sampler.ic, f, bounds[i], bounds[j])?,
            });
        }
    }

    let verdicts = Verdicts::derive(&per_time, &cross, &config.tolerances);
    Ok(ExperimentResult {
        config: config.clone(),
        model: model.clone(),
        function: f.clone(),
        limit,
        increments: available,
        cholesky_jitter: sampler.factor.jitter,
        per_time,
        cross,
        verdicts,
    })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Sample variance and the moment ratio `E[F⁴] / (3 E[F²]²)` (the mean of
/// `F_n(t)` is exactly zero, so raw moments are used for the ratio).
fn moment_stats(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n;
    (var, m4, m4 / (3.0 * m2 * m2))
}

#[allow(clippy::too_many_arguments)]
fn time_stats(
    t: f64,
    len: usize,
    values: &[f64],
    exact_var: f64,
    predicted_var: f64,
    bootstrap: usize,
    seed: u64,
    index: u64,
) -> TimeStats {
    let (mean, sd) = mean_sd(values);
    let (sample_var, fourth_moment, kurtosis_ratio) = moment_stats(values);
    let (var_se, kurtosis_se) = bootstrap_se(values, bootstrap, seed, index);
    let (ks_stat, ks_p) = ks_test(values, exact_var.sqrt());
    TimeStats {
        t,
        floor_nt: len,
        exact_var,
        predicted_var,
        mean,
        mean_se: sd / (values.len() as f64).sqrt(),
        sample_var,
        var_se,
        fourth_moment,
        kurtosis_ratio,
        kurtosis_se,
        ks_stat,
        ks_p,
    }
}

/// Bootstrap standard errors of the sample variance and of the kurtosis
/// ratio. Resampling uses stream `2^63 + index` of the experiment seed, so
/// it never overlaps a replica stream.
fn bootstrap_se(values: &[f64], rounds: usize, seed: u64, index: u64) -> (f64, f64) {
    if rounds < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((1u64 << 63) + index);
    let m = values.len();
    let mut vars = Vec::with_capacity(rounds);
    let mut ratios = Vec::with_capacity(rounds);
    let mut sample = vec![0.0; m];
    for _ in 0..rounds {
        for s in sample.iter_mut() {
            let k = ((rng.next_u64() as u128 * m as u128) >> 64) as usize;
            *s = values[k];
        }
        let (v, _, r) = moment_stats(&sample);
        vars.push(v);
        ratios.push(r);
    }
    (mean_sd(&vars).1, mean_sd(&ratios).1)
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// One-sample Kolmogorov-Smirnov test of `values / scale` against N(0,1),
/// with the asymptotic Kolmogorov p-value.
pub fn ks_test(values: &[f64], scale: f64) -> (f64, f64) {
    let mut z: Vec<f64> = values.iter().map(|v| v / scale).collect();
    z.sort_by(|a, b| a.total_cmp(b));
    let m = z.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in z.iter().enumerate() {
        let cdf = standard_normal_cdf(x);
        d = d.max(cdf - i as f64 / m).max((i + 1) as f64 / m - cdf);
    }
    (d, kolmogorov_survival(m.sqrt() * d))
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // theta-function form, fast for small x
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let mut sum = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            sum += (-j * j * c).exp();
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
