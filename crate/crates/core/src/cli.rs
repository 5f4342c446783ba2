//! Command-line front end. `run` parses arguments, resolves the
//! configuration (flags over config file over defaults), executes one
//! subcommand and returns the process exit code:
//! 0 all verdicts pass, 1 some verdict failed, 2 usage or domain error,
//! 3 theorem gate violated, 4 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, BoundCheckReport, ContractionReport};
use crate::error::{Error, Result};
use crate::hermite::FunctionSpec;
use crate::limitvar::{self, LimitVariance};
use crate::models::{find_model, list_models, ModelKind, ModelSpec};
use crate::montecarlo::{self, ExperimentConfig, ExperimentResult, Tolerances};
use crate::numeric::floor_nt;
use crate::sampler::sample_batch;

pub const VERSION: &str = concat!("ssgauss ", env!("CARGO_PKG_VERSION"));
pub const SEED_ENV: &str = "SSGAUSS_SEED";
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "ssgauss", version, about = "Hermite variations of self-similar Gaussian processes")]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the covariance models and their exponents.
    Models {
        #[arg(long)]
        json: bool,
    },
    /// Limit variance σ² of F_n(1); writes variance.json.
    Variance(RunArgs),
    /// Draw increment paths; writes batch.bin.
    Simulate(RunArgs),
    /// Replicated CLT experiment; writes experiment.json and summary.csv.
    Clt(RunArgs),
    /// Hypothesis and lemma audits; writes reports/check_<model>.json.
    Check(RunArgs),
    /// Contraction norms over an n ladder; writes reports/contraction_<model>.json.
    Contraction(RunArgs),
    /// Summarize the verdicts stored in the output directory.
    Report(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Model identifier (see `models`).
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long = "H")]
    pub h: Option<f64>,
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Function: hermite:q, even_power:p or odd_abs_power:p.
    #[arg(long)]
    pub f: Option<FunctionSpec>,
    /// Grid resolutions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Time grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Number of replicas.
    #[arg(long = "M")]
    pub replicas: Option<usize>,
    /// Number of increments to simulate.
    #[arg(long = "N")]
    pub increments: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Chaos order for `contraction`.
    #[arg(long)]
    pub q: Option<usize>,
    /// Contraction order for `contraction`.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub slope_tol: Option<f64>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Report covariances of all increment pairs.
    #[arg(long)]
    pub all_pairs: bool,
}

/// Everything a run depends on. Stored configs re-run to identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub f: FunctionSpec,
    pub n: Vec<usize>,
    pub t_grid: Vec<f64>,
    #[serde(rename = "M")]
    pub replicas: usize,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub increments: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub bootstrap: usize,
    pub all_pairs: bool,
    pub q: usize,
    pub r: usize,
    pub slope_tol: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Swanson,
            f: FunctionSpec::Hermite { q: 2 },
            n: vec![512],
            t_grid: vec![0.25, 0.5, 0.75, 1.0],
            replicas: montecarlo::DEFAULT_REPLICAS,
            increments: None,
            seed: None,
            tolerances: Tolerances::default(),
            bootstrap: montecarlo::DEFAULT_BOOTSTRAP,
            all_pairs: false,
            q: 2,
            r: 1,
            slope_tol: analysis::DEFAULT_SLOPE_TOL,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn experiment(&self, n: usize) -> ExperimentConfig {
        ExperimentConfig {
            model: self.model,
            f: self.f,
            n,
            t_grid: self.t_grid.clone(),
            replicas: self.replicas,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            increments: self.increments,
            tolerances: self.tolerances,
            bootstrap: self.bootstrap,
            all_pairs: self.all_pairs,
        }
    }

    fn t_max(&self) -> f64 {
        self.t_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Output file layout shared by all subcommands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub passed: bool,
    pub result: T,
}

fn model_kind(id: &str, args: &RunArgs, base: ModelKind) -> Result<ModelKind> {
    let default = if base.id() == id {
        base
    } else {
        find_model(id)
            .ok_or_else(|| {
                let ids: Vec<&str> = list_models().iter().map(|e| e.id).collect();
                Error::Usage(format!("unknown model `{id}`; expected one of {}", ids.join(", ")))
            })?
            .example
            .kind
    };
    Ok(match default {
        ModelKind::Fbm { h } => ModelKind::Fbm { h: args.h.unwrap_or(h) },
        ModelKind::Subfbm { h } => ModelKind::Subfbm { h: args.h.unwrap_or(h) },
        ModelKind::Bifbm { h, k } => ModelKind::Bifbm {
            h: args.h.unwrap_or(h),
            k: args.k.unwrap_or(k),
        },
        ModelKind::Swanson => ModelKind::Swanson,
        ModelKind::DwZ1 { alpha } => ModelKind::DwZ1 {
            alpha: args.alpha.unwrap_or(alpha),
        },
        ModelKind::DwZ2 { alpha } => ModelKind::DwZ2 {
            alpha: args.alpha.unwrap_or(alpha),
        },
    })
}

/// Flags over config file over defaults; the seed additionally falls back
/// to `SSGAUSS_SEED` before the built-in default.
pub fn resolve_config(file: Option<&Path>, out: Option<&Path>, args: &RunArgs, env_seed: Option<&str>) -> Result<RunConfig> {
    let mut cfg = match file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let id = args.model.clone().unwrap_or_else(|| cfg.model.id().to_string());
    cfg.model = model_kind(&id, args, cfg.model)?;
    if let Some(f) = args.f {
        cfg.f = f;
    }
    if let Some(n) = &args.n {
        cfg.n = n.clone();
    }
    if let Some(t) = &args.t {
        cfg.t_grid = t.clone();
    }
    if let Some(m) = args.replicas {
        cfg.replicas = m;
    }
    if let Some(n) = args.increments {
        cfg.increments = Some(n);
    }
    if let Some(q) = args.q {
        cfg.q = q;
    }
    if let Some(r) = args.r {
        cfg.r = r;
    }
    if let Some(s) = args.slope_tol {
        cfg.slope_tol = s;
    }
    if let Some(b) = args.bootstrap {
        cfg.bootstrap = b;
    }
    if args.all_pairs {
        cfg.all_pairs = true;
    }
    if let Some(dir) = out {
        cfg.out_dir = dir.to_path_buf();
    }
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    } else if cfg.seed.is_none() {
        cfg.seed = Some(match env_seed {
            Some(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("{SEED_ENV} = `{s}` is not an unsigned integer")))?,
            None => DEFAULT_SEED,
        });
    }
    if cfg.n.is_empty() {
        return Err(Error::Usage("--n needs at least one value".into()));
    }
    if cfg.t_grid.is_empty() || cfg.t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::Usage("--t needs positive, finite times".into()));
    }
    Ok(cfg)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let pool = match cli.threads {
        Some(0) => return Err(Error::Usage("--threads must be at least 1".into())),
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Usage(format!("cannot start {t} threads: {e}")))?,
        ),
        None => None,
    };
    let work = || dispatch(cli);
    match pool {
        Some(p) => p.install(work),
        None => work(),
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let args = match &cli.command {
        Command::Models { json } => return cmd_models(*json),
        Command::Variance(a)
        | Command::Simulate(a)
        | Command::Clt(a)
        | Command::Check(a)
        | Command::Contraction(a)
        | Command::Report(a) => a,
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = resolve_config(cli.config.as_deref(), cli.out.as_deref(), args, env_seed.as_deref())?;
    if cli.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(0);
    }
    match &cli.command {
        Command::Variance(_) => cmd_variance(&cfg),
        Command::Simulate(_) => cmd_simulate(&cfg),
        Command::Clt(_) => cmd_clt(&cfg),
        Command::Check(_) => cmd_check(&cfg),
        Command::Contraction(_) => cmd_contraction(&cfg),
        Command::Report(_) => cmd_report(&cfg),
        Command::Models { .. } => unreachable!(),
    }
}

fn exit_code(passed: bool) -> i32 {
    if passed {
        0
    } else {
        1
    }
}

fn write_json<T: Serialize>(path: &Path, command: &str, cfg: &RunConfig, passed: bool, result: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let env = Envelope {
        version: VERSION.to_string(),
        command: command.to_string(),
        config: cfg.clone(),
        passed,
        result,
    };
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &env)?;
    writeln!(file)?;
    Ok(())
}

/// Up to six decimals, trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn cmd_models(json: bool) -> Result<i32> {
    let catalog = list_models();
    if json {
        println!("{}", serde_json::to_string_pretty(&catalog)?);
        return Ok(0);
    }
    for e in &catalog {
        let m = &e.example;
        let nu = m.nu.map_or_else(|| "-".into(), short);
        let row = format!("{} α={} β={} ν={nu} λ={}", e.id, short(m.alpha), short(m.beta), short(m.lambda));
        println!("{row:<44} {}", m.name);
        println!("    {}: α = {}, β = {}, λ = {}, ν = {}", e.params, e.alpha, e.beta, e.lambda, e.nu);
    }
    Ok(0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactVariance {
    pub n: usize,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceOutput {
    pub model: ModelSpec,
    pub limit: LimitVariance,
    /// `E[F_n(t)²]` at `t = max t_grid` for each `n`.
    pub exact: Vec<ExactVariance>,
}

pub fn cmd_variance(cfg: &RunConfig) -> Result<i32> {
    let model = ModelSpec::new(cfg.model)?;
    let f = cfg.f.build()?;
    montecarlo::check_gate(&model, &f)?;
    let limit = limitvar::sigma_sq(&f, model.alpha, limitvar::DEFAULT_REL_TOL)?;
    let t = cfg.t_max();
    let mut exact = Vec::new();
    for &n in &cfg.n {
        exact.push(ExactVariance {
            n,
            t,
            value: montecarlo::exact_variance(&model, &f, n, t)?,
        });
    }
    println!("{} with {}: σ² = {:.12} (± {:.1e})", model.name, f.label, limit.sigma_sq, limit.tail_bound);
    for e in &exact {
        println!("  E[F_n(t)²] at n = {}, t = {}: {:.10}", e.n, e.t, e.value);
    }
    for w in &limit.warnings {
        eprintln!("warning: {w}");
    }
    let out = VarianceOutput { model, limit, exact };
    write_json(&cfg.out_dir.join("variance.json"), "variance", cfg, true, &out)?;
    Ok(0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub model: ModelSpec,
    pub n: usize,
    pub increments: usize,
    pub rows: usize,
    pub seed: u64,
    pub file: String,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<i32> {
    let model = ModelSpec::new(cfg.model)?;
    let n = cfg.n[0];
    let len = cfg.increments.unwrap_or_else(|| floor_nt(n, cfg.t_max()));
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let batch = sample_batch(&model, n, len, cfg.replicas, seed)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("batch.bin");
    batch.write_binary(std::io::BufWriter::new(fs::File::create(&path)?))?;
    println!("{} rows of {len} increments of {} at n = {n} -> {}", cfg.replicas, model.name, path.display());
    let out = SimulateOutput {
        model,
        n,
        increments: len,
        rows: cfg.replicas,
        seed,
        file: "batch.bin".into(),
    };
    write_json(&cfg.out_dir.join("simulate.json"), "simulate", cfg, true, &out)?;
    Ok(0)
}

fn print_experiment(r: &ExperimentResult) {
    println!(
        "{} with {}, n = {}, M = {}: σ² = {:.6}",
        r.model.name, r.function.label, r.config.n, r.config.replicas, r.limit.sigma_sq
    );
    for (s, v) in r.per_time.iter().zip(&r.verdicts.per_time) {
        println!(
            "  t = {:<5} exact {:.5} sample {:.5} (se {:.5}) {}  kurtosis {:.4} (se {:.4}) {}  KS p {:.4} {}",
            s.t,
            s.exact_var,
            s.sample_var,
            s.var_se,
            mark(v.variance),
            s.kurtosis_ratio,
            s.kurtosis_se,
            mark(v.kurtosis),
            s.ks_p,
            mark(v.ks)
        );
    }
    for c in &r.cross {
        let ok = c.cov.abs() <= r.config.tolerances.cross_se * c.se;
        println!(
            "  cov(G{:?}, G{:?}) = {:.5} (se {:.5}, exact {:.2e}){}",
            c.first,
            c.second,
            c.cov,
            c.se,
            c.exact,
            if c.consecutive { format!(" {}", mark(ok)) } else { String::new() }
        );
    }
    println!("  {}", if r.verdicts.passed { "PASSED" } else { "FAILED" });
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

pub fn cmd_clt(cfg: &RunConfig) -> Result<i32> {
    let model = ModelSpec::new(cfg.model)?;
    let f = cfg.f.build()?;
    montecarlo::check_gate(&model, &f)?;
    let mut results = Vec::new();
    for &n in &cfg.n {
        results.push(montecarlo::run_experiment_with(&cfg.experiment(n), &model, &f)?);
    }
    let single = results.len() == 1;
    let mut passed = true;
    for r in &results {
        print_experiment(r);
        let suffix = if single { String::new() } else { format!("_n{}", r.config.n) };
        write_json(
            &cfg.out_dir.join(format!("experiment{suffix}.json")),
            "clt",
            cfg,
            r.verdicts.passed,
            r,
        )?;
        let csv = fs::File::create(cfg.out_dir.join(format!("summary{suffix}.csv")))?;
        r.write_summary_csv(std::io::BufWriter::new(csv))?;
        passed &= r.verdicts.passed;
    }
    Ok(exit_code(passed))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutput {
    pub model: ModelSpec,
    pub reports: Vec<BoundCheckReport>,
}

pub fn cmd_check(cfg: &RunConfig) -> Result<i32> {
    let model = ModelSpec::new(cfg.model)?;
    if let Ok(f) = cfg.f.build() {
        if let Err(Error::Gate(msg)) = montecarlo::check_gate(&model, &f) {
            eprintln!("warning: {msg}; running the audits anyway");
        }
    }
    let reports = analysis::check_all(&model, cfg.slope_tol)?;
    println!("{}", model.name);
    for r in &reports {
        println!(
            "  {:<10} sup ratio {:>10.4e}  trend {:>7.3}  {}{}",
            serde_json::to_value(r.target)?.as_str().unwrap_or_default(),
            r.ratio_sup,
            r.trend_slope,
            if r.verdict { "pass" } else { "FAIL" },
            r.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default()
        );
    }
    let passed = reports.iter().all(|r| r.verdict);
    let path = cfg.out_dir.join("reports").join(format!("check_{}.json", model.kind.id()));
    write_json(&path, "check", cfg, passed, &CheckOutput { model, reports })?;
    Ok(exit_code(passed))
}

pub fn cmd_contraction(cfg: &RunConfig) -> Result<i32> {
    let model = ModelSpec::new(cfg.model)?;
    let t = cfg.t_max();
    let with_tv = limitvar::gate_holds(model.alpha, cfg.q);
    let report: ContractionReport = analysis::contraction_report(&model, cfg.q, cfg.r, &cfg.n, t, with_tv)?;
    println!("{} q = {} r = {} t = {t}", model.name, cfg.q, cfg.r);
    for (i, (n, v)) in report.n_values.iter().zip(&report.norms).enumerate() {
        let tv = report.tv_bound.as_ref().map(|b| format!("  tv bound {:.6}", b[i])).unwrap_or_default();
        println!("  n = {n:<6} norm {v:.6e}{tv}");
    }
    if !report.gate_holds {
        eprintln!(
            "warning: α = {} ≥ 2 - 1/q = {}; the norms need not vanish",
            model.alpha,
            2.0 - 1.0 / cfg.q as f64
        );
    }
    println!("  {}", if report.verdict { "non-increasing" } else { "FAIL: not non-increasing" });
    let path = cfg.out_dir.join("reports").join(format!("contraction_{}.json", model.kind.id()));
    write_json(&path, "contraction", cfg, report.verdict, &report)?;
    Ok(exit_code(report.verdict))
}

#[derive(Deserialize)]
struct Stored {
    version: String,
    command: String,
    passed: bool,
}

pub fn cmd_report(cfg: &RunConfig) -> Result<i32> {
    let mut files = Vec::new();
    for dir in [cfg.out_dir.clone(), cfg.out_dir.join("reports")] {
        if let Ok(entries) = fs::read_dir(&dir) {
            for e in entries.flatten() {
                let p = e.path();
                if p.extension().is_some_and(|x| x == "json") {
                    files.push(p);
                }
            }
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Usage(format!("no results found in {}", cfg.out_dir.display())));
    }
    let mut passed = true;
    for p in &files {
        let stored: Stored = serde_json::from_str(&fs::read_to_string(p)?)
            .map_err(|e| Error::Usage(format!("{} is not a result file: {e}", p.display())))?;
        println!(
            "{:<48} {:<12} {:<16} {}",
            p.display(),
            stored.command,
            stored.version,
            if stored.passed { "pass" } else { "FAIL" }
        );
        passed &= stored.passed;
    }
    Ok(exit_code(passed))
}
