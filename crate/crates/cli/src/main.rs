//! Command-line front end: solving single instances, evaluating the
//! convergence-constant formulas, brute-force RIC computation, and the
//! sweep / phase-transition / selection-map experiments.
//!
//! Every parameter can come from a flat `key = value` config file
//! (`--config`), with command-line flags taking precedence. File-writing
//! commands emit a manifest (resolved-config digest, tool version,
//! timestamp, output paths) next to their outputs.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use hbthresh::experiments::{
    delta_grid_paper, ptc_estimate, run_sweep, selection_map, trials_to_csv, ConfiguredSolver,
    SweepSpec, TrialSolver,
};
use hbthresh::instances::{gaussian_instance, InstanceDocument, ProblemInstance, Regime};
use hbthresh::linalg::DenseMatrix;
use hbthresh::solvers::{check_success, run_solver_from_zero, Algorithm, SolverConfig};
use hbthresh::theory::{
    brute_force_ric, eta_constant, hbht_bounds, hbht_bounds_2k, hbht_delta2k_threshold,
    hbht_delta3k_threshold, hbhtp_bounds, hbhtp_bounds_2k, hbhtp_delta2k_threshold,
    hbhtp_delta3k_threshold,
};

#[derive(Parser)]
#[command(
    name = "hbthresh",
    version,
    about = "Heavy-ball hard-thresholding solvers, their convergence constants, and a phase-transition experiment harness"
)]
struct Cli {
    /// Flat key=value configuration file; flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with one algorithm; prints the trace as JSON.
    Solve(SolveArgs),
    /// Success-rate sweep over sparsity levels; writes CSV + JSON summary.
    Sweep(SweepArgs),
    /// Phase-transition estimate (bisection + L1 logistic fit).
    Ptc(PtcArgs),
    /// Algorithm selection map over a (delta, rho) grid.
    Map(MapArgs),
    /// Brute-force restricted isometry constant of a matrix.
    Ric(RicArgs),
    /// Convergence/stability constants for given (alpha, beta, delta).
    Bounds(BoundsArgs),
    /// Generate a seeded problem instance as JSON.
    Gen(GenArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON produced by `gen`; alternative to --m/--n/--k/--seed.
    #[arg(long, value_name = "PATH")]
    instance: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated sparsity levels, e.g. "10,20,30".
    #[arg(long)]
    k_values: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    noise: Option<f64>,
    /// Comma-separated algorithm list; per-regime parameter presets.
    #[arg(long)]
    algos: Option<String>,
    /// Stepsize override; only valid with a single algorithm.
    #[arg(long)]
    alpha: Option<f64>,
    /// Momentum override; only valid with a single algorithm.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Output prefix; writes `<prefix>.csv`, `<prefix>.json`, `<prefix>.manifest.json`.
    #[arg(long, value_name = "PREFIX")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PtcArgs {
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Undersampling ratio; m = ceil(delta * n) unless --m is given.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated undersampling ratios; defaults to the 25-value grid.
    #[arg(long)]
    deltas: Option<String>,
    /// Comma-separated rho values; defaults to j/50 for j = 1..50.
    #[arg(long)]
    rhos: Option<String>,
    #[arg(long)]
    algos: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Concurrent timed trials; keep at 1 for trustworthy wall clocks.
    #[arg(long)]
    timing_jobs: Option<usize>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RicArgs {
    /// CSV matrix (one row per line); alternative to --m/--n/--seed.
    #[arg(long, value_name = "PATH")]
    matrix: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    order: Option<usize>,
    /// Support-enumeration cap; beyond it the constant is sampled.
    #[arg(long)]
    max_enum: Option<usize>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    delta3k: Option<f64>,
    #[arg(long)]
    delta2k: Option<f64>,
    #[arg(long)]
    deltak: Option<f64>,
    /// Starting error norm ||x_S - x^0||_2.
    #[arg(long)]
    e0: Option<f64>,
    /// Starting error norm ||x_S - x^1||_2.
    #[arg(long)]
    e1: Option<f64>,
    /// Smallest nonzero signal magnitude, enables the p* iteration count.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Emit only dimensions and seed; the instance re-derives from them.
    #[arg(long)]
    no_arrays: bool,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<hbthresh::Error> for CliError {
    fn from(e: hbthresh::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Merges config-file entries with command-line flags (flags win) and
/// records every resolved value for the manifest digest.
struct Resolver {
    file: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Resolver {
    fn new(config: Option<&Path>) -> CliResult<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(CliError::Usage(format!(
                        "config line {} is not `key = value`: {line}",
                        lineno + 1
                    )));
                };
                file.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self { file, resolved: RefCell::new(BTreeMap::new()) })
    }

    fn record(&self, key: &str, value: impl Display) {
        self.resolved.borrow_mut().insert(key.to_string(), value.to_string());
    }

    fn get<T>(&self, key: &str, flag: Option<T>, default: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(raw.parse::<T>().map_err(|e| {
                    CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`: {e}"))
                })?),
                None => default,
            },
        };
        if let Some(ref v) = value {
            self.record(key, v);
        }
        Ok(value)
    }

    fn need<T>(&self, key: &str, flag: Option<T>) -> CliResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.get(key, flag, None)?.ok_or_else(|| {
            CliError::Usage(format!(
                "missing required parameter `{key}` (flag --{key} or config key {key})"
            ))
        })
    }

    fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (key, value) in self.resolved.borrow().iter() {
            // The destination path is not part of the computation.
            if key == "out" {
                continue;
            }
            hasher.update(key.as_bytes());
            hasher.update(b"=");
            hasher.update(value.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn available_jobs() -> usize {
    std::thread::available_parallelism().map(|c| c.get()).unwrap_or(1)
}

fn parse_regime(resolver: &Resolver, flag: Option<String>) -> CliResult<Regime> {
    let name =
        resolver.get("regime", flag, Some("normalized".to_string()))?.expect("default provided");
    Regime::parse(&name).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_algorithm(name: &str) -> CliResult<Algorithm> {
    Algorithm::parse(name).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<T>().map_err(|e| CliError::Usage(format!("bad {what} entry `{tok}`: {e}")))
        })
        .collect()
}

fn preset(algorithm: Algorithm, regime: Regime, k: usize) -> SolverConfig {
    match regime {
        Regime::Normalized => SolverConfig::normalized_preset(algorithm, k),
        Regime::Unnormalized => SolverConfig::unnormalized_preset(algorithm, k),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    std::fs::write(path, format!("{}\n", serde_json::to_string_pretty(value).unwrap()))?;
    Ok(())
}

/// Manifest emitted alongside every output file.
fn write_manifest(
    command: &str,
    resolver: &Resolver,
    outputs: &[PathBuf],
    manifest_path: &Path,
) -> CliResult<()> {
    let manifest = serde_json::json!({
        "command": command,
        "config_digest": resolver.digest(),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "created_utc": chrono::Utc::now().to_rfc3339(),
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    write_json(manifest_path, &manifest)
}

fn emit(
    value: &serde_json::Value,
    out: Option<&Path>,
    command: &str,
    resolver: &Resolver,
) -> CliResult<()> {
    match out {
        Some(path) => {
            write_json(path, value)?;
            let manifest_path = manifest_path_for(path);
            write_manifest(command, resolver, &[path.to_path_buf()], &manifest_path)
        }
        None => {
            println!("{}", serde_json::to_string_pretty(value).unwrap());
            Ok(())
        }
    }
}

fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let resolver = match Resolver::new(cli.config.as_deref()) {
        Ok(r) => r,
        Err(CliError::Usage(msg)) | Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args, &resolver),
        Command::Sweep(args) => cmd_sweep(args, &resolver),
        Command::Ptc(args) => cmd_ptc(args, &resolver),
        Command::Map(args) => cmd_map(args, &resolver),
        Command::Ric(args) => cmd_ric(args, &resolver),
        Command::Bounds(args) => cmd_bounds(args, &resolver),
        Command::Gen(args) => cmd_gen(args, &resolver),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn load_or_generate_instance(
    resolver: &Resolver,
    instance: Option<&Path>,
    m: Option<usize>,
    n: Option<usize>,
    k: Option<usize>,
    regime: Option<String>,
    noise: Option<f64>,
    seed: Option<u64>,
) -> CliResult<ProblemInstance> {
    if let Some(path) = instance {
        resolver.record("instance", path.display());
        let text = std::fs::read_to_string(path)?;
        let doc: InstanceDocument = serde_json::from_str(&text)
            .map_err(|e| CliError::Runtime(format!("cannot parse instance JSON: {e}")))?;
        return Ok(doc.into_instance()?);
    }
    let m = resolver.need("m", m)?;
    let n = resolver.need("n", n)?;
    let k = resolver.need("k", k)?;
    let regime = parse_regime(resolver, regime)?;
    let noise = resolver.get("noise", noise, Some(0.0))?.unwrap();
    let seed = resolver.get("seed", seed, Some(0))?.unwrap();
    Ok(gaussian_instance(m, n, k, regime, noise, seed)?)
}

fn cmd_solve(args: SolveArgs, resolver: &Resolver) -> CliResult<()> {
    let inst = load_or_generate_instance(
        resolver,
        args.instance.as_deref(),
        args.m,
        args.n,
        args.k,
        args.regime,
        args.noise,
        args.seed,
    )?;
    let algo = parse_algorithm(&resolver.need("algo", args.algo)?)?;
    let mut cfg = preset(algo, inst.regime, inst.sparsity);
    if let Some(alpha) = resolver.get("alpha", args.alpha, None)? {
        cfg.alpha = alpha;
    }
    if let Some(beta) = resolver.get("beta", args.beta, None)? {
        cfg.beta = beta;
    }
    cfg.max_iterations = resolver.get("max_iters", args.max_iters, Some(50))?.unwrap();
    cfg.residual_tolerance = resolver.get("tol", args.tol, Some(1e-6))?.unwrap();
    resolver.record("algo", algo.name());

    let trace = run_solver_from_zero(&inst.matrix, &inst.measurements, &cfg)?;
    let mut json = trace.to_json(&cfg);
    // The generated/loaded instance knows its ground truth; report the
    // recovery quality next to the trace.
    let truth_norm = hbthresh::linalg::norm2(&inst.true_signal);
    if truth_norm > 0.0 {
        let err = hbthresh::linalg::norm2(&hbthresh::linalg::sub(
            &trace.final_estimate,
            &inst.true_signal,
        )) / truth_norm;
        json["relative_error"] = serde_json::json!(err);
        json["success"] =
            serde_json::json!(check_success(&trace.final_estimate, &inst.true_signal)?);
    }
    emit(&json, args.out.as_deref(), "solve", resolver)
}

#[allow(clippy::too_many_arguments)]
fn solver_list(
    resolver: &Resolver,
    algos: Option<String>,
    alpha: Option<f64>,
    beta: Option<f64>,
    default_algos: &str,
    regime: Regime,
    max_iters: usize,
    tol: f64,
) -> CliResult<Vec<ConfiguredSolver>> {
    let list =
        resolver.get("algos", algos, Some(default_algos.to_string()))?.expect("default provided");
    let names: Vec<String> = parse_list(&list, "algorithm")?;
    if names.is_empty() {
        return Err(CliError::Usage("algorithm list is empty".into()));
    }
    let alpha = resolver.get("alpha", alpha, None)?;
    let beta = resolver.get("beta", beta, None)?;
    if (alpha.is_some() || beta.is_some()) && names.len() > 1 {
        return Err(CliError::Usage(
            "--alpha/--beta overrides apply to a single algorithm; give --algos one name".into(),
        ));
    }
    names
        .iter()
        .map(|name| {
            let algorithm = parse_algorithm(name)?;
            let mut cfg = preset(algorithm, regime, 1);
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            if let Some(b) = beta {
                cfg.beta = b;
            }
            cfg.max_iterations = max_iters;
            cfg.residual_tolerance = tol;
            Ok(ConfiguredSolver::new(algorithm.name(), cfg))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs, resolver: &Resolver) -> CliResult<()> {
    let m = resolver.need("m", args.m)?;
    let n = resolver.need("n", args.n)?;
    let k_values: Vec<usize> = parse_list(&resolver.need("k_values", args.k_values)?, "k")?;
    let trials = resolver.get("trials", args.trials, Some(50))?.unwrap();
    let regime = parse_regime(resolver, args.regime)?;
    let noise = resolver.get("noise", args.noise, Some(0.0))?.unwrap();
    let seed = resolver.get("seed", args.seed, Some(0))?.unwrap();
    let max_iters = resolver.get("max_iters", args.max_iters, Some(50))?.unwrap();
    let tol = resolver.get("tol", args.tol, Some(1e-6))?.unwrap();
    let jobs = resolver.get("jobs", args.jobs, Some(available_jobs()))?.unwrap();
    let algorithms = solver_list(
        resolver,
        args.algos,
        args.alpha,
        args.beta,
        "hbht,hbhtp,iht,htp",
        regime,
        max_iters,
        tol,
    )?;
    let out = args
        .out
        .or_else(|| resolver.file.get("out").map(PathBuf::from))
        .ok_or_else(|| CliError::Usage("sweep needs --out <prefix>".into()))?;
    resolver.record("out", out.display());

    let spec = SweepSpec {
        m,
        n,
        k_values,
        trials_per_k: trials,
        regime,
        noise_level: noise,
        algorithms,
        base_seed: seed,
        jobs,
    };
    let result = run_sweep(&spec)?;

    let csv_path = out.with_extension("csv");
    std::fs::write(&csv_path, trials_to_csv(&result.records))?;
    let json_path = out.with_extension("json");
    let summary = serde_json::json!({
        "m": spec.m,
        "n": spec.n,
        "regime": spec.regime.name(),
        "noise_level": spec.noise_level,
        "trials_per_k": spec.trials_per_k,
        "base_seed": spec.base_seed,
        "aggregates": result.aggregates(&spec),
    });
    write_json(&json_path, &summary)?;
    let manifest_path = out.with_extension("manifest.json");
    write_manifest("sweep", resolver, &[csv_path.clone(), json_path.clone()], &manifest_path)?;
    eprintln!(
        "sweep: wrote {}, {}, {}",
        csv_path.display(),
        json_path.display(),
        manifest_path.display()
    );
    Ok(())
}

fn cmd_ptc(args: PtcArgs, resolver: &Resolver) -> CliResult<()> {
    let n = resolver.need("n", args.n)?;
    let m = match resolver.get("m", args.m, None)? {
        Some(m) => m,
        None => {
            let delta = resolver.need("delta", args.delta)?;
            ((delta * n as f64).ceil() as usize).clamp(1, n.saturating_sub(1))
        }
    };
    let trials = resolver.get("trials", args.trials, Some(10))?.unwrap();
    let regime = parse_regime(resolver, args.regime)?;
    let noise = resolver.get("noise", args.noise, Some(0.0))?.unwrap();
    let seed = resolver.get("seed", args.seed, Some(0))?.unwrap();
    let max_iters = resolver.get("max_iters", args.max_iters, Some(50))?.unwrap();
    let tol = resolver.get("tol", args.tol, Some(1e-6))?.unwrap();
    let algo = parse_algorithm(&resolver.need("algo", args.algo)?)?;
    let mut cfg = preset(algo, regime, 1);
    if let Some(alpha) = resolver.get("alpha", args.alpha, None)? {
        cfg.alpha = alpha;
    }
    if let Some(beta) = resolver.get("beta", args.beta, None)? {
        cfg.beta = beta;
    }
    cfg.max_iterations = max_iters;
    cfg.residual_tolerance = tol;
    let solver = ConfiguredSolver::new(algo.name(), cfg);

    let fit = ptc_estimate(&solver, m, n, trials, regime, noise, seed)?;
    let json = serde_json::json!({
        "algorithm": algo.name(),
        "m": m,
        "n": n,
        "delta": m as f64 / n as f64,
        "trials": trials,
        "fit": fit,
    });
    emit(&json, args.out.as_deref(), "ptc", resolver)
}

fn cmd_map(args: MapArgs, resolver: &Resolver) -> CliResult<()> {
    let n = resolver.need("n", args.n)?;
    let trials = resolver.get("trials", args.trials, Some(10))?.unwrap();
    let regime = parse_regime(resolver, args.regime)?;
    let noise = resolver.get("noise", args.noise, Some(0.0))?.unwrap();
    let seed = resolver.get("seed", args.seed, Some(0))?.unwrap();
    let max_iters = resolver.get("max_iters", args.max_iters, Some(50))?.unwrap();
    let tol = resolver.get("tol", args.tol, Some(1e-6))?.unwrap();
    let timing_jobs = resolver.get("timing_jobs", args.timing_jobs, Some(1))?.unwrap();
    let deltas: Vec<f64> = match resolver.get("deltas", args.deltas, None)? {
        Some(text) => parse_list(&text, "delta")?,
        None => delta_grid_paper(),
    };
    let rhos: Vec<f64> = match resolver.get("rhos", args.rhos, None)? {
        Some(text) => parse_list(&text, "rho")?,
        None => (1..=50).map(|j| j as f64 / 50.0).collect(),
    };
    let algorithms = solver_list(
        resolver,
        args.algos,
        None,
        None,
        "hbht,hbhtp,iht,htp,sp,cosamp",
        regime,
        max_iters,
        tol,
    )?;
    let refs: Vec<&dyn TrialSolver> = algorithms.iter().map(|s| s as &dyn TrialSolver).collect();
    let cells = selection_map(&deltas, &rhos, &refs, n, trials, regime, noise, seed, timing_jobs)?;
    let json = serde_json::json!({
        "n": n,
        "trials": trials,
        "regime": regime.name(),
        "noise_level": noise,
        "cells": cells,
    });
    emit(&json, args.out.as_deref(), "map", resolver)
}

fn cmd_ric(args: RicArgs, resolver: &Resolver) -> CliResult<()> {
    let matrix = if let Some(path) = args.matrix.as_deref() {
        resolver.record("matrix", path.display());
        DenseMatrix::read_csv(path)?
    } else {
        let m = resolver.need("m", args.m)?;
        let n = resolver.need("n", args.n)?;
        let regime = parse_regime(resolver, args.regime)?;
        let seed = resolver.get("seed", args.seed, Some(0))?.unwrap();
        gaussian_instance(m, n, 1, regime, 0.0, seed)?.matrix
    };
    let order = resolver.need("order", args.order)?;
    let max_enum = resolver.get("max_enum", args.max_enum, Some(2_000_000))?.unwrap();
    let estimate = brute_force_ric(&matrix, order, max_enum)?;
    let json = serde_json::to_value(&estimate).unwrap();
    emit(&json, args.out.as_deref(), "ric", resolver)
}

fn cmd_bounds(args: BoundsArgs, resolver: &Resolver) -> CliResult<()> {
    let alpha = resolver.get("alpha", args.alpha, Some(1.0))?.unwrap();
    let beta = resolver.get("beta", args.beta, Some(0.0))?.unwrap();
    let delta3k = resolver.need("delta3k", args.delta3k)?;
    let delta2k = resolver.get("delta2k", args.delta2k, Some(delta3k))?.unwrap();
    let deltak = resolver.get("deltak", args.deltak, Some(delta2k))?.unwrap();
    let e0 = resolver.get("e0", args.e0, Some(1.0))?.unwrap();
    let e1 = resolver.get("e1", args.e1, Some(1.0))?.unwrap();
    let mu = resolver.get("mu", args.mu, None)?;

    let hbht = hbht_bounds(alpha, beta, delta3k, delta2k, e0, e1)?;
    let hbht_2k = hbht_bounds_2k(alpha, beta, delta2k, e0, e1)?;
    let hbhtp = hbhtp_bounds(alpha, beta, deltak, delta2k, delta3k, e0, e1, mu)?;
    let hbhtp_2k = hbhtp_bounds_2k(alpha, beta, deltak, delta2k, e0, e1)?;
    let json = serde_json::json!({
        "inputs": {
            "alpha": alpha, "beta": beta,
            "delta_k": deltak, "delta_2k": delta2k, "delta_3k": delta3k,
            "e0": e0, "e1": e1, "mu": mu,
        },
        "eta": eta_constant(),
        "thresholds": {
            "hbht_delta3k": hbht_delta3k_threshold(),
            "hbhtp_delta3k": hbhtp_delta3k_threshold(),
            "hbht_delta2k": hbht_delta2k_threshold(),
            "hbhtp_delta2k": hbhtp_delta2k_threshold(),
        },
        "hbht": hbht,
        "hbht_2k": hbht_2k,
        "hbhtp": hbhtp,
        "hbhtp_2k": hbhtp_2k,
    });
    emit(&json, args.out.as_deref(), "bounds", resolver)
}

fn cmd_gen(args: GenArgs, resolver: &Resolver) -> CliResult<()> {
    let m = resolver.need("m", args.m)?;
    let n = resolver.need("n", args.n)?;
    let k = resolver.need("k", args.k)?;
    let regime = parse_regime(resolver, args.regime)?;
    let noise = resolver.get("noise", args.noise, Some(0.0))?.unwrap();
    let seed = resolver.get("seed", args.seed, Some(0))?.unwrap();
    resolver.record("no_arrays", args.no_arrays);
    let inst = gaussian_instance(m, n, k, regime, noise, seed)?;
    let doc = InstanceDocument::from_instance(&inst, !args.no_arrays);
    let json = serde_json::to_value(&doc).unwrap();
    emit(&json, args.out.as_deref(), "gen", resolver)
}
