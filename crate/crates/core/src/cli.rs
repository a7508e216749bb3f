//! `frametv` command line: `denoise`, `simulate`, `bench`, `diagnose`.
//!
//! Every command resolves a [`RunConfig`] from defaults, an optional JSON
//! file (`--config`) and flags, in that order. Exit codes: 0 success,
//! 1 usage or input error, 2 solver non-convergence.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    check_interpolation, estimate_risk_all, interpolation_corpus, jackson_check, risk_plot_svg,
    Estimator, ExperimentSpec, RISK_CSV_HEADER,
};
use crate::error::{invalid, Error, Result};
use crate::frames::{
    build_frame, local_means_sup, Frame, FrameDescriptor, WaveletFrame, DEFAULT_VANISHING_MOMENTS,
};
use crate::grid::TvFlavor;
use crate::io::{read_signal, write_signal};
use crate::noise::{estimate_sigma_mad, observe_with, NoiseSpec, Observations};
use crate::solver::{solve_frame_constrained_tv, SolverConfig};
use crate::truth::TruthSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

/// Fully resolved invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub task: Task,
}

fn default_out() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Denoise(DenoiseConfig),
    Simulate(SimulateConfig),
    Bench(ExperimentSpec),
    Diagnose(DiagnoseConfig),
}

impl Task {
    fn name(&self) -> &'static str {
        match self {
            Task::Denoise(_) => "denoise",
            Task::Simulate(_) => "simulate",
            Task::Bench(_) => "bench",
            Task::Diagnose(_) => "diagnose",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub input: Option<PathBuf>,
    pub sigma: Option<f64>,
    /// Use the MAD estimate of `σ` when `sigma` is absent.
    pub estimate_sigma: bool,
    pub kappa: f64,
    pub frame: FrameDescriptor,
    /// Information level; `None` means `N^d`.
    pub n: Option<u64>,
    pub solver: SolverConfig,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            input: None,
            sigma: None,
            estimate_sigma: false,
            kappa: std::f64::consts::SQRT_2,
            frame: FrameDescriptor::default(),
            n: None,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFormat {
    Csv,
    Pgm,
    #[default]
    Tsig,
}

impl SignalFormat {
    fn ext(self) -> &'static str {
        match self {
            SignalFormat::Csv => "csv",
            SignalFormat::Pgm => "pgm",
            SignalFormat::Tsig => "tsig",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub truth: TruthSpec,
    pub dim: usize,
    pub side: usize,
    pub sigma: f64,
    pub n: Option<u64>,
    pub kappa: f64,
    pub frame: FrameDescriptor,
    pub replicate: u64,
    pub format: SignalFormat,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            truth: TruthSpec::named("step1d"),
            dim: 1,
            side: 1024,
            sigma: 0.5,
            n: None,
            kappa: std::f64::consts::SQRT_2,
            frame: FrameDescriptor::default(),
            replicate: 0,
            format: SignalFormat::Csv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    /// Signal file; otherwise `truth` is generated on `dim`, `side`.
    pub input: Option<PathBuf>,
    pub truth: Option<TruthSpec>,
    pub dim: usize,
    pub side: usize,
    pub q: f64,
    /// Information level; `None` means `N^d`.
    pub n: Option<u64>,
    pub vanishing_moments: usize,
    pub madic_base: usize,
    /// Size of the random-cartoon corpus for the empirical interpolation constant (0 = none).
    pub corpus: usize,
    pub shapes: usize,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            input: None,
            truth: None,
            dim: 2,
            side: 64,
            q: 2.0,
            n: None,
            vanishing_moments: DEFAULT_VANISHING_MOMENTS,
            madic_base: 2,
            corpus: 0,
            shapes: 4,
        }
    }
}

fn default_bench() -> ExperimentSpec {
    let mut s = ExperimentSpec::new(
        1,
        2.0,
        TruthSpec::named("step_ramp1d"),
        0.5,
        (10..=16).map(|e| 1u64 << e).collect(),
        20,
    );
    s.solver.rel_obj_tol = 5e-2;
    s
}

#[derive(Parser, Debug)]
#[command(
    name = "frametv",
    version,
    about = "Frame-constrained TV estimation and rate diagnostics"
)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Constrained TV estimate of a noisy signal file.
    Denoise(DenoiseArgs),
    /// Truth, noisy pixels and observed coefficients for a named generator.
    Simulate(SimulateArgs),
    /// Monte Carlo risk over an `n` ladder with a rate fit and plot.
    Bench(BenchArgs),
    /// Jackson, interpolation, Parseval and local-means checks.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug, Default)]
struct FrameArgs {
    /// Daubechies wavelet with this many vanishing moments.
    #[arg(long)]
    vanishing_moments: Option<usize>,
    /// m-adic frame with this base (default kernel).
    #[arg(long, conflicts_with = "vanishing_moments")]
    madic_base: Option<usize>,
}

impl FrameArgs {
    fn apply(&self, frame: &mut FrameDescriptor, dim: usize) {
        if let Some(s) = self.vanishing_moments {
            *frame = FrameDescriptor::wavelet(s);
        }
        if let Some(m) = self.madic_base {
            *frame = FrameDescriptor::madic(m, dim);
        }
    }
}

#[derive(Args, Debug, Default)]
struct SolverArgs {
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    rel_obj_tol: Option<f64>,
    #[arg(long)]
    isotropic: bool,
}

impl SolverArgs {
    fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.rel_obj_tol {
            cfg.rel_obj_tol = v;
        }
        if self.isotropic {
            cfg.tv_flavor = TvFlavor::Isotropic;
        }
    }
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    estimate_sigma: bool,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    #[command(flatten)]
    frame: FrameArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    truth: Option<String>,
    /// Generator parameter `key=value`, repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    replicate: Option<u64>,
    /// csv, pgm or tsig.
    #[arg(long)]
    format: Option<String>,
    #[command(flatten)]
    frame: FrameArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    extra_q: Option<Vec<f64>>,
    #[arg(long)]
    truth: Option<String>,
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Comma-separated `n` values.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<u64>>,
    #[arg(long)]
    replicates: Option<usize>,
    /// frame_tv, rof_oracle, wavelet_threshold or identity.
    #[arg(long)]
    estimator: Option<String>,
    #[command(flatten)]
    frame: FrameArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    truth: Option<String>,
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    vanishing_moments: Option<usize>,
    #[arg(long)]
    madic_base: Option<usize>,
    #[arg(long)]
    corpus: Option<usize>,
    #[arg(long)]
    shapes: Option<usize>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_name<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::UnknownName(format!("{s}` is not a valid {what}; `")))
}

fn apply_truth(truth: &mut TruthSpec, name: Option<&str>, params: &[String]) -> Result<()> {
    if let Some(name) = name {
        *truth = TruthSpec::named(name);
    }
    for p in params {
        let Some((k, v)) = p.split_once('=') else {
            return invalid(format!("--param expects key=value, got `{p}`"));
        };
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("--param {k}: `{v}` is not a number")))?;
        truth.params.insert(k.trim().to_string(), v);
    }
    Ok(())
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => serde_json::from_str::<RunConfig>(&fs::read_to_string(path)?)?,
        None => RunConfig {
            seed: 0,
            threads: None,
            out: default_out(),
            task: match cli.command {
                Command::Denoise(_) => Task::Denoise(DenoiseConfig::default()),
                Command::Simulate(_) => Task::Simulate(SimulateConfig::default()),
                Command::Bench(_) => Task::Bench(default_bench()),
                Command::Diagnose(_) => Task::Diagnose(DiagnoseConfig::default()),
            },
        },
    };
    set(&mut cfg.seed, cli.seed);
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    set(&mut cfg.out, cli.out.clone());
    match (&cli.command, &mut cfg.task) {
        (Command::Denoise(a), Task::Denoise(c)) => {
            if a.input.is_some() {
                c.input = a.input.clone();
            }
            if a.sigma.is_some() {
                c.sigma = a.sigma;
            }
            c.estimate_sigma |= a.estimate_sigma;
            set(&mut c.kappa, a.kappa);
            if a.n.is_some() {
                c.n = a.n;
            }
            let dim = c
                .input
                .as_deref()
                .and_then(|p| read_signal(p).ok())
                .map_or(1, |s| s.dim());
            a.frame.apply(&mut c.frame, dim);
            a.solver.apply(&mut c.solver);
        }
        (Command::Simulate(a), Task::Simulate(c)) => {
            apply_truth(&mut c.truth, a.truth.as_deref(), &a.params)?;
            set(&mut c.dim, a.dim);
            set(&mut c.side, a.side);
            set(&mut c.sigma, a.sigma);
            if a.n.is_some() {
                c.n = a.n;
            }
            set(&mut c.kappa, a.kappa);
            set(&mut c.replicate, a.replicate);
            if let Some(f) = &a.format {
                c.format = parse_name("format", f)?;
            }
            a.frame.apply(&mut c.frame, c.dim);
        }
        (Command::Bench(a), Task::Bench(c)) => {
            apply_truth(&mut c.truth, a.truth.as_deref(), &a.params)?;
            set(&mut c.dim, a.dim);
            set(&mut c.q, a.q);
            set(&mut c.extra_q, a.extra_q.clone());
            set(&mut c.sigma, a.sigma);
            set(&mut c.kappa, a.kappa);
            set(&mut c.ladder, a.ladder.clone());
            set(&mut c.replicates, a.replicates);
            if let Some(e) = &a.estimator {
                c.estimator = parse_name::<Estimator>("estimator", e)?;
            }
            a.frame.apply(&mut c.frame, c.dim);
            a.solver.apply(&mut c.solver);
        }
        (Command::Diagnose(a), Task::Diagnose(c)) => {
            if a.input.is_some() {
                c.input = a.input.clone();
            }
            if a.truth.is_some() || !a.params.is_empty() {
                let mut t = c
                    .truth
                    .clone()
                    .unwrap_or_else(|| TruthSpec::named("random_cartoon"));
                apply_truth(&mut t, a.truth.as_deref(), &a.params)?;
                c.truth = Some(t);
            }
            set(&mut c.dim, a.dim);
            set(&mut c.side, a.side);
            set(&mut c.q, a.q);
            if a.n.is_some() {
                c.n = a.n;
            }
            set(&mut c.vanishing_moments, a.vanishing_moments);
            set(&mut c.madic_base, a.madic_base);
            set(&mut c.corpus, a.corpus);
            set(&mut c.shapes, a.shapes);
        }
        (_, task) => {
            return invalid(format!(
                "config file describes `{}`, not this subcommand",
                task.name()
            ));
        }
    }
    if let Task::Bench(spec) = &mut cfg.task {
        spec.seed = cfg.seed;
    }
    Ok(cfg)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if cli.dump_config {
        match serde_json::to_string_pretty(&cfg) {
            Ok(s) => {
                println!("{s}");
                return EXIT_OK;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        }
    }
    match execute(&cfg) {
        Ok(code) => code,
        Err(Error::NotConverged(msg)) => {
            eprintln!("not converged: {msg}");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

/// Runs a resolved configuration; returns the exit code on success.
pub fn execute(cfg: &RunConfig) -> Result<i32> {
    fs::create_dir_all(&cfg.out)?;
    let body = || match &cfg.task {
        Task::Denoise(c) => cmd_denoise(c, &cfg.out),
        Task::Simulate(c) => cmd_simulate(c, cfg.seed, &cfg.out),
        Task::Bench(c) => cmd_bench(c, &cfg.out),
        Task::Diagnose(c) => cmd_diagnose(c, cfg.seed, &cfg.out),
    };
    match cfg.threads {
        Some(0) => invalid("threads must be positive"),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(body),
        None => body(),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn cmd_denoise(c: &DenoiseConfig, out: &Path) -> Result<i32> {
    let Some(input) = &c.input else {
        return invalid("denoise needs --input PATH");
    };
    let pixels = read_signal(input)?;
    let (dim, side) = (pixels.dim(), pixels.side());
    let n = c.n.unwrap_or((side as u64).pow(dim as u32));
    let (sigma, estimated) = match (c.sigma, c.estimate_sigma) {
        (Some(s), _) => (s, false),
        (None, true) => (estimate_sigma_mad(&pixels, n)?, true),
        (None, false) => return invalid("give --sigma or pass --estimate-sigma"),
    };
    c.frame.validate(dim)?;
    let frame = build_frame(&c.frame, dim, n, side)?;
    let noise = NoiseSpec::new(sigma, n, 0);
    let obs = Observations::from_pixels(pixels, frame.clone(), noise, c.kappa)?;
    let res = solve_frame_constrained_tv(&obs, &c.solver)?;
    let ext = input
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("tsig")
        .to_ascii_lowercase();
    write_signal(&out.join(format!("estimate.{ext}")), res.estimate())?;
    let report = json!({
        "input": input,
        "dim": dim,
        "side": side,
        "n": n,
        "sigma": sigma,
        "sigma_estimated": estimated,
        "kappa": c.kappa,
        "frame": c.frame,
        "card_omega": frame.len(),
        "gamma": obs.gamma,
        "objective": res.objective,
        "max_residual": res.max_residual,
        "feas_residual": res.feas_residual,
        "dual_bound": res.dual_bound,
        "iterations": res.iterations,
        "restarts": res.restarts,
        "converged": res.converged,
        "empty_feasible_set_convention": res.empty_feasible_set_convention,
        "solver": c.solver,
    });
    write_json(&out.join("report.json"), &report)?;
    eprintln!(
        "denoise: γ = {:.4e}, TV = {:.6}, iterations = {}, converged = {}",
        obs.gamma, res.objective, res.iterations, res.converged
    );
    Ok(if res.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn cmd_simulate(c: &SimulateConfig, seed: u64, out: &Path) -> Result<i32> {
    let truth = c.truth.build(c.dim, c.side)?;
    let n = c.n.unwrap_or((c.side as u64).pow(c.dim as u32));
    let frame = build_frame(&c.frame, c.dim, n, c.side)?;
    let noise = NoiseSpec::new(c.sigma, n, seed);
    let obs = observe_with(&truth.signal, frame.clone(), &noise, c.kappa, c.replicate)?;
    let ext = c.format.ext();
    write_signal(&out.join(format!("truth.{ext}")), &truth.signal)?;
    write_signal(&out.join(format!("pixels.{ext}")), &obs.pixels)?;
    fs::write(out.join("observations.csv"), obs.coefficients.to_csv(c.dim))?;
    let meta = json!({
        "truth": c.truth,
        "sup": truth.sup,
        "bv": truth.bv,
        "declared_l": truth.declared_l,
        "noise": noise,
        "replicate": c.replicate,
        "frame": c.frame,
        "card_omega": frame.len(),
        "gamma": obs.gamma,
        "kappa": c.kappa,
        "truth_feasible": obs.is_feasible(&truth.signal)?,
    });
    write_json(&out.join("simulate.json"), &meta)?;
    Ok(EXIT_OK)
}

fn cmd_bench(spec: &ExperimentSpec, out: &Path) -> Result<i32> {
    let reports = estimate_risk_all(spec)?;
    let mut csv = format!("{RISK_CSV_HEADER}\n");
    for r in &reports {
        csv.push_str(&r.csv_rows());
    }
    fs::write(out.join("risk.csv"), csv)?;
    write_json(
        &out.join("risk.json"),
        &json!({ "config": spec, "reports": reports }),
    )?;
    fs::write(out.join("risk.svg"), risk_plot_svg(&reports))?;
    for r in &reports {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        if let Some(fit) = &r.fit {
            let f = fit.preferred();
            eprintln!(
                "q = {}: slope {:.4} ± {:.4}, target {:.4}",
                r.q, f.slope, f.stderr, r.target_exponent
            );
        }
    }
    Ok(EXIT_OK)
}

fn check(name: &str, status: &str, values: serde_json::Value) -> serde_json::Value {
    json!({ "check": name, "status": status, "values": values })
}

fn cmd_diagnose(c: &DiagnoseConfig, seed: u64, out: &Path) -> Result<i32> {
    let s = match (&c.input, &c.truth) {
        (Some(p), _) => read_signal(p)?,
        (None, Some(t)) => t.build(c.dim, c.side)?.signal,
        (None, None) => {
            TruthSpec::named("random_cartoon")
                .with("seed", seed as f64)
                .build(c.dim, c.side)?
                .signal
        }
    };
    let (dim, side) = (s.dim(), s.side());
    let n = c.n.unwrap_or((side as u64).pow(dim as u32));
    let mut checks = Vec::new();

    let jack = jackson_check(&s, c.vanishing_moments, n)?;
    checks.push(check(
        "jackson",
        if jack.holds { "pass" } else { "fail" },
        serde_json::to_value(&jack)?,
    ));

    if s.sup_norm() == 0.0 {
        checks.push(check(
            "interpolation",
            "skipped",
            json!({ "reason": "zero signal" }),
        ));
    } else {
        let rep = check_interpolation(&s, c.q, n)?;
        let ok = rep.ratio.is_finite() && rep.ratio > 0.0;
        checks.push(check(
            "interpolation",
            if ok { "pass" } else { "fail" },
            serde_json::to_value(&rep)?,
        ));
    }

    let basis = WaveletFrame::with_scales(c.vanishing_moments, dim, side, side.ilog2())?;
    let energy = s.lq_norm(2.0)?.powi(2);
    let coeff = basis.analyze(&s)?;
    let sum_sq: f64 = coeff.values().iter().map(|v| v * v).sum();
    let rel = (energy - sum_sq).abs() / energy.max(f64::MIN_POSITIVE);
    let parseval_ok = rel <= 1e-10 || energy == 0.0 && sum_sq == 0.0;
    checks.push(check(
        "parseval",
        if parseval_ok { "pass" } else { "fail" },
        json!({ "l2_squared": energy, "coefficient_sum_squares": sum_sq, "relative_error": rel }),
    ));

    let madic = FrameDescriptor::madic(c.madic_base, dim);
    let means = local_means_sup(&s, &madic, n)?;
    let means_ok = means <= 2.0 * s.sup_norm() * (1.0 + 1e-12);
    checks.push(check(
        "local_means",
        if means_ok { "pass" } else { "fail" },
        json!({ "sup_local_means": means, "sup_norm": s.sup_norm(), "base": c.madic_base }),
    ));

    let corpus = if c.corpus > 0 {
        Some(interpolation_corpus(
            dim, side, c.q, c.corpus, seed, c.shapes,
        )?)
    } else {
        None
    };
    write_json(
        &out.join("diagnose.json"),
        &json!({ "dim": dim, "side": side, "n": n, "checks": checks, "corpus": corpus }),
    )?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        std::iter::once("frametv")
            .chain(list.iter().copied())
            .map(String::from)
            .collect()
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(args(&["bogus"])), EXIT_USAGE);
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(
            run(args(&["simulate", "--truth", "nope", "--out", out])),
            EXIT_USAGE
        );
        assert_eq!(
            run(args(&[
                "denoise",
                "--input",
                "/nonexistent.csv",
                "--sigma",
                "1",
                "--out",
                out
            ])),
            EXIT_USAGE
        );
    }

    #[test]
    fn dump_config_round_trips() {
        let cli = Cli::try_parse_from(args(&[
            "bench",
            "--ladder",
            "64,128,256",
            "--replicates",
            "2",
            "--seed",
            "7",
        ]))
        .unwrap();
        let cfg = resolve(&cli).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(
            serde_json::from_str::<RunConfig>(&text.replacen("\"seed\"", "\"sede\"", 1)).is_err()
        );
    }
}
