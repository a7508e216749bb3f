use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_rate_checked, target_exponent, CheckedFit};
use crate::error::{invalid, Error, Result};
use crate::frames::{build_frame, Frame, FrameDescriptor, FrameIndex};
use crate::grid::TorusSignal;
use crate::noise::{observe_with, NoiseSpec, Observations};
use crate::solver::{oracle_lambda_sweep, solve_frame_constrained_tv, SolverConfig, SweepLoss};
use crate::truth::TruthSpec;

/// Largest tolerated fraction of non-converged replicates at one ladder point.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.05;

/// CSV header of [`RiskReport::to_csv`].
pub const CSV_HEADER: &str = "d,q,n,estimator,mean_risk,stderr,reps,feas_freq,converged_frac";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Frame-constrained TV minimization.
    #[default]
    FrameTv,
    /// ROF with the loss-minimizing `λ` from [`ExperimentSpec::lambdas`].
    RofOracle,
    /// Hard thresholding of the observed wavelet coefficients at `γ`
    /// (scaling coefficients kept).
    WaveletThreshold,
    /// The noisy pixels.
    Identity,
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::FrameTv => "frame_tv",
            Estimator::RofOracle => "rof_oracle",
            Estimator::WaveletThreshold => "wavelet_threshold",
            Estimator::Identity => "identity",
        }
    }
}

/// A Monte Carlo ladder. Each `n` is simulated on the grid with `N^d = n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dim: usize,
    /// Risk exponent.
    pub q: f64,
    /// Further exponents evaluated on the same estimates.
    #[serde(default)]
    pub extra_q: Vec<f64>,
    pub truth: TruthSpec,
    #[serde(default)]
    pub frame: FrameDescriptor,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub sigma: f64,
    pub ladder: Vec<u64>,
    pub replicates: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub seed: u64,
    /// `λ` grid of the ROF oracle.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub sweep_loss: SweepLoss,
    #[serde(default = "default_max_side")]
    pub max_side: usize,
}

fn default_kappa() -> f64 {
    std::f64::consts::SQRT_2
}

fn default_lambdas() -> Vec<f64> {
    (0..13).map(|i| 1e-3 * 10f64.powf(i as f64 / 4.0)).collect()
}

fn default_max_side() -> usize {
    1 << 16
}

impl ExperimentSpec {
    /// Spec with defaults for everything but the model and the ladder.
    pub fn new(
        dim: usize,
        q: f64,
        truth: TruthSpec,
        sigma: f64,
        ladder: Vec<u64>,
        replicates: usize,
    ) -> Self {
        Self {
            dim,
            q,
            extra_q: Vec::new(),
            truth,
            frame: FrameDescriptor::default(),
            kappa: default_kappa(),
            sigma,
            ladder,
            replicates,
            solver: SolverConfig::default(),
            estimator: Estimator::default(),
            seed: 0,
            lambdas: default_lambdas(),
            sweep_loss: SweepLoss::default(),
            max_side: default_max_side(),
        }
    }

    /// All risk exponents, `q` first.
    pub fn exponents(&self) -> Vec<f64> {
        std::iter::once(self.q)
            .chain(self.extra_q.iter().copied())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for q in self.exponents() {
            target_exponent(self.dim, q)?;
        }
        if self.ladder.is_empty() {
            return invalid("ladder is empty");
        }
        if self.ladder.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("ladder must be strictly increasing");
        }
        if self.replicates == 0 {
            return invalid("replicates must be at least 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite())
            || !(self.kappa > 0.0 && self.kappa.is_finite())
        {
            return invalid("sigma and kappa must be positive");
        }
        self.frame.validate(self.dim)?;
        self.solver.validate()?;
        if self.estimator == Estimator::RofOracle && self.lambdas.iter().all(|l| !(*l > 0.0)) {
            return invalid("rof_oracle needs a positive lambda grid");
        }
        if self.estimator == Estimator::WaveletThreshold
            && !matches!(self.frame, FrameDescriptor::Wavelet { .. })
        {
            return invalid("wavelet_threshold needs a wavelet frame");
        }
        for &n in &self.ladder {
            let side = grid_side(self.dim, n)?;
            if side > self.max_side {
                return invalid(format!(
                    "n = {n} needs N = {side} > max_side = {}",
                    self.max_side
                ));
            }
        }
        Ok(())
    }
}

/// `N` with `N^d = n`; `n` must be a power of two with `d | log2 n`.
pub fn grid_side(dim: usize, n: u64) -> Result<usize> {
    if dim == 0 || !n.is_power_of_two() || n < 2 {
        return invalid(format!("n = {n} is not a power of two of at least 2"));
    }
    let e = n.ilog2() as usize;
    if !e.is_multiple_of(dim) {
        return invalid(format!("n = {n} is not a perfect {dim}-th power"));
    }
    Ok(1usize << (e / dim))
}

/// Monte Carlo summary at one ladder point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub d: usize,
    pub q: f64,
    pub n: u64,
    pub estimator: String,
    /// Mean of `‖ĝ - f‖_{L^q}` over converged replicates.
    pub mean_risk: f64,
    pub stderr: f64,
    /// Replicates entering the mean.
    pub reps: usize,
    /// Fraction of all replicates on which the truth is feasible.
    pub feas_freq: f64,
    pub converged_frac: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RiskReport {
    pub spec: ExperimentSpec,
    pub q: f64,
    pub target_exponent: f64,
    pub rows: Vec<RiskRow>,
    /// Present when at least 3 ladder points have a positive mean risk.
    pub fit: Option<CheckedFit>,
    pub warnings: Vec<String>,
}

impl RiskReport {
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.d,
                r.q,
                r.n,
                r.estimator,
                r.mean_risk,
                r.stderr,
                r.reps,
                r.feas_freq,
                r.converged_frac
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}", self.csv_rows())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `(n, mean_risk)` pairs of the rows that have replicates.
    pub fn ladder_points(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.reps > 0)
            .map(|r| (r.n as f64, r.mean_risk))
            .collect()
    }
}

struct Replicate {
    risks: Vec<f64>,
    feasible: bool,
    converged: bool,
}

/// Runs the ladder and reports the risk for `spec.q`.
pub fn estimate_risk(spec: &ExperimentSpec) -> Result<RiskReport> {
    Ok(estimate_risk_all(spec)?.swap_remove(0))
}

/// One report per exponent in [`ExperimentSpec::exponents`], all from the
/// same replicates. Replicate `r` at ladder index `i` uses noise stream
/// `(i << 32) | r`.
pub fn estimate_risk_all(spec: &ExperimentSpec) -> Result<Vec<RiskReport>> {
    spec.validate()?;
    let qs = spec.exponents();
    let mut outcomes: Vec<Vec<Replicate>> = Vec::with_capacity(spec.ladder.len());
    for (li, &n) in spec.ladder.iter().enumerate() {
        let side = grid_side(spec.dim, n)?;
        let truth = spec.truth.build(spec.dim, side)?.signal;
        let frame = build_frame(&spec.frame, spec.dim, n, side)?;
        let noise = NoiseSpec::new(spec.sigma, n, spec.seed);
        let reps: Vec<Result<Replicate>> = (0..spec.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let stream = ((li as u64) << 32) | r;
                let obs = observe_with(&truth, frame.clone(), &noise, spec.kappa, stream)?;
                run_replicate(spec, &obs, &truth, &qs)
            })
            .collect();
        outcomes.push(reps.into_iter().collect::<Result<_>>()?);
    }

    let mut warnings = Vec::new();
    for (n, reps) in spec.ladder.iter().zip(&outcomes) {
        let excluded = reps.iter().filter(|r| !r.converged).count();
        if excluded > 0 {
            let frac = excluded as f64 / reps.len() as f64;
            let msg = format!(
                "n = {n}: {excluded} of {} replicates did not converge and were excluded",
                reps.len()
            );
            if frac > MAX_EXCLUDED_FRACTION {
                return Err(Error::NotConverged(msg));
            }
            warnings.push(msg);
        }
    }

    let mut reports = Vec::with_capacity(qs.len());
    for (qi, &q) in qs.iter().enumerate() {
        let rows: Vec<RiskRow> = spec
            .ladder
            .iter()
            .zip(&outcomes)
            .map(|(&n, reps)| summarize(spec, q, n, qi, reps))
            .collect();
        let mut warnings = warnings.clone();
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.reps > 0 && r.mean_risk > 0.0)
            .map(|r| (r.n as f64, r.mean_risk))
            .collect();
        let fit = if points.len() >= 3 {
            Some(fit_rate_checked(&points)?)
        } else {
            warnings.push(format!(
                "q = {q}: fewer than 3 ladder points with positive risk, no slope"
            ));
            None
        };
        reports.push(RiskReport {
            spec: spec.clone(),
            q,
            target_exponent: target_exponent(spec.dim, q)?,
            rows,
            fit,
            warnings,
        });
    }
    Ok(reports)
}

fn run_replicate(
    spec: &ExperimentSpec,
    obs: &Observations,
    truth: &TorusSignal,
    qs: &[f64],
) -> Result<Replicate> {
    let feasible = obs.is_feasible(truth)?;
    let (estimate, converged) = match spec.estimator {
        Estimator::FrameTv => {
            let res = solve_frame_constrained_tv(obs, &spec.solver)?;
            let converged = res.converged;
            (res.into_estimate(), converged)
        }
        Estimator::RofOracle => {
            let lambdas: Vec<f64> = spec.lambdas.iter().copied().filter(|l| *l > 0.0).collect();
            let mut sweep =
                oracle_lambda_sweep(&obs.pixels, truth, &lambdas, spec.sweep_loss, &spec.solver)?;
            let converged = sweep.converged[sweep.best_index];
            (sweep.estimates.swap_remove(sweep.best_index), converged)
        }
        Estimator::WaveletThreshold => (hard_threshold(obs)?, true),
        Estimator::Identity => (obs.pixels.clone(), true),
    };
    let err = estimate.sub(truth)?;
    let risks = qs.iter().map(|&q| err.lq_norm(q)).collect::<Result<_>>()?;
    Ok(Replicate {
        risks,
        feasible,
        converged,
    })
}

fn hard_threshold(obs: &Observations) -> Result<TorusSignal> {
    let frame: &dyn Frame = obs.frame.as_ref();
    let kept: Vec<f64> = frame
        .indices()
        .iter()
        .zip(obs.coefficients.values())
        .map(|(idx, &y)| {
            let father = matches!(idx, FrameIndex::Wavelet { e, .. } if e.iter().all(|&t| t == 0));
            if father || y.abs() > obs.gamma {
                y
            } else {
                0.0
            }
        })
        .collect();
    frame.adjoint(&frame.coefficients(kept)?)
}

fn summarize(spec: &ExperimentSpec, q: f64, n: u64, qi: usize, reps: &[Replicate]) -> RiskRow {
    let total = reps.len() as f64;
    let risks: Vec<f64> = reps
        .iter()
        .filter(|r| r.converged)
        .map(|r| r.risks[qi])
        .collect();
    let m = risks.len();
    let mean = if m > 0 {
        risks.iter().sum::<f64>() / m as f64
    } else {
        f64::NAN
    };
    let stderr = if m > 1 {
        (risks.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0) / m as f64).sqrt()
    } else {
        0.0
    };
    RiskRow {
        d: spec.dim,
        q,
        n,
        estimator: spec.estimator.label().to_string(),
        mean_risk: mean,
        stderr,
        reps: m,
        feas_freq: reps.iter().filter(|r| r.feasible).count() as f64 / total,
        converged_frac: m as f64 / total,
    }
}
