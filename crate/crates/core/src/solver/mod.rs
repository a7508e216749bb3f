//! Convex solvers: the frame-constrained TV program and the ROF baseline.

mod constrained;
pub(crate) mod ops;
mod rof;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{TorusSignal, TvFlavor};

pub use constrained::solve_frame_constrained_tv;
pub use rof::{oracle_lambda_sweep, solve_rof, tv_bregman_symmetric, LambdaSweep, SweepLoss};

/// Iteration limits, tolerances and model options shared by both solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Feasibility slack relative to `γ`.
    pub feas_tol: f64,
    /// Absolute floor of the feasibility slack.
    pub feas_tol_floor: f64,
    /// Relative duality gap (constrained) or relative gap (ROF) at termination.
    pub rel_obj_tol: f64,
    /// Fraction of the largest stable step, in `(0, 1)`.
    pub step_ratio: f64,
    /// Sup-norm bound `β`; `None` means `log n`.
    pub linf_bound: Option<f64>,
    pub tv_flavor: TvFlavor,
    /// Extrapolation weight `θ` of the primal-dual iteration.
    pub over_relaxation: f64,
    /// Iterations between termination checks.
    pub check_every: usize,
    pub formulation: Formulation,
}

/// Variables of the constrained program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Wavelet coefficients, coarse to fine, for complete wavelet bases;
    /// grid values otherwise.
    #[default]
    Auto,
    /// Grid values for every frame.
    Grid,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            feas_tol: 1e-6,
            feas_tol_floor: 1e-12,
            rel_obj_tol: 1e-6,
            step_ratio: 0.99,
            linf_bound: None,
            tv_flavor: TvFlavor::Anisotropic,
            over_relaxation: 1.0,
            check_every: 64,
            formulation: Formulation::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.check_every == 0 {
            return invalid("max_iters and check_every must be positive");
        }
        if !(self.feas_tol > 0.0 && self.feas_tol_floor > 0.0 && self.rel_obj_tol > 0.0) {
            return invalid("tolerances must be positive");
        }
        if !(self.step_ratio > 0.0 && self.step_ratio < 1.0) {
            return invalid(format!(
                "step_ratio must lie in (0, 1), got {}",
                self.step_ratio
            ));
        }
        if !(0.0..=1.0).contains(&self.over_relaxation) {
            return invalid(format!(
                "over_relaxation must lie in [0, 1], got {}",
                self.over_relaxation
            ));
        }
        if let Some(b) = self.linf_bound {
            if !(b > 0.0 && b.is_finite()) {
                return invalid(format!("linf_bound must be positive, got {b}"));
            }
        }
        Ok(())
    }

    /// `β` for information level `n`.
    pub fn beta(&self, n: u64) -> f64 {
        self.linf_bound.unwrap_or((n as f64).ln())
    }

    /// Absolute feasibility slack for threshold `γ`.
    pub fn feas_slack(&self, gamma: f64) -> f64 {
        (self.feas_tol * gamma).max(self.feas_tol_floor)
    }
}

/// Per-iteration fixed-point residuals and periodic termination checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    /// Primal step norm `‖x_{k+1} - x_k‖` per iteration.
    pub primal: Vec<f64>,
    /// Dual step norm per iteration.
    pub dual: Vec<f64>,
    pub checks: Vec<Checkpoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub objective: f64,
    /// Primal infeasibility (constrained) or 0 (ROF).
    pub infeasibility: f64,
    /// Lower bound on the optimal value from the current dual iterate.
    pub dual_bound: f64,
}

/// Output of either solver.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverResult {
    #[serde(skip)]
    pub estimate: Option<TorusSignal>,
    /// TV of the estimate (constrained) or the full ROF objective.
    pub objective: f64,
    /// `max_ω |⟨φ_ω, ĝ⟩ - Y_ω| - γ`, clipped at 0.
    pub feas_residual: f64,
    pub max_residual: f64,
    pub gamma: f64,
    pub linf_bound: f64,
    pub dual_bound: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub empty_feasible_set_convention: bool,
    pub history: History,
}

impl SolverResult {
    /// The estimate; present on every result returned by the solvers.
    pub fn estimate(&self) -> &TorusSignal {
        self.estimate
            .as_ref()
            .expect("solver results carry an estimate")
    }

    pub fn into_estimate(self) -> TorusSignal {
        self.estimate.expect("solver results carry an estimate")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_frame, FrameDescriptor};
    use crate::noise::{observe, simulate_pixels, NoiseSpec, Observations};
    use crate::truth::TruthSpec;

    fn step(side: usize, sigma: f64, seed: u64) -> (TorusSignal, Observations) {
        let truth = TruthSpec::named("step1d").build(1, side).unwrap().signal;
        let obs = observe(
            &truth,
            &FrameDescriptor::wavelet(4),
            &NoiseSpec::new(sigma, side as u64, seed),
            2f64.sqrt(),
        )
        .unwrap();
        (truth, obs)
    }

    #[test]
    fn wide_tube_gives_zero() {
        let (_, obs) = step(64, 0.2, 0);
        let gamma = obs.coefficients.max_abs();
        let res =
            solve_frame_constrained_tv(&obs.with_gamma(gamma).unwrap(), &SolverConfig::default())
                .unwrap();
        assert!(res.converged && !res.empty_feasible_set_convention);
        assert_eq!(res.iterations, 0);
        assert!(res.estimate().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_width_tube_interpolates() {
        let (_, obs) = step(32, 0.2, 3);
        let pixels = obs.pixels.clone();
        let res =
            solve_frame_constrained_tv(&obs.with_gamma(0.0).unwrap(), &SolverConfig::default())
                .unwrap();
        let err = res.estimate().sub(&pixels).unwrap().sup_norm();
        assert!(err < 1e-9, "{err}");
        assert!((res.objective - pixels.bv_seminorm(TvFlavor::Anisotropic)).abs() < 1e-9);
    }

    #[test]
    fn constant_is_recovered() {
        let truth = TorusSignal::constant(1, 128, 0.75).unwrap();
        let obs = observe(
            &truth,
            &FrameDescriptor::wavelet(2),
            &NoiseSpec::new(1e-9, 128, 1),
            2f64.sqrt(),
        )
        .unwrap();
        let res = solve_frame_constrained_tv(&obs, &SolverConfig::default()).unwrap();
        assert!(res.converged);
        assert!(res.estimate().sub(&truth).unwrap().sup_norm() < 1e-6);
        assert!(res.objective < 1e-6);
    }

    #[test]
    fn unreachable_data_uses_zero_convention() {
        let big = TorusSignal::constant(1, 64, 50.0).unwrap();
        let frame = build_frame(&FrameDescriptor::wavelet(2), 1, 64, 64).unwrap();
        let obs =
            Observations::from_pixels(big, frame, NoiseSpec::new(0.1, 64, 0), 2f64.sqrt()).unwrap();
        let cfg = SolverConfig {
            linf_bound: Some(1.0),
            ..Default::default()
        };
        let res = solve_frame_constrained_tv(&obs, &cfg).unwrap();
        assert!(res.empty_feasible_set_convention);
        assert!(!res.converged);
        assert!(res.estimate().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn converged_results_are_feasible_and_certified() {
        for seed in 0..4 {
            let (_, obs) = step(128, 0.3, seed);
            let res = solve_frame_constrained_tv(&obs, &SolverConfig::default()).unwrap();
            assert!(res.converged);
            assert!(res.max_residual <= res.gamma * (1.0 + 1e-6));
            assert!(res.estimate().sup_norm() <= res.linf_bound);
            assert!(res.dual_bound <= res.objective + 1e-12);
            assert!(res.objective - res.dual_bound <= 1e-6 * (1.0 + res.dual_bound));
            assert!(
                (res.estimate().bv_seminorm(TvFlavor::Anisotropic) - res.objective).abs() < 1e-9
            );
        }
    }

    #[test]
    fn solves_are_deterministic() {
        let (_, obs) = step(256, 0.5, 9);
        let cfg = SolverConfig {
            rel_obj_tol: 1e-3,
            ..Default::default()
        };
        let a = solve_frame_constrained_tv(&obs, &cfg).unwrap();
        let b = solve_frame_constrained_tv(&obs, &cfg).unwrap();
        assert_eq!(a.estimate().values(), b.estimate().values());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn rof_limits() {
        let truth = TruthSpec::named("step1d").build(1, 64).unwrap().signal;
        let pixels = simulate_pixels(&truth, &NoiseSpec::new(0.3, 64, 5)).unwrap();
        let cfg = SolverConfig {
            max_iters: 200_000,
            ..Default::default()
        };
        let flat = solve_rof(&pixels, 1e12, &cfg).unwrap();
        assert!(flat
            .estimate()
            .values()
            .iter()
            .all(|v| (v - pixels.mean()).abs() < 1e-9));
        let sharp = solve_rof(&pixels, 1e-12, &cfg).unwrap();
        assert!(sharp.estimate().sub(&pixels).unwrap().sup_norm() < 1e-6);
    }

    #[test]
    fn sweep_prefers_moderate_lambda() {
        let truth = TruthSpec::named("step1d").build(1, 64).unwrap().signal;
        let pixels = simulate_pixels(&truth, &NoiseSpec::new(0.3, 64, 2)).unwrap();
        let lambdas = [1e-6, 1e-3, 1e-2, 1e-1, 1e3];
        let cfg = SolverConfig::default();
        let sweep = oracle_lambda_sweep(&pixels, &truth, &lambdas, SweepLoss::L2, &cfg).unwrap();
        assert!(sweep.best_index > 0 && sweep.best_index < lambdas.len() - 1);
        assert_eq!(sweep.losses.len(), lambdas.len());
        let bregman =
            oracle_lambda_sweep(&pixels, &truth, &lambdas, SweepLoss::BregmanTv, &cfg).unwrap();
        assert!(bregman.losses.iter().all(|l| *l >= 0.0));
    }

    #[test]
    fn bregman_is_symmetric_and_vanishes_on_equal_signs() {
        let truth = TruthSpec::named("step1d").build(1, 32).unwrap().signal;
        let doubled = truth.scaled(2.0);
        assert_eq!(
            tv_bregman_symmetric(&truth, &doubled, TvFlavor::Anisotropic).unwrap(),
            0.0
        );
        let pixels = simulate_pixels(&truth, &NoiseSpec::new(0.3, 32, 1)).unwrap();
        let a = tv_bregman_symmetric(&truth, &pixels, TvFlavor::Anisotropic).unwrap();
        let b = tv_bregman_symmetric(&pixels, &truth, TvFlavor::Anisotropic).unwrap();
        assert!(a > 0.0 && a == b);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(SolverConfig {
            step_ratio: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            rel_obj_tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            linf_bound: Some(-1.0),
            ..Default::default()
        }
        .validate()
        .is_err());
        let json = serde_json::to_string(&SolverConfig::default()).unwrap();
        assert_eq!(
            serde_json::from_str::<SolverConfig>(&json).unwrap(),
            SolverConfig::default()
        );
        assert!(serde_json::from_str::<SolverConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
