//! ROF denoising `min_g ‖g - y‖₂² + λ |g|_BV` by accelerated projected
//! gradient on the dual, and the oracle-λ sweep used as a benchmark.
//!
//! Multiplying by `N^d / 2` gives `½‖g - y‖² + μ‖Dg‖` with `μ = λN/2`, whose
//! dual is `min_{p ∈ ball(μ)} ½‖y - Dᵀp‖²` with `g = y - Dᵀp`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{TorusSignal, TvFlavor};

use super::ops::{diff, diff_norm_sq, diff_t, project_dual, tv_raw};
use super::{Checkpoint, History, SolverConfig, SolverResult};

struct Rof<'a> {
    y: &'a [f64],
    dim: usize,
    side: usize,
    mu: f64,
    flavor: TvFlavor,
}

impl Rof<'_> {
    /// Scaled primal objective `½‖g - y‖² + μ‖Dg‖`.
    fn primal(&self, g: &[f64], dg: &mut [f64]) -> f64 {
        diff(self.dim, self.side, g, dg);
        let fit: f64 = g.iter().zip(self.y).map(|(a, b)| (a - b) * (a - b)).sum();
        0.5 * fit + self.mu * tv_raw(self.flavor, self.dim, dg)
    }
}

/// Solves the ROF problem for the noisy `pixels`.
///
/// The reported objective is `N^{-d} Σ (g_i - y_i)² + λ bv(g)`.
pub fn solve_rof(pixels: &TorusSignal, lambda: f64, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return invalid(format!("lambda must be positive, got {lambda}"));
    }
    let (dim, side, len) = (pixels.dim(), pixels.side(), pixels.len());
    let y = pixels.values();
    let prob = Rof {
        y,
        dim,
        side,
        mu: 0.5 * lambda * side as f64,
        flavor: cfg.tv_flavor,
    };
    let lip = diff_norm_sq(dim);
    let to_reported = 2.0 / len as f64;

    let mean = pixels.mean();
    let constant = vec![mean; len];
    let mut dg = vec![0.0; len * dim];
    let p_const = prob.primal(&constant, &mut dg);

    let mut p = vec![0.0; len * dim];
    let mut p_prev = p.clone();
    let mut q = p.clone();
    let mut g = y.to_vec();
    let mut g_prev = g.clone();
    let mut dtp = vec![0.0; len];
    let mut t = 1.0_f64;
    let mut history = History::default();
    let mut restarts = 0;
    let half_y_sq = 0.5 * y.iter().map(|v| v * v).sum::<f64>();

    let mut best = (f64::INFINITY, y.to_vec());
    let mut bound = f64::NEG_INFINITY;
    for it in 0..cfg.max_iters {
        // gradient step on the dual at the extrapolated point q
        diff_t(dim, side, &q, &mut dtp);
        for i in 0..len {
            g[i] = y[i] - dtp[i];
        }
        diff(dim, side, &g, &mut dg);
        p_prev.copy_from_slice(&p);
        for i in 0..len * dim {
            p[i] = q[i] + dg[i] / lip;
        }
        project_dual(cfg.tv_flavor, dim, &mut p, prob.mu);

        // gradient-based adaptive restart
        let momentum_ok: f64 = (0..len * dim)
            .map(|i| (q[i] - p[i]) * (p[i] - p_prev[i]))
            .sum();
        let t_next = if momentum_ok > 0.0 {
            restarts += 1;
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
        };
        let beta = if momentum_ok > 0.0 {
            0.0
        } else {
            (t - 1.0) / t_next
        };
        for i in 0..len * dim {
            q[i] = p[i] + beta * (p[i] - p_prev[i]);
        }
        t = t_next;

        diff_t(dim, side, &p, &mut dtp);
        g_prev.copy_from_slice(&g);
        for i in 0..len {
            g[i] = y[i] - dtp[i];
        }
        let step_p: f64 = p
            .iter()
            .zip(&p_prev)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let step_g: f64 = g
            .iter()
            .zip(&g_prev)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        history.primal.push(step_g);
        history.dual.push(step_p);

        let check = (it + 1) % cfg.check_every == 0 || it + 1 == cfg.max_iters;
        if !check {
            continue;
        }
        let dual = half_y_sq - 0.5 * g.iter().map(|v| v * v).sum::<f64>();
        bound = bound.max(dual);
        let primal = prob.primal(&g, &mut dg);
        if primal < best.0 {
            best = (primal, g.clone());
        }
        if p_const < best.0 {
            best = (p_const, constant.clone());
        }
        history.checks.push(Checkpoint {
            iteration: it + 1,
            objective: best.0 * to_reported,
            infeasibility: 0.0,
            dual_bound: bound * to_reported,
        });
        let gap = best.0 - bound;
        if gap <= cfg.rel_obj_tol * best.0.abs() || gap <= f64::MIN_POSITIVE {
            return Ok(rof_result(
                dim,
                side,
                best,
                bound,
                to_reported,
                it + 1,
                restarts,
                true,
                history,
            ));
        }
    }
    Ok(rof_result(
        dim,
        side,
        best,
        bound,
        to_reported,
        cfg.max_iters,
        restarts,
        false,
        history,
    ))
}

#[allow(clippy::too_many_arguments)]
fn rof_result(
    dim: usize,
    side: usize,
    best: (f64, Vec<f64>),
    bound: f64,
    scale: f64,
    iterations: usize,
    restarts: usize,
    converged: bool,
    history: History,
) -> SolverResult {
    SolverResult {
        estimate: Some(TorusSignal::from_parts(dim, side, best.1)),
        objective: best.0 * scale,
        feas_residual: 0.0,
        max_residual: 0.0,
        gamma: 0.0,
        linf_bound: f64::INFINITY,
        dual_bound: bound * scale,
        iterations,
        restarts,
        converged,
        empty_feasible_set_convention: false,
        history,
    }
}

/// Loss used to pick the oracle `λ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepLoss {
    /// `‖ĝ - f‖_{L²}`.
    #[default]
    L2,
    /// Symmetrized TV Bregman divergence.
    BregmanTv,
}

/// Symmetrized Bregman divergence of the discrete TV,
/// `⟨p_u - p_v, u - v⟩` with the subgradients `p = h^{d-1} Dᵀ sign(D·)`
/// (sign of zero taken as zero).
pub fn tv_bregman_symmetric(u: &TorusSignal, v: &TorusSignal, flavor: TvFlavor) -> Result<f64> {
    if !u.same_shape(v) {
        return Err(crate::Error::ShapeMismatch(
            "signals differ in shape".into(),
        ));
    }
    let (dim, side, len) = (u.dim(), u.side(), u.len());
    let mut du = vec![0.0; len * dim];
    let mut dv = vec![0.0; len * dim];
    diff(dim, side, u.values(), &mut du);
    diff(dim, side, v.values(), &mut dv);
    let unit = |d: &mut [f64]| match flavor {
        TvFlavor::Anisotropic => d.iter_mut().for_each(|x| {
            *x = if *x > 0.0 {
                1.0
            } else if *x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }),
        TvFlavor::Isotropic => {
            for i in 0..len {
                let n = (0..dim).map(|a| d[a * len + i].powi(2)).sum::<f64>().sqrt();
                for a in 0..dim {
                    d[a * len + i] = if n > 0.0 { d[a * len + i] / n } else { 0.0 };
                }
            }
        }
    };
    let mut su = du.clone();
    let mut sv = dv.clone();
    unit(&mut su);
    unit(&mut sv);
    let acc: f64 = (0..len * dim)
        .map(|i| (su[i] - sv[i]) * (du[i] - dv[i]))
        .sum();
    Ok((side as f64).powi(1 - dim as i32) * acc)
}

/// Result of [`oracle_lambda_sweep`].
#[derive(Clone, Debug)]
pub struct LambdaSweep {
    pub best_lambda: f64,
    pub best_index: usize,
    pub lambdas: Vec<f64>,
    pub losses: Vec<f64>,
    pub estimates: Vec<TorusSignal>,
    pub converged: Vec<bool>,
}

/// ROF over a grid of `λ`, returning the minimizer of the loss to `truth`.
/// Ties go to the smaller `λ`.
pub fn oracle_lambda_sweep(
    pixels: &TorusSignal,
    truth: &TorusSignal,
    lambdas: &[f64],
    loss: SweepLoss,
    cfg: &SolverConfig,
) -> Result<LambdaSweep> {
    if lambdas.is_empty() {
        return invalid("lambda grid is empty");
    }
    if !pixels.same_shape(truth) {
        return Err(crate::Error::ShapeMismatch(
            "pixels and truth differ in shape".into(),
        ));
    }
    let mut losses = Vec::with_capacity(lambdas.len());
    let mut estimates = Vec::with_capacity(lambdas.len());
    let mut converged = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let res = solve_rof(pixels, lambda, cfg)?;
        converged.push(res.converged);
        let est = res.into_estimate();
        losses.push(sweep_loss(&est, truth, loss, cfg.tv_flavor)?);
        estimates.push(est);
    }
    let mut best_index = 0;
    for i in 1..lambdas.len() {
        let (l, b) = (losses[i], losses[best_index]);
        if l < b || (l == b && lambdas[i] < lambdas[best_index]) {
            best_index = i;
        }
    }
    Ok(LambdaSweep {
        best_lambda: lambdas[best_index],
        best_index,
        lambdas: lambdas.to_vec(),
        losses,
        estimates,
        converged,
    })
}

/// The loss [`oracle_lambda_sweep`] minimizes.
pub fn sweep_loss(
    estimate: &TorusSignal,
    truth: &TorusSignal,
    loss: SweepLoss,
    flavor: TvFlavor,
) -> Result<f64> {
    match loss {
        SweepLoss::L2 => estimate.sub(truth)?.lq_norm(2.0),
        SweepLoss::BregmanTv => tv_bregman_symmetric(estimate, truth, flavor),
    }
}
