//! Restarted Halpern primal-dual iteration for
//! `min TV(g)  s.t.  |⟨φ_ω, g⟩ - Y_ω| <= γ (ω ∈ Ω_n),  ‖g‖_∞ <= β`.
//!
//! The objective is the raw TV `‖Dg‖` (TV divided by `h^{d-1}`). Two
//! formulations share one iteration loop:
//!
//! * coefficient form, for wavelet frames covering the whole grid: the
//!   variable is the full coefficient vector, the tube is a box handled by the
//!   primal projection, and `K = (D Wᵀ; Wᵀ)` carries the TV and the sup-norm
//!   bound;
//! * grid form, for every other frame: the variable is the signal, the box is
//!   the primal projection and `K = (D; c·A)` carries the TV and the tube.
//!
//! Termination uses the Lagrangian dual bound of the current dual iterate,
//! so a converged run certifies its optimality gap.

use crate::error::{invalid, Result};
use crate::frames::Frame;
use crate::grid::TorusSignal;
use crate::noise::Observations;

use super::ops::{diff, diff_norm_sq, diff_t, project_dual, tv_raw};
use super::{Checkpoint, Formulation, History, SolverConfig, SolverResult};

mod coefficient;

const RESTART_SUFFICIENT: f64 = 0.2;
const RESTART_NECESSARY: f64 = 0.8;
const RESTART_ARTIFICIAL: f64 = 0.36;

struct Evaluation {
    estimate: Vec<f64>,
    objective: f64,
    max_residual: f64,
    feasible: bool,
    bound: f64,
}

trait Saddle {
    fn initial(&self) -> (Vec<f64>, Vec<f64>);
    fn knorm(&self) -> f64;
    /// One primal-dual step `(tx, ty) = T(x, y)`.
    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        x: &[f64],
        y: &[f64],
        tau: f64,
        sigma: f64,
        theta: f64,
        tx: &mut [f64],
        ty: &mut [f64],
    );
    fn evaluate(&mut self, x: &[f64], y: &[f64]) -> Evaluation;
}

struct Shared<'a> {
    obs: &'a Observations,
    cfg: &'a SolverConfig,
    dim: usize,
    side: usize,
    len: usize,
    beta: f64,
    gamma: f64,
    slack: f64,
    /// `h^{d-1}`, converting raw TV to the BV seminorm.
    weight: f64,
}

impl Shared<'_> {
    fn frame(&self) -> &dyn Frame {
        self.obs.frame.as_ref()
    }

    fn data(&self) -> &[f64] {
        self.obs.coefficients.values()
    }

    fn max_residual(&self, a: &[f64]) -> f64 {
        a.iter()
            .zip(self.data())
            .fold(0.0_f64, |m, (v, y)| m.max((v - y).abs()))
    }

    fn bv(&self, x: &[f64], dx: &mut [f64]) -> f64 {
        diff(self.dim, self.side, x, dx);
        self.weight * tv_raw(self.cfg.tv_flavor, self.dim, dx)
    }

    /// `⟨Y, y⟩ - γ‖y‖₁ > β‖Aᵀy‖₁` proves the constraint set misses the box.
    fn farkas(&self, y: &[f64]) -> bool {
        let lhs: f64 = y.iter().zip(self.data()).map(|(a, b)| a * b).sum::<f64>()
            - self.gamma * y.iter().map(|v| v.abs()).sum::<f64>();
        if !(lhs > 0.0) {
            return false;
        }
        let mut aty = vec![0.0; self.len];
        self.frame().adjoint_into(y, &mut aty);
        let rhs = self.beta * aty.iter().map(|v| v.abs()).sum::<f64>() / self.len as f64;
        lhs > rhs * (1.0 + 1e-9)
    }
}

/// Grid form for arbitrary frames.
struct GridForm<'a> {
    sh: Shared<'a>,
    m: usize,
    /// Scale `c` of the analysis block.
    c: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    kty: Vec<f64>,
    tmp: Vec<f64>,
    xbar: Vec<f64>,
    dx: Vec<f64>,
    bx: Vec<f64>,
}

impl<'a> GridForm<'a> {
    fn new(sh: Shared<'a>) -> Self {
        let frame = sh.frame();
        let m = frame.len();
        let c = diff_norm_sq(sh.dim).sqrt() * (sh.len as f64).sqrt() / frame.operator_norm();
        let lo = sh.data().iter().map(|y| c * (y - sh.gamma)).collect();
        let hi = sh.data().iter().map(|y| c * (y + sh.gamma)).collect();
        let (len, dim) = (sh.len, sh.dim);
        Self {
            sh,
            m,
            c,
            lo,
            hi,
            kty: vec![0.0; len],
            tmp: vec![0.0; len],
            xbar: vec![0.0; len],
            dx: vec![0.0; len * dim],
            bx: vec![0.0; m],
        }
    }

    /// `Kᵀy = Dᵀy₁ + c N^{-d} adjoint(y₂)` into `self.kty`.
    fn kt(&mut self, y: &[f64]) {
        let (len, dim) = (self.sh.len, self.sh.dim);
        diff_t(dim, self.sh.side, &y[..len * dim], &mut self.kty);
        self.sh.frame().adjoint_into(&y[len * dim..], &mut self.tmp);
        let s = self.c / len as f64;
        for (k, t) in self.kty.iter_mut().zip(&self.tmp) {
            *k += s * t;
        }
    }

    /// Pushes the coefficients of an orthonormal frame back into the tube.
    fn polish(&mut self, x: &mut Vec<f64>, a: &mut [f64], res: &mut f64) {
        let sh = &self.sh;
        let frame = sh.frame();
        if !frame.is_orthonormal() || *res <= sh.gamma + sh.slack {
            return;
        }
        let delta: Vec<f64> = a
            .iter()
            .zip(sh.data())
            .map(|(v, y)| v.clamp(y - sh.gamma, y + sh.gamma) - v)
            .collect();
        frame.adjoint_into(&delta, &mut self.tmp);
        let polished: Vec<f64> = x
            .iter()
            .zip(&self.tmp)
            .map(|(u, d)| (u + d).clamp(-sh.beta, sh.beta))
            .collect();
        let mut pa = vec![0.0; a.len()];
        frame.analyze_into(&polished, &mut pa);
        let pres = sh.max_residual(&pa);
        if pres < *res {
            *res = pres;
            *x = polished;
            a.copy_from_slice(&pa);
        }
    }
}

impl Saddle for GridForm<'_> {
    fn initial(&self) -> (Vec<f64>, Vec<f64>) {
        let frame = self.sh.frame();
        let mut x = vec![0.0; self.sh.len];
        if frame.is_orthonormal() {
            frame.adjoint_into(self.sh.data(), &mut x);
            x.iter_mut()
                .for_each(|v| *v = v.clamp(-self.sh.beta, self.sh.beta));
        }
        (x, vec![0.0; self.sh.len * self.sh.dim + self.m])
    }

    fn knorm(&self) -> f64 {
        (2.0 * diff_norm_sq(self.sh.dim)).sqrt()
    }

    fn step(
        &mut self,
        x: &[f64],
        y: &[f64],
        tau: f64,
        sigma: f64,
        theta: f64,
        tx: &mut [f64],
        ty: &mut [f64],
    ) {
        let (len, dim, beta) = (self.sh.len, self.sh.dim, self.sh.beta);
        self.kt(y);
        for i in 0..len {
            tx[i] = (x[i] - tau * self.kty[i]).clamp(-beta, beta);
            self.xbar[i] = tx[i] + theta * (tx[i] - x[i]);
        }
        diff(dim, self.sh.side, &self.xbar, &mut self.dx);
        let (ty1, ty2) = ty.split_at_mut(len * dim);
        for i in 0..len * dim {
            ty1[i] = y[i] + sigma * self.dx[i];
        }
        project_dual(self.sh.cfg.tv_flavor, dim, ty1, 1.0);
        self.sh.frame().analyze_into(&self.xbar, &mut self.bx);
        for i in 0..self.m {
            let v = y[len * dim + i] + sigma * self.c * self.bx[i];
            ty2[i] = v - sigma * (v / sigma).clamp(self.lo[i], self.hi[i]);
        }
    }

    fn evaluate(&mut self, x: &[f64], y: &[f64]) -> Evaluation {
        let (len, dim) = (self.sh.len, self.sh.dim);
        let mut g = x.to_vec();
        let mut a = vec![0.0; self.m];
        self.sh.frame().analyze_into(&g, &mut a);
        let mut max_residual = self.sh.max_residual(&a);
        self.polish(&mut g, &mut a, &mut max_residual);
        let objective = self.sh.bv(&g, &mut self.dx);
        let feasible = max_residual <= self.sh.gamma + self.sh.slack;

        self.kt(y);
        let y2 = &y[len * dim..];
        let box_term = self.sh.beta * self.kty.iter().map(|v| v.abs()).sum::<f64>();
        let data_term = self.c
            * y2.iter()
                .zip(self.sh.data())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        let tube_term = self.c * self.sh.gamma * y2.iter().map(|v| v.abs()).sum::<f64>();
        Evaluation {
            estimate: g,
            objective,
            max_residual,
            feasible,
            bound: self.sh.weight * (-data_term - tube_term - box_term),
        }
    }
}

struct Outcome {
    estimate: Vec<f64>,
    objective: f64,
    max_residual: f64,
    bound: f64,
    iterations: usize,
    restarts: usize,
    converged: bool,
    history: History,
    dual: Vec<f64>,
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// `z ← a (2 T(z) - z) + b z₀`.
fn halpern(z: &mut [f64], t: &[f64], anchor: &[f64], a: f64, b: f64) {
    for ((zi, ti), ai) in z.iter_mut().zip(t).zip(anchor) {
        *zi = a * (2.0 * ti - *zi) + b * ai;
    }
}

fn run(problem: &mut dyn Saddle, cfg: &SolverConfig) -> Outcome {
    let eta = cfg.step_ratio / problem.knorm();
    let theta = cfg.over_relaxation;
    let mut omega = 1.0_f64;
    let (mut x, mut y) = problem.initial();
    let (mut ax, mut ay) = (x.clone(), y.clone());
    let (mut tx, mut ty) = (x.clone(), y.clone());
    // averages of T(z) since the last restart
    let (mut sx, mut sy) = (x.clone(), y.clone());

    let mut history = History::default();
    let mut restarts = 0;
    let mut since_restart = 0usize;
    let mut r_start = f64::NAN;
    let mut r_last_check = f64::INFINITY;
    let mut best: Option<Evaluation> = None;
    let mut last: Option<Evaluation> = None;
    let mut bound = f64::NEG_INFINITY;

    for it in 0..cfg.max_iters {
        problem.step(&x, &y, eta / omega, eta * omega, theta, &mut tx, &mut ty);
        let px = dist_sq(&tx, &x).sqrt();
        let py = dist_sq(&ty, &y).sqrt();
        history.primal.push(px);
        history.dual.push(py);
        let r = (omega * px * px + py * py / omega).sqrt();
        if since_restart == 0 {
            r_start = r;
            sx.copy_from_slice(&tx);
            sy.copy_from_slice(&ty);
        } else {
            let w = 1.0 / (since_restart + 1) as f64;
            sx.iter_mut().zip(&tx).for_each(|(a, t)| *a += w * (t - *a));
            sy.iter_mut().zip(&ty).for_each(|(a, t)| *a += w * (t - *a));
        }

        if (it + 1) % cfg.check_every == 0 || it + 1 == cfg.max_iters {
            let mut ev = problem.evaluate(&tx, &ty);
            if since_restart > 0 {
                let av = problem.evaluate(&sx, &sy);
                if av.feasible && (!ev.feasible || av.objective < ev.objective) {
                    ev = Evaluation {
                        bound: ev.bound.max(av.bound),
                        ..av
                    };
                } else {
                    ev.bound = ev.bound.max(av.bound);
                }
            }
            bound = bound.max(ev.bound);
            history.checks.push(Checkpoint {
                iteration: it + 1,
                objective: ev.objective,
                // max residual for now; the threshold is subtracted by the caller
                infeasibility: ev.max_residual,
                dual_bound: bound,
            });
            if ev.feasible && ev.objective - bound <= cfg.rel_obj_tol * (1.0 + bound.max(0.0)) {
                return Outcome {
                    estimate: ev.estimate,
                    objective: ev.objective,
                    max_residual: ev.max_residual,
                    bound,
                    iterations: it + 1,
                    restarts,
                    converged: true,
                    history,
                    dual: ty,
                };
            }
            if ev.feasible && best.as_ref().is_none_or(|b| ev.objective < b.objective) {
                best = Some(ev);
            } else {
                last = Some(ev);
            }

            let restart = r <= RESTART_SUFFICIENT * r_start
                || (r <= RESTART_NECESSARY * r_start && r > r_last_check)
                || since_restart as f64 >= RESTART_ARTIFICIAL * (it + 1) as f64;
            r_last_check = r;
            if restart {
                let dxn = dist_sq(&tx, &ax).sqrt();
                let dyn_ = dist_sq(&ty, &ay).sqrt();
                if dxn > 1e-12 && dyn_ > 1e-12 {
                    omega = (0.5 * (dyn_ / dxn).ln() + 0.5 * omega.ln()).exp();
                }
                ax.copy_from_slice(&tx);
                ay.copy_from_slice(&ty);
                x.copy_from_slice(&tx);
                y.copy_from_slice(&ty);
                since_restart = 0;
                restarts += 1;
                r_last_check = f64::INFINITY;
                continue;
            }
        }

        let k = since_restart as f64;
        let (a, b) = ((k + 1.0) / (k + 2.0), 1.0 / (k + 2.0));
        halpern(&mut x, &tx, &ax, a, b);
        halpern(&mut y, &ty, &ay, a, b);
        since_restart += 1;
    }
    let ev = best
        .or(last)
        .expect("the final iteration is always checked");
    Outcome {
        estimate: ev.estimate,
        objective: ev.objective,
        max_residual: ev.max_residual,
        bound,
        iterations: cfg.max_iters,
        restarts,
        converged: false,
        history,
        dual: ty,
    }
}

/// Computes the frame-constrained TV estimate.
pub fn solve_frame_constrained_tv(obs: &Observations, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    let gamma = obs.gamma;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return invalid(format!("gamma must be nonnegative, got {gamma}"));
    }
    let beta = cfg.beta(obs.noise.n);
    if !(beta > 0.0) {
        return invalid(format!("sup-norm bound must be positive, got {beta}"));
    }
    let frame = obs.frame.as_ref();
    if obs.coefficients.frame_key() != frame.key().as_ref() {
        return invalid("observations were not computed with this frame");
    }
    let (dim, side, len) = (frame.dim(), frame.side(), frame.grid_len());
    let sh = Shared {
        obs,
        cfg,
        dim,
        side,
        len,
        beta,
        gamma,
        slack: cfg.feas_slack(gamma),
        weight: (side as f64).powi(1 - dim as i32),
    };
    let result = |x: Vec<f64>,
                  objective,
                  max_res: f64,
                  dual_bound,
                  iterations,
                  restarts,
                  converged,
                  empty,
                  history| {
        SolverResult {
            estimate: Some(TorusSignal::from_parts(dim, side, x)),
            objective,
            feas_residual: (max_res - gamma).max(0.0),
            max_residual: max_res,
            gamma,
            linf_bound: beta,
            dual_bound,
            iterations,
            restarts,
            converged,
            empty_feasible_set_convention: empty,
            history,
        }
    };

    let y_data = obs.coefficients.values();
    let zero_res = y_data.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if zero_res <= gamma {
        return Ok(result(
            vec![0.0; len],
            0.0,
            zero_res,
            0.0,
            0,
            0,
            true,
            false,
            History::default(),
        ));
    }
    let sign: Vec<f64> = y_data
        .iter()
        .map(|v| {
            if *v > 0.0 {
                1.0
            } else if *v < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    if sh.farkas(y_data) || sh.farkas(&sign) {
        return Ok(result(
            vec![0.0; len],
            0.0,
            zero_res,
            f64::INFINITY,
            0,
            0,
            false,
            true,
            History::default(),
        ));
    }

    let complete_basis = frame
        .as_wavelet()
        .filter(|w| w.is_complete() && cfg.formulation == Formulation::Auto);
    let out = match complete_basis {
        Some(basis) => {
            let scale = (len as f64).sqrt();
            let mut lo = vec![0.0; len];
            let mut hi = vec![0.0; len];
            for (&p, y) in basis.positions().iter().zip(y_data) {
                lo[p] = scale * (y - gamma);
                hi[p] = scale * (y + gamma);
            }
            let level = coefficient::Level::new(
                basis.filter_bank(),
                cfg.tv_flavor,
                dim,
                side,
                beta,
                lo,
                hi,
            );
            let mut out = coefficient::solve(level, cfg);
            let mut a = vec![0.0; frame.len()];
            frame.analyze_into(&out.estimate, &mut a);
            out.max_residual = sh.max_residual(&a);
            out.converged &= out.max_residual <= gamma + sh.slack;
            out
        }
        None => {
            let mut form = GridForm::new(sh);
            let out = run(&mut form, cfg);
            if !out.converged && form.sh.farkas(&out.dual[len * dim..]) {
                return Ok(result(
                    vec![0.0; len],
                    0.0,
                    zero_res,
                    f64::INFINITY,
                    out.iterations,
                    out.restarts,
                    false,
                    true,
                    out.history,
                ));
            }
            out
        }
    };
    let mut history = out.history;
    for c in history.checks.iter_mut() {
        c.infeasibility = (c.infeasibility - gamma).max(0.0);
    }
    Ok(result(
        out.estimate,
        out.objective,
        out.max_residual,
        out.bound,
        out.iterations,
        out.restarts,
        out.converged,
        false,
        history,
    ))
}
