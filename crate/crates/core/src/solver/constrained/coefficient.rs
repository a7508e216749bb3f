//! Coefficient form for a complete orthonormal wavelet basis.
//!
//! The variable is the full Euclidean coefficient vector, the tube is a box
//! handled by the primal projection, and `K = (D Wᵀ; Wᵀ)` carries the TV and
//! the sup-norm bound. Primal steps are weighted per scale, and the problem is
//! solved coarse to fine: the coefficients of scales below `J - 1` are exactly
//! the full transform of the half-resolution problem, whose solution warm
//! starts the next level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frames::POWER_ITERATION_SEED;
use crate::grid::TvFlavor;
use crate::wavelet::{self as dwt, FilterBank};

use super::super::ops::{diff, diff_t, project_dual, tv_raw};
use super::super::SolverConfig;
use super::{run, Evaluation, Outcome, Saddle};

/// Side of the coarsest level.
const COARSEST: usize = 64;
const NORM_ITERS: usize = 2000;
const NORM_MARGIN: f64 = 1.05;

pub(super) struct Level<'a> {
    bank: &'a FilterBank,
    flavor: TvFlavor,
    dim: usize,
    side: usize,
    len: usize,
    beta: f64,
    /// Euclidean coefficient bounds.
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// `h^{d-1}` at this level.
    weight: f64,
    /// Primal step weights.
    tw: Vec<f64>,
    /// Step weight of the sup-norm dual block.
    sw: f64,
    knorm: f64,
    start: Option<(Vec<f64>, Vec<f64>)>,
    buf: Vec<f64>,
    dx: Vec<f64>,
}

impl<'a> Level<'a> {
    pub(super) fn new(
        bank: &'a FilterBank,
        flavor: TvFlavor,
        dim: usize,
        side: usize,
        beta: f64,
        lo: Vec<f64>,
        hi: Vec<f64>,
    ) -> Self {
        let len = lo.len();
        let mut level = Self {
            bank,
            flavor,
            dim,
            side,
            len,
            beta,
            lo,
            hi,
            weight: (side as f64).powi(1 - dim as i32),
            tw: vec![1.0; len],
            sw: 1.0,
            knorm: 0.0,
            start: None,
            buf: vec![0.0; len],
            dx: vec![0.0; len * dim],
        };
        level.step_weights();
        level.knorm = level.weighted_norm();
        level
    }

    fn inverse(&self, data: &mut [f64]) {
        dwt::inverse(self.bank, self.dim, self.side, data);
    }

    fn forward(&self, data: &mut [f64]) {
        dwt::forward(self.bank, self.dim, self.side, data);
    }

    /// `tw = sqrt(max ‖Dψ‖² / ‖Dψ‖²)` per coefficient; translates share a value.
    fn step_weights(&mut self) {
        let (len, side) = (self.len, self.side);
        let mut atom = vec![0.0; len];
        let mut energy = vec![0.0; len];
        let mut done = vec![false; len];
        // blocks of the Mallat layout: per axis, [0, 1) or [s, 2s) for block size s
        let mut size = 1;
        while size < side {
            let count = 2usize.pow(self.dim as u32);
            for kind in 0..count {
                let mut first = 0;
                let mut any_detail = false;
                for a in 0..self.dim {
                    let bit = (kind >> a) & 1;
                    any_detail |= bit == 1;
                    first += bit * size * side.pow((self.dim - 1 - a) as u32);
                }
                if (size > 1 && !any_detail) || done[first] {
                    continue;
                }
                atom.iter_mut().for_each(|v| *v = 0.0);
                atom[first] = 1.0;
                self.inverse(&mut atom);
                diff(self.dim, side, &atom, &mut self.dx);
                let e = self.dx.iter().map(|d| d * d).sum::<f64>();
                for_block(self.dim, side, size, kind, |p| {
                    energy[p] = e;
                    done[p] = true;
                });
            }
            size *= 2;
        }
        let top = energy.iter().fold(0.0_f64, |m, v| m.max(*v));
        let cap = side as f64;
        for (t, e) in self.tw.iter_mut().zip(&energy) {
            *t = if *e > 0.0 {
                (top / e).sqrt().min(cap)
            } else {
                cap
            };
        }
        self.sw = 1.0 / self.tw.iter().fold(1.0_f64, |m, v| m.max(*v));
    }

    /// Power iteration for `‖Σ^{1/2} K T^{1/2}‖`, with a safety margin.
    fn weighted_norm(&mut self) -> f64 {
        let (len, dim, side) = (self.len, self.dim, self.side);
        let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
        let mut x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut g = vec![0.0; len];
        let mut lambda = 0.0_f64;
        for it in 0..NORM_ITERS {
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nx == 0.0 {
                break;
            }
            for i in 0..len {
                g[i] = x[i] / nx * self.tw[i].sqrt();
            }
            self.inverse(&mut g);
            diff(dim, side, &g, &mut self.dx);
            diff_t(dim, side, &self.dx, &mut x);
            for i in 0..len {
                x[i] += self.sw * g[i];
            }
            self.forward(&mut x);
            for i in 0..len {
                x[i] *= self.tw[i].sqrt();
            }
            let next = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let done = it >= 32 && (next - lambda).abs() <= 1e-6 * next;
            lambda = next;
            if done {
                break;
            }
        }
        (NORM_MARGIN * lambda).sqrt()
    }

    /// `Kᵀy = W (Dᵀ y₁ + y₂)` into `self.buf`.
    fn kt(&mut self, y: &[f64]) {
        let (len, dim) = (self.len, self.dim);
        diff_t(dim, self.side, &y[..len * dim], &mut self.buf);
        for (b, v) in self.buf.iter_mut().zip(&y[len * dim..]) {
            *b += v;
        }
        dwt::forward(self.bank, dim, self.side, &mut self.buf);
    }

    /// Half-resolution problem: the coarse block of the bounds, rescaled.
    fn coarse(&self) -> Option<Level<'a>> {
        let half = self.side / 2;
        if half < COARSEST {
            return None;
        }
        let s = 2f64.powf(self.dim as f64 / 2.0);
        let clen = half.pow(self.dim as u32);
        let mut lo = vec![0.0; clen];
        let mut hi = vec![0.0; clen];
        for c in 0..clen {
            let p = embed(self.dim, half, self.side, c);
            lo[c] = self.lo[p] / s;
            hi[c] = self.hi[p] / s;
        }
        Some(Level::new(
            self.bank,
            self.flavor,
            self.dim,
            half,
            self.beta,
            lo,
            hi,
        ))
    }

    /// Warm start from the solution of [`Level::coarse`].
    fn prolong(&mut self, x: &[f64], y: &[f64]) {
        let (dim, side, len) = (self.dim, self.side, self.len);
        let half = side / 2;
        let s = 2f64.powf(dim as f64 / 2.0);
        let mut fx: Vec<f64> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.0_f64.clamp(*l, *h))
            .collect();
        for (c, v) in x.iter().enumerate() {
            let p = embed(dim, half, side, c);
            fx[p] = (v * s).clamp(self.lo[p], self.hi[p]);
        }
        let clen = x.len();
        let mut fy = vec![0.0; len * (dim + 1)];
        for a in 0..dim {
            for i in 0..len {
                let mut rest = i;
                let mut c = 0;
                let mut stride = 1;
                for _ in 0..dim {
                    c += (rest % side) / 2 * stride;
                    rest /= side;
                    stride *= half;
                }
                fy[a * len + i] = y[a * clen + c];
            }
        }
        self.start = Some((fx, fy));
    }
}

/// Row-major index at side `half` to the same multi-index at side `side`.
fn embed(dim: usize, half: usize, side: usize, c: usize) -> usize {
    let mut rest = c;
    let mut p = 0;
    let mut stride = 1;
    for _ in 0..dim {
        p += (rest % half) * stride;
        rest /= half;
        stride *= side;
    }
    p
}

/// Visits the positions of one `size`-block of the Mallat layout.
fn for_block(dim: usize, side: usize, size: usize, kind: usize, mut f: impl FnMut(usize)) {
    let extent = if size == 1 && kind == 0 { 1 } else { size };
    for c in 0..extent.pow(dim as u32) {
        let mut rest = c;
        let mut p = 0;
        for a in (0..dim).rev() {
            let bit = (kind >> a) & 1;
            p += (bit * size + rest % extent) * side.pow((dim - 1 - a) as u32);
            rest /= extent;
        }
        f(p);
    }
}

impl Saddle for Level<'_> {
    fn initial(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.start {
            Some(s) => s.clone(),
            None => {
                let x = self
                    .lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(l, h)| 0.0_f64.clamp(*l, *h))
                    .collect();
                (x, vec![0.0; self.len * (self.dim + 1)])
            }
        }
    }

    fn knorm(&self) -> f64 {
        self.knorm
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
        let (len, dim, beta) = (self.len, self.dim, self.beta);
        self.kt(y);
        for i in 0..len {
            tx[i] = (x[i] - tau * self.tw[i] * self.buf[i]).clamp(self.lo[i], self.hi[i]);
            self.buf[i] = tx[i] + theta * (tx[i] - x[i]);
        }
        dwt::inverse(self.bank, dim, self.side, &mut self.buf);
        diff(dim, self.side, &self.buf, &mut self.dx);
        let (ty1, ty2) = ty.split_at_mut(len * dim);
        for i in 0..len * dim {
            ty1[i] = y[i] + sigma * self.dx[i];
        }
        project_dual(self.flavor, dim, ty1, 1.0);
        let s2 = sigma * self.sw;
        for i in 0..len {
            let v = y[len * dim + i] + s2 * self.buf[i];
            ty2[i] = v - s2 * (v / s2).clamp(-beta, beta);
        }
    }

    fn evaluate(&mut self, x: &[f64], y: &[f64]) -> Evaluation {
        let (len, dim) = (self.len, self.dim);
        let mut g = x.to_vec();
        self.inverse(&mut g);
        diff(dim, self.side, &g, &mut self.dx);
        let objective = self.weight * tv_raw(self.flavor, dim, &self.dx);
        let scale = (len as f64).sqrt();
        let max_residual = x
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .fold(0.0_f64, |m, (v, (l, h))| m.max((v - 0.5 * (l + h)).abs()))
            / scale;
        let sup = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let feasible = sup <= self.beta;

        self.kt(y);
        let box_term: f64 = self
            .buf
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(k, (l, h))| if *k > 0.0 { k * l } else { k * h })
            .sum();
        let sup_term = self.beta * y[len * dim..].iter().map(|v| v.abs()).sum::<f64>();
        Evaluation {
            estimate: g,
            objective,
            max_residual,
            feasible,
            bound: self.weight * (box_term - sup_term),
        }
    }
}

/// Solves `level`, warm started by the chain of coarser levels.
/// Iteration counts accumulate over levels.
pub(super) fn solve(mut level: Level<'_>, cfg: &SolverConfig) -> Outcome {
    let mut spent = 0;
    if let Some(coarse) = level.coarse() {
        let inner = solve(coarse, cfg);
        spent = inner.iterations;
        let mut cx = inner.estimate;
        let half = level.side / 2;
        dwt::forward(level.bank, level.dim, half, &mut cx);
        level.prolong(&cx, &inner.dual);
    }
    let mut out = run(&mut level, cfg);
    out.iterations += spent;
    out
}
