use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frames::{
    besov_norm_with, build_frame, Frame, FrameDescriptor, FrameIndex, WaveletFrame,
};
use crate::grid::{TorusSignal, TvFlavor};
use crate::truth::random_cartoon;

/// Terms of the interpolation ratio for one signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub dim: usize,
    pub q: f64,
    pub n: u64,
    pub lq: f64,
    pub l1: f64,
    pub bv: f64,
    pub sup: f64,
    /// `‖s‖_{B^{-d/2}_{∞,∞}}` over every scale of the grid.
    pub besov: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// `‖s‖_q` divided by the interpolation bound built from the Besov norm and
/// the BV norm `‖s‖_1 + |s|_BV`.
///
/// For `d ≥ 2` (and `q ≤ (d+2)/d`) the bound is `B^{2/(d+2)} V^{d/(d+2)}`.
/// For `d = 1` (and `q ≤ 3`) it is
/// `log(n) B^{2/3} V^{1/3} + n^{-1} ‖s‖_∞^{2/3} V^{1/3}`.
pub fn check_interpolation(s: &TorusSignal, q: f64, n: u64) -> Result<InterpolationReport> {
    let dim = s.dim();
    let d = dim as f64;
    if !(q >= 1.0 && q <= (d + 2.0) / d) {
        return invalid(format!(
            "q must lie in [1, {}] for d = {dim}, got {q}",
            (d + 2.0) / d
        ));
    }
    if dim == 1 && n < 2 {
        return invalid("the d = 1 bound needs n >= 2");
    }
    let sup = s.sup_norm();
    if sup == 0.0 {
        return invalid("the interpolation ratio is undefined for the zero signal");
    }
    let lq = s.lq_norm(q)?;
    let l1 = s.lq_norm(1.0)?;
    let bv = s.bv_seminorm(TvFlavor::Anisotropic);
    let besov = besov_norm_with(
        s,
        s.side().ilog2(),
        crate::frames::DEFAULT_VANISHING_MOMENTS,
    )?;
    let v = l1 + bv;
    let denominator = if dim == 1 {
        let nf = n as f64;
        nf.ln() * besov.powf(2.0 / 3.0) * v.cbrt() + sup.powf(2.0 / 3.0) * v.cbrt() / nf
    } else {
        besov.powf(2.0 / (d + 2.0)) * v.powf(d / (d + 2.0))
    };
    Ok(InterpolationReport {
        dim,
        q,
        n,
        lq,
        l1,
        bv,
        sup,
        besov,
        denominator,
        ratio: lq / denominator,
    })
}

/// Ratios over a seeded corpus of random cartoons; the maximum is the
/// empirical constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationCorpus {
    pub dim: usize,
    pub side: usize,
    pub q: f64,
    pub seed: u64,
    pub shapes: usize,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// Member `i` is `random_cartoon(dim, side, seed + i, shapes)`; `n = N^d`.
/// Members that vanish identically are skipped.
pub fn interpolation_corpus(
    dim: usize,
    side: usize,
    q: f64,
    count: usize,
    seed: u64,
    shapes: usize,
) -> Result<InterpolationCorpus> {
    if count == 0 {
        return invalid("corpus must not be empty");
    }
    let n = (side as u64).pow(dim as u32);
    let mut ratios = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let s = random_cartoon(dim, side, seed.wrapping_add(i), shapes)?;
        if s.sup_norm() == 0.0 {
            continue;
        }
        ratios.push(check_interpolation(&s, q, n)?.ratio);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(InterpolationCorpus {
        dim,
        side,
        q,
        seed,
        shapes,
        ratios,
        max_ratio,
    })
}

/// `C = 2^{d/2} max_{j, e≠0} 2^{jd/2} ‖ψ_{j,0,e}‖_{L¹}` from grid atoms at
/// every scale of an `N^d` grid.
pub fn wavelet_l1_constant(vanishing_moments: usize, dim: usize, side: usize) -> Result<f64> {
    let levels = side.ilog2();
    let frame = WaveletFrame::with_scales(vanishing_moments, dim, side, levels)?;
    let mut best = 0.0_f64;
    for (pos, idx) in frame.indices().iter().enumerate() {
        let FrameIndex::Wavelet { j, k, e } = idx else {
            continue;
        };
        if k.iter().any(|&x| x != 0) || e.iter().all(|&t| t == 0) {
            continue;
        }
        let l1 = frame.atom(pos).lq_norm(1.0)?;
        best = best.max(2f64.powf(*j as f64 * dim as f64 / 2.0) * l1);
    }
    Ok(2f64.powf(dim as f64 / 2.0) * best)
}

/// Jackson-type bound: the full-depth Besov norm against the coefficients
/// kept in `Ω_n` plus `C ‖s‖_∞ n^{-1/2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacksonReport {
    pub n: u64,
    pub besov: f64,
    pub omega_max: f64,
    pub constant: f64,
    pub remainder: f64,
    pub holds: bool,
}

pub fn jackson_check(s: &TorusSignal, vanishing_moments: usize, n: u64) -> Result<JacksonReport> {
    let (dim, side) = (s.dim(), s.side());
    let frame = build_frame(&FrameDescriptor::wavelet(vanishing_moments), dim, n, side)?;
    let omega_max = frame.analyze(s)?.max_abs();
    let besov = besov_norm_with(s, side.ilog2(), vanishing_moments)?;
    let constant = wavelet_l1_constant(vanishing_moments, dim, side)?;
    let remainder = constant * s.sup_norm() / (n as f64).sqrt();
    let bound = omega_max + remainder;
    let holds = besov <= bound * (1.0 + 1e-12);
    Ok(JacksonReport {
        n,
        besov,
        omega_max,
        constant,
        remainder,
        holds,
    })
}
