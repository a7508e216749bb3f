//! Raw (unscaled) periodic forward differences and their transpose.

use crate::grid::TvFlavor;

/// `out[a * len + i] = u[i + e_a] - u[i]`.
pub(crate) fn diff(dim: usize, side: usize, u: &[f64], out: &mut [f64]) {
    let len = u.len();
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        let block = stride * side;
        let o = &mut out[axis * len..(axis + 1) * len];
        for base in (0..len).step_by(block) {
            for c in 0..side {
                let row = base + c * stride;
                let next = if c + 1 < side { row + stride } else { base };
                for r in 0..stride {
                    o[row + r] = u[next + r] - u[row + r];
                }
            }
        }
    }
}

/// Transpose of [`diff`]: `out[i] = Σ_a p_a[i - e_a] - p_a[i]`.
pub(crate) fn diff_t(dim: usize, side: usize, p: &[f64], out: &mut [f64]) {
    let len = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        let block = stride * side;
        let pa = &p[axis * len..(axis + 1) * len];
        for base in (0..len).step_by(block) {
            for c in 0..side {
                let row = base + c * stride;
                let prev = if c > 0 {
                    row - stride
                } else {
                    base + (side - 1) * stride
                };
                for r in 0..stride {
                    out[row + r] += pa[prev + r] - pa[row + r];
                }
            }
        }
    }
}

/// Squared operator norm bound of [`diff`].
pub(crate) fn diff_norm_sq(dim: usize) -> f64 {
    4.0 * dim as f64
}

/// Projection onto the dual ball of the raw TV term: per-entry `[-r, r]`
/// (anisotropic) or per-cell Euclidean ball of radius `r` (isotropic).
pub(crate) fn project_dual(flavor: TvFlavor, dim: usize, p: &mut [f64], r: f64) {
    match flavor {
        TvFlavor::Anisotropic => p.iter_mut().for_each(|v| *v = v.clamp(-r, r)),
        TvFlavor::Isotropic => {
            let len = p.len() / dim;
            for i in 0..len {
                let norm = (0..dim).map(|a| p[a * len + i].powi(2)).sum::<f64>().sqrt();
                if norm > r {
                    let s = r / norm;
                    (0..dim).for_each(|a| p[a * len + i] *= s);
                }
            }
        }
    }
}

/// `Σ_i |(Du)_i|` with the pointwise norm of `flavor`, from precomputed differences.
pub(crate) fn tv_raw(flavor: TvFlavor, dim: usize, du: &[f64]) -> f64 {
    match flavor {
        TvFlavor::Anisotropic => du.iter().map(|v| v.abs()).sum(),
        TvFlavor::Isotropic => {
            let len = du.len() / dim;
            (0..len)
                .map(|i| {
                    (0..dim)
                        .map(|a| du[a * len + i].powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .sum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{bv_seminorm, TorusSignal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn transpose_and_tv_agree_with_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (dim, side) in [(1usize, 32usize), (2, 16), (3, 8)] {
            let len = side.pow(dim as u32);
            let u: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p: Vec<f64> = (0..len * dim)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let mut du = vec![0.0; len * dim];
            let mut dtp = vec![0.0; len];
            diff(dim, side, &u, &mut du);
            diff_t(dim, side, &p, &mut dtp);
            let lhs: f64 = du.iter().zip(&p).map(|(a, b)| a * b).sum();
            let rhs: f64 = u.iter().zip(&dtp).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
            let s = TorusSignal::new(dim, side, u).unwrap();
            let h = (side as f64).powi(1 - dim as i32);
            for flavor in [TvFlavor::Anisotropic, TvFlavor::Isotropic] {
                let tv = h * tv_raw(flavor, dim, &du);
                assert!((tv - bv_seminorm(&s, flavor)).abs() < 1e-12 * tv);
            }
        }
    }
}
