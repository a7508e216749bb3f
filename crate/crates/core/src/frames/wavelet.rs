use std::sync::Arc;

use crate::error::{Error, Result};
use crate::frames::{Frame, FrameDescriptor, FrameIndex, IndexSet};
use crate::grid::MAX_DIM;
use crate::wavelet::{self as dwt, FilterBank};

/// Periodized orthonormal wavelet basis truncated to scales `j < J`.
///
/// Grid atoms are `N^{d/2}` times the rows of the Euclidean-orthonormal
/// transform, so `analyze = N^{-d/2} W` and the grid adjoint is `N^{d/2} W^T`.
#[derive(Debug)]
pub struct WaveletFrame {
    descriptor: FrameDescriptor,
    set: IndexSet,
    side: usize,
    bank: FilterBank,
    indices: Arc<[FrameIndex]>,
    /// Array position of each coefficient after a full decomposition.
    positions: Vec<usize>,
    key: Arc<str>,
}

impl WaveletFrame {
    pub fn new(descriptor: FrameDescriptor, set: IndexSet, side: usize) -> Result<Self> {
        let FrameDescriptor::Wavelet { vanishing_moments } = descriptor else {
            return Err(Error::InvalidArgument("not a wavelet descriptor".into()));
        };
        let dim = set.dim;
        let levels = side.ilog2();
        if set.scales > levels {
            return Err(Error::UnderResolved(format!(
                "wavelet scale j = {} needs N >= 2^{}, grid has N = {side}",
                set.scales - 1,
                set.scales
            )));
        }
        let bank = FilterBank::daubechies(vanishing_moments)?;
        let (indices, positions) = canonical_layout(dim, side, set.scales);
        let key = format!(
            "{}:d{dim}:n{}:N{side}:J{}",
            descriptor.label(),
            set.n,
            set.scales
        )
        .into();
        Ok(Self {
            descriptor,
            set,
            side,
            bank,
            indices: indices.into(),
            positions,
            key,
        })
    }

    /// Frame with exactly `scales` levels on the grid, independent of `n`.
    /// With `scales = 0` only the father coefficient is kept.
    pub fn with_scales(
        vanishing_moments: usize,
        dim: usize,
        side: usize,
        scales: u32,
    ) -> Result<Self> {
        crate::grid::check_shape(dim, side)?;
        let descriptor = FrameDescriptor::Wavelet { vanishing_moments };
        let n = 1u64 << (scales as usize * dim);
        let set = IndexSet {
            dim,
            n,
            scales,
            offset_exponent: None,
            cardinality: n,
        };
        let mut frame = Self::new(descriptor, set, side)?;
        if scales == 0 {
            frame.indices = vec![FrameIndex::Wavelet {
                j: 0,
                k: [0; MAX_DIM],
                e: [0; MAX_DIM],
            }]
            .into();
            frame.positions = vec![0];
        }
        Ok(frame)
    }

    pub fn filter_bank(&self) -> &FilterBank {
        &self.bank
    }

    /// Full Euclidean-orthonormal decomposition of `s` (array layout).
    pub(crate) fn full_transform(&self, s: &[f64]) -> Vec<f64> {
        let mut buf = s.to_vec();
        dwt::forward(&self.bank, self.set.dim, self.side, &mut buf);
        buf
    }

    /// Array positions of the coefficients of `Ω_n` in the full transform.
    pub(crate) fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// True when `Ω_n` covers every coefficient of the grid.
    pub fn is_complete(&self) -> bool {
        self.positions.len() == self.grid_len()
    }
}

/// Canonical order: scale, then position `k` lexicographically, then type `e`.
fn canonical_layout(dim: usize, side: usize, scales: u32) -> (Vec<FrameIndex>, Vec<usize>) {
    let mut indices = Vec::new();
    let mut positions = Vec::new();
    let strides: Vec<usize> = (0..dim).map(|a| side.pow((dim - 1 - a) as u32)).collect();
    for j in 0..scales {
        let width = 1usize << j;
        for kflat in 0..width.pow(dim as u32) {
            let mut k = [0u32; MAX_DIM];
            let mut rem = kflat;
            for a in (0..dim).rev() {
                k[a] = (rem % width) as u32;
                rem /= width;
            }
            for eflat in 0..(1usize << dim) {
                if j > 0 && eflat == 0 {
                    continue;
                }
                let mut e = [0u8; MAX_DIM];
                for a in 0..dim {
                    e[a] = ((eflat >> (dim - 1 - a)) & 1) as u8;
                }
                let pos: usize = (0..dim)
                    .map(|a| (e[a] as usize * width + k[a] as usize) * strides[a])
                    .sum();
                indices.push(FrameIndex::Wavelet { j, k, e });
                positions.push(pos);
            }
        }
    }
    (indices, positions)
}

impl Frame for WaveletFrame {
    fn descriptor(&self) -> &FrameDescriptor {
        &self.descriptor
    }

    fn dim(&self) -> usize {
        self.set.dim
    }

    fn side(&self) -> usize {
        self.side
    }

    fn n(&self) -> u64 {
        self.set.n
    }

    fn index_set(&self) -> &IndexSet {
        &self.set
    }

    fn indices(&self) -> &Arc<[FrameIndex]> {
        &self.indices
    }

    fn key(&self) -> &Arc<str> {
        &self.key
    }

    fn analyze_into(&self, s: &[f64], out: &mut [f64]) {
        let full = self.full_transform(s);
        let scale = 1.0 / (self.grid_len() as f64).sqrt();
        for (o, &p) in out.iter_mut().zip(&self.positions) {
            *o = scale * full[p];
        }
    }

    fn adjoint_into(&self, c: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let scale = (self.grid_len() as f64).sqrt();
        for (&v, &p) in c.iter().zip(&self.positions) {
            out[p] = scale * v;
        }
        dwt::inverse(&self.bank, self.set.dim, self.side, out);
    }

    fn is_orthonormal(&self) -> bool {
        true
    }

    fn as_wavelet(&self) -> Option<&WaveletFrame> {
        Some(self)
    }

    fn operator_norm(&self) -> f64 {
        if self.indices.is_empty() {
            0.0
        } else {
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::build_frame;
    use crate::grid::TorusSignal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn canonical_order_starts_with_father() {
        let f = build_frame(&FrameDescriptor::wavelet(2), 2, 64, 8).unwrap();
        let idx = f.indices();
        assert_eq!(idx.len(), 64);
        assert_eq!(
            idx[0],
            FrameIndex::Wavelet {
                j: 0,
                k: [0; 3],
                e: [0; 3]
            }
        );
        assert_eq!(
            idx[3],
            FrameIndex::Wavelet {
                j: 0,
                k: [0; 3],
                e: [1, 1, 0]
            }
        );
        assert_eq!(
            idx[4],
            FrameIndex::Wavelet {
                j: 1,
                k: [0; 3],
                e: [0, 1, 0]
            }
        );
        assert!(idx.windows(2).all(|w| w[0].scale() <= w[1].scale()));
    }

    #[test]
    fn constant_has_only_father() {
        let f = build_frame(&FrameDescriptor::wavelet(4), 1, 64, 64).unwrap();
        let c = f
            .analyze(&TorusSignal::constant(1, 64, 0.75).unwrap())
            .unwrap();
        assert!((c.values()[0] - 0.75).abs() < 1e-14);
        assert!(c.values()[1..].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn atoms_are_orthonormal() {
        let f = build_frame(&FrameDescriptor::wavelet(3), 1, 32, 32).unwrap();
        let atoms: Vec<TorusSignal> = (0..f.len()).map(|i| f.atom(i)).collect();
        for (i, a) in atoms.iter().enumerate() {
            let c = f.analyze(a).unwrap();
            for (j, v) in c.values().iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_set_on_finer_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // n = 16 on a 64-point grid: J = 4 coarse scales only
        let f = build_frame(&FrameDescriptor::wavelet(4), 1, 16, 64).unwrap();
        assert_eq!(f.len(), 16);
        let c: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = f.coefficients(c).unwrap();
        let s = f.adjoint(&c).unwrap();
        let back = f.analyze(&s).unwrap();
        for (a, b) in c.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let err = build_frame(&FrameDescriptor::wavelet(4), 1, 1024, 64).unwrap_err();
        assert!(err.to_string().contains("2^10"), "{err}");
    }
}
