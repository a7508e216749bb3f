use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frames::{Frame, FrameDescriptor, FrameIndex, IndexSet};
use crate::grid::MAX_DIM;

/// Offset exponent `R = ⌈J max(1, d/2)⌉`.
pub(crate) fn offset_exponent(scales: u32, dim: usize) -> u32 {
    if dim <= 2 {
        scales
    } else {
        (scales as usize * dim).div_ceil(2) as u32
    }
}

/// Tensor-product kernel `K(x) = Π_a k(x_a) / ‖k‖^d` where `k` is the
/// indicator of `[margin, 1 - margin]` convolved with the standard bump of
/// radius `mollifier_radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub plateau_margin: f64,
    pub mollifier_radius: f64,
}

impl KernelSpec {
    /// `[1/4, 3/4]` smoothed at radius 1/4 in d = 1; in d >= 2 the indicator
    /// of `[1/8, 7/8]^d` at radius 1/8 keeps `‖K‖_∞ <= 2`.
    pub fn default_for(dim: usize) -> Self {
        if dim <= 1 {
            Self {
                plateau_margin: 0.25,
                mollifier_radius: 0.25,
            }
        } else {
            Self {
                plateau_margin: 0.125,
                mollifier_radius: 0.125,
            }
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let (a, r) = (self.plateau_margin, self.mollifier_radius);
        if !(r > 0.0 && a >= r && a < 0.5) {
            return invalid(format!(
                "kernel needs 0 < radius <= margin < 1/2 (support inside [0,1)), got margin {a}, radius {r}"
            ));
        }
        let sup = self.sup_norm(dim);
        if sup > 2.0 {
            return invalid(format!("kernel sup norm {sup:.4} exceeds 2 in d={dim}"));
        }
        Ok(())
    }

    /// One-dimensional profile `k(t)`, supported in `[margin - radius, 1 - margin + radius]`.
    pub fn profile(&self, t: f64) -> f64 {
        let (a, r) = (self.plateau_margin, self.mollifier_radius);
        bump_cdf((t - a) / r) - bump_cdf((t - 1.0 + a) / r)
    }

    /// `‖K‖_{L^∞}` of the continuum kernel normalized to unit `L^2` norm.
    pub fn sup_norm(&self, dim: usize) -> f64 {
        let steps = 4096;
        let h = 1.0 / steps as f64;
        let l2sq = simpson(|t| self.profile(t).powi(2), 0.0, 1.0, steps);
        let peak = (0..=steps)
            .map(|i| self.profile(i as f64 * h))
            .fold(0.0_f64, f64::max);
        (peak / l2sq.sqrt()).powi(dim as i32)
    }
}

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let steps = steps + steps % 2;
    let h = (b - a) / steps as f64;
    let mut acc = f(a) + f(b);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Distribution function of the normalized bump on `[-1, 1]`, tabulated by
/// cumulative Simpson sums and interpolated linearly.
fn bump_cdf(u: f64) -> f64 {
    const CELLS: usize = 1 << 14;
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let table = TABLE.get_or_init(|| {
        let h = 2.0 / CELLS as f64;
        let mut acc = vec![0.0; CELLS + 1];
        for i in 0..CELLS {
            let x0 = -1.0 + i as f64 * h;
            acc[i + 1] = acc[i] + h / 6.0 * (bump(x0) + 4.0 * bump(x0 + 0.5 * h) + bump(x0 + h));
        }
        let total = acc[CELLS];
        acc.iter_mut().for_each(|v| *v /= total);
        acc
    });
    let x = (u + 1.0) / 2.0 * CELLS as f64;
    let i = (x.floor() as usize).min(CELLS - 1);
    let t = x - i as f64;
    (table[i] * (1.0 - t) + table[i + 1] * t).clamp(0.0, 1.0)
}

#[derive(Debug)]
struct Scale {
    /// Cells per cube side.
    footprint: usize,
    /// Normalization making the grid atom unit norm.
    amplitude: f64,
    /// Length-N DFT of the sampled one-dimensional footprint.
    spectrum: Vec<Complex64>,
}

/// m-adic system of smoothed cube indicators on an `N^d` grid.
///
/// Coefficients are computed per scale as a circular correlation with the
/// rescaled kernel, evaluated through one `N^d` FFT of the signal and one
/// small inverse FFT on the offset lattice per scale.
pub struct MadicFrame {
    descriptor: FrameDescriptor,
    set: IndexSet,
    side: usize,
    base: usize,
    /// Offset exponent actually used on this grid.
    offset_exponent: u32,
    /// Cells between neighbouring offsets.
    stride: usize,
    scales: Vec<Scale>,
    indices: Arc<[FrameIndex]>,
    key: Arc<str>,
    fft_n: Arc<dyn Fft<f64>>,
    ifft_n: Arc<dyn Fft<f64>>,
    fft_p: Arc<dyn Fft<f64>>,
    ifft_p: Arc<dyn Fft<f64>>,
    norm: OnceLock<f64>,
}

impl std::fmt::Debug for MadicFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MadicFrame")
            .field("key", &self.key)
            .field("offset_exponent", &self.offset_exponent)
            .field("capped", &self.offset_exponent_capped())
            .finish()
    }
}

impl MadicFrame {
    pub fn new(descriptor: FrameDescriptor, set: IndexSet, side: usize) -> Result<Self> {
        let FrameDescriptor::Madic { base, kernel } = descriptor else {
            return Err(Error::InvalidArgument("not an m-adic descriptor".into()));
        };
        let dim = set.dim;
        let scales = set.scales;
        let grid_levels = exact_log(side, base).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "grid side {side} is not a power of the base {base}"
            ))
        })?;
        if grid_levels < scales {
            return Err(Error::UnderResolved(format!(
                "m-adic scale j = {} needs N >= {base}^{scales} = {}, grid has N = {side}",
                scales - 1,
                base.pow(scales)
            )));
        }
        let nominal = set.offset_exponent.unwrap_or(scales);
        let offset_exponent = nominal.min(grid_levels);
        let lattice = base.pow(offset_exponent);
        let stride = side / lattice;

        let mut planner = FftPlanner::new();
        let fft_n = planner.plan_fft_forward(side);
        let ifft_n = planner.plan_fft_inverse(side);
        let fft_p = planner.plan_fft_forward(lattice);
        let ifft_p = planner.plan_fft_inverse(lattice);

        let mut per_scale = Vec::with_capacity(scales as usize);
        for j in 0..scales {
            let footprint = side / base.pow(j);
            let samples: Vec<f64> = (0..footprint)
                .map(|t| kernel.profile((t as f64 + 0.5) / footprint as f64))
                .collect();
            let energy: f64 = samples.iter().map(|v| v * v).sum();
            if energy == 0.0 {
                return Err(Error::UnderResolved(format!(
                    "kernel vanishes on the {footprint}-cell footprint of scale {j}"
                )));
            }
            let amplitude = ((side as f64) / energy).powf(dim as f64 / 2.0);
            let mut spectrum: Vec<Complex64> = (0..side)
                .map(|t| Complex64::new(if t < footprint { samples[t] } else { 0.0 }, 0.0))
                .collect();
            fft_n.process(&mut spectrum);
            per_scale.push(Scale {
                footprint,
                amplitude,
                spectrum,
            });
        }

        let mut indices = Vec::with_capacity(scales as usize * lattice.pow(dim as u32));
        for j in 0..scales {
            for flat in 0..lattice.pow(dim as u32) {
                let mut offset = [0u32; MAX_DIM];
                let mut rem = flat;
                for a in (0..dim).rev() {
                    offset[a] = (rem % lattice) as u32;
                    rem /= lattice;
                }
                indices.push(FrameIndex::Madic { j, offset });
            }
        }
        let key = format!(
            "{}:d{dim}:n{}:N{side}:J{scales}:R{offset_exponent}",
            descriptor.label(),
            set.n
        )
        .into();
        Ok(Self {
            descriptor,
            set,
            side,
            base,
            offset_exponent,
            stride,
            scales: per_scale,
            indices: indices.into(),
            key,
            fft_n,
            ifft_n,
            fft_p,
            ifft_p,
            norm: OnceLock::new(),
        })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Offset exponent used on this grid (at most `log_m N`).
    pub fn offset_exponent(&self) -> u32 {
        self.offset_exponent
    }

    /// True when the nominal `R` exceeded the grid resolution and was capped.
    pub fn offset_exponent_capped(&self) -> bool {
        self.set
            .offset_exponent
            .is_some_and(|r| r > self.offset_exponent)
    }

    pub fn footprints(&self) -> Vec<usize> {
        self.scales.iter().map(|s| s.footprint).collect()
    }

    fn lattice(&self) -> usize {
        self.side / self.stride
    }

    /// Maps a flat grid-frequency index to the flat lattice index `ξ mod P`
    /// together with the kernel spectrum product for scale `scale`.
    fn fold_index(&self, flat: usize, scale: &Scale) -> (usize, Complex64) {
        let dim = self.set.dim;
        let p = self.lattice();
        let mut rem = flat;
        let mut folded = 0;
        let mut weight = Complex64::new(1.0, 0.0);
        let mut place = 1;
        for _ in 0..dim {
            let xi = rem % self.side;
            rem /= self.side;
            folded += (xi % p) * place;
            place *= p;
            weight *= scale.spectrum[xi];
        }
        (folded, weight)
    }
}

fn exact_log(value: usize, base: usize) -> Option<u32> {
    let mut e = 0;
    let mut p = 1usize;
    while p < value {
        p *= base;
        e += 1;
    }
    (p == value).then_some(e)
}

/// In-place unnormalized d-dimensional DFT over a `side^d` row-major array.
fn fft_nd(fft: &dyn Fft<f64>, dim: usize, side: usize, data: &mut [Complex64]) {
    let mut line = vec![Complex64::new(0.0, 0.0); side];
    let total = data.len();
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        let block = stride * side;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let start = outer + inner;
                for (t, l) in line.iter_mut().enumerate() {
                    *l = data[start + t * stride];
                }
                fft.process(&mut line);
                for (t, l) in line.iter().enumerate() {
                    data[start + t * stride] = *l;
                }
            }
        }
    }
}

impl Frame for MadicFrame {
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

    fn operator_norm(&self) -> f64 {
        *self
            .norm
            .get_or_init(|| crate::frames::power_iteration_norm(self))
    }

    fn analyze_into(&self, s: &[f64], out: &mut [f64]) {
        let dim = self.set.dim;
        let p = self.lattice();
        let per_scale = p.pow(dim as u32);
        let mut spec: Vec<Complex64> = s.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(self.fft_n.as_ref(), dim, self.side, &mut spec);
        let norm = (self.side as f64).powi(2 * dim as i32);
        let mut folded = vec![Complex64::new(0.0, 0.0); per_scale];
        for (j, scale) in self.scales.iter().enumerate() {
            folded
                .iter_mut()
                .for_each(|v| *v = Complex64::new(0.0, 0.0));
            for (flat, sv) in spec.iter().enumerate() {
                let (f, w) = self.fold_index(flat, scale);
                folded[f] += sv * w.conj();
            }
            fft_nd(self.ifft_p.as_ref(), dim, p, &mut folded);
            let factor = scale.amplitude / norm;
            for (o, v) in out[j * per_scale..(j + 1) * per_scale]
                .iter_mut()
                .zip(&folded)
            {
                *o = factor * v.re;
            }
        }
    }

    fn adjoint_into(&self, c: &[f64], out: &mut [f64]) {
        let dim = self.set.dim;
        let p = self.lattice();
        let per_scale = p.pow(dim as u32);
        let total = self.side.pow(dim as u32);
        let mut acc = vec![Complex64::new(0.0, 0.0); total];
        let mut lattice = vec![Complex64::new(0.0, 0.0); per_scale];
        for (j, scale) in self.scales.iter().enumerate() {
            for (l, &v) in lattice
                .iter_mut()
                .zip(&c[j * per_scale..(j + 1) * per_scale])
            {
                *l = Complex64::new(v, 0.0);
            }
            fft_nd(self.fft_p.as_ref(), dim, p, &mut lattice);
            for (flat, a) in acc.iter_mut().enumerate() {
                let (f, w) = self.fold_index(flat, scale);
                *a += lattice[f] * w * scale.amplitude;
            }
        }
        fft_nd(self.ifft_n.as_ref(), dim, self.side, &mut acc);
        let norm = total as f64;
        for (o, a) in out.iter_mut().zip(&acc) {
            *o = a.re / norm;
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

    /// Direct evaluation of one atom from its definition.
    fn direct_atom(
        kernel: &KernelSpec,
        dim: usize,
        side: usize,
        footprint: usize,
        start: [usize; 3],
    ) -> Vec<f64> {
        let samples: Vec<f64> = (0..footprint)
            .map(|t| kernel.profile((t as f64 + 0.5) / footprint as f64))
            .collect();
        let m = side.pow(dim as u32);
        let mut atom = vec![0.0; m];
        for (flat, v) in atom.iter_mut().enumerate() {
            let mut rem = flat;
            let mut val = 1.0;
            for a in (0..dim).rev() {
                let x = rem % side;
                rem /= side;
                let t = (x + side - start[a]) % side;
                val *= if t < footprint { samples[t] } else { 0.0 };
            }
            *v = val;
        }
        let norm = (atom.iter().map(|v| v * v).sum::<f64>() / m as f64).sqrt();
        atom.iter_mut().for_each(|v| *v /= norm);
        atom
    }

    #[test]
    fn default_kernels_are_admissible() {
        for d in 1..=3 {
            let k = KernelSpec::default_for(d);
            k.validate(d).unwrap();
            assert!(k.sup_norm(d) <= 2.0);
            assert_eq!(k.profile(0.0), 0.0);
            assert!((k.profile(0.5) - 1.0).abs() < 1e-12);
        }
        // the [1/4,3/4] cube is too narrow for d = 3
        assert!(KernelSpec::default_for(1).validate(3).is_err());
    }

    #[test]
    fn atoms_match_direct_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (dim, n, side) in [(1usize, 4u64, 16usize), (2, 16, 16), (1, 64, 64)] {
            let desc = FrameDescriptor::madic(2, dim);
            let FrameDescriptor::Madic { kernel, .. } = desc else {
                unreachable!()
            };
            let f = build_frame(&desc, dim, n, side).unwrap();
            let idx = f.indices().clone();
            for _ in 0..10 {
                let pos = rng.random_range(0..f.len());
                let FrameIndex::Madic { j, offset } = idx[pos] else {
                    unreachable!()
                };
                let r = crate::frames::omega_n(&desc, dim, n)
                    .unwrap()
                    .offset_exponent
                    .unwrap();
                let r = r.min(side.ilog2());
                let stride = side >> r;
                let start = [
                    offset[0] as usize * stride,
                    offset[1] as usize * stride,
                    offset[2] as usize * stride,
                ];
                let footprint = side >> j;
                let expect = direct_atom(&kernel, dim, side, footprint, start);
                let got = f.atom(pos);
                let err = got
                    .values()
                    .iter()
                    .zip(&expect)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(err < 1e-10, "d={dim} pos={pos}: {err}");
                assert!((got.lq_norm(2.0).unwrap() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn offset_cap_is_reported() {
        // d = 2, n = 256: J = 4, R = 4 needs 16 offsets per axis; N = 16 resolves them
        let f = MadicFrame::new(
            FrameDescriptor::madic(2, 2),
            crate::frames::omega_n(&FrameDescriptor::madic(2, 2), 2, 256).unwrap(),
            16,
        )
        .unwrap();
        assert!(!f.offset_exponent_capped());
        // d = 3, n = 8^3: J = 3, R = 5 > log2(8)
        let f = MadicFrame::new(
            FrameDescriptor::madic(2, 3),
            crate::frames::omega_n(&FrameDescriptor::madic(2, 3), 3, 512).unwrap(),
            8,
        )
        .unwrap();
        assert!(f.offset_exponent_capped());
        assert_eq!(f.offset_exponent(), 3);
    }

    #[test]
    fn under_resolved_grid_names_scale() {
        let err = build_frame(&FrameDescriptor::madic(2, 1), 1, 1024, 256).unwrap_err();
        assert!(err.to_string().contains("j = 9"), "{err}");
    }

    #[test]
    fn zero_signal_has_zero_local_means() {
        let s = TorusSignal::zeros(1, 32).unwrap();
        let v = crate::frames::local_means_sup(&s, &FrameDescriptor::madic(2, 1), 32).unwrap();
        assert_eq!(v, 0.0);
    }
}
