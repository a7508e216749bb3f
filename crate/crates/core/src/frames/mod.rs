//! Dictionaries `Φ = {φ_ω}` with truncated index sets `Ω_n`.
//!
//! Two families are provided: periodized orthonormal Daubechies wavelets and
//! the m-adic system of smoothed cube indicators. Every atom is normalized to
//! unit grid `L^2` norm, and coefficients are grid inner products
//! `⟨φ_ω, s⟩ = N^{-d} Σ_i φ_ω(i) s(i)`.

mod madic;
mod wavelet;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{self, TorusSignal, MAX_DIM};

pub use madic::{KernelSpec, MadicFrame};
pub use wavelet::WaveletFrame;

/// Vanishing moments of the default wavelet family.
pub const DEFAULT_VANISHING_MOMENTS: usize = 4;

/// Serializable description of a dictionary, independent of grid and `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FrameDescriptor {
    Wavelet { vanishing_moments: usize },
    Madic { base: usize, kernel: KernelSpec },
}

impl Default for FrameDescriptor {
    fn default() -> Self {
        FrameDescriptor::Wavelet {
            vanishing_moments: DEFAULT_VANISHING_MOMENTS,
        }
    }
}

impl FrameDescriptor {
    pub fn wavelet(vanishing_moments: usize) -> Self {
        FrameDescriptor::Wavelet { vanishing_moments }
    }

    /// m-adic system with the default kernel for dimension `dim`.
    pub fn madic(base: usize, dim: usize) -> Self {
        FrameDescriptor::Madic {
            base,
            kernel: KernelSpec::default_for(dim),
        }
    }

    /// Checks the regularity conditions the theory places on the family.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if dim == 0 || dim > MAX_DIM {
            return invalid(format!("dimension must be in 1..={MAX_DIM}"));
        }
        match self {
            FrameDescriptor::Wavelet {
                vanishing_moments: s,
            } => {
                let s = *s;
                if s == 0 || s > crate::wavelet::MAX_VANISHING_MOMENTS {
                    return invalid(format!("unsupported number of vanishing moments {s}"));
                }
                // Haar is only admitted in d = 1
                if dim >= 2 && (s as f64) <= f64::max(1.0, dim as f64 / 2.0) {
                    return invalid(format!(
                        "wavelet regularity S={s} must exceed max(1, d/2) for d={dim}"
                    ));
                }
                Ok(())
            }
            FrameDescriptor::Madic { base, kernel } => {
                if *base < 2 || !base.is_power_of_two() {
                    return invalid(format!(
                        "m-adic base must be a power of two >= 2, got {base}"
                    ));
                }
                kernel.validate(dim)
            }
        }
    }

    /// Growth exponent Γ with `c n^Γ <= #Ω_n`.
    pub fn growth_exponent(&self, dim: usize) -> f64 {
        match self {
            FrameDescriptor::Wavelet { .. } => 1.0,
            FrameDescriptor::Madic { .. } => f64::max(1.0, dim as f64 / 2.0),
        }
    }

    /// Degree of the polynomial `Q` with `#Ω_n <= Q(n)`.
    pub fn growth_poly_degree(&self, dim: usize) -> f64 {
        match self {
            FrameDescriptor::Wavelet { .. } => 1.0,
            FrameDescriptor::Madic { .. } => f64::max(1.0, dim as f64 / 2.0) + 1.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            FrameDescriptor::Wavelet { vanishing_moments } => {
                format!("wavelet-db{vanishing_moments}")
            }
            FrameDescriptor::Madic { base, .. } => format!("madic-m{base}"),
        }
    }
}

/// Index of one atom.
///
/// Unused trailing axes (beyond the dimension of the frame) are zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FrameIndex {
    /// `ψ_{j,k,e}`; `e` is the per-axis type (0 = scaling, 1 = wavelet).
    Wavelet {
        j: u32,
        k: [u32; MAX_DIM],
        e: [u8; MAX_DIM],
    },
    /// Smoothed cube of side `m^{-j}` at offset `offset · m^{-R}`.
    Madic { j: u32, offset: [u32; MAX_DIM] },
}

impl FrameIndex {
    pub fn scale(&self) -> u32 {
        match self {
            FrameIndex::Wavelet { j, .. } | FrameIndex::Madic { j, .. } => *j,
        }
    }
}

/// Truncated index set `Ω_n` with its defining parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSet {
    pub dim: usize,
    pub n: u64,
    /// Number of scales `J`.
    pub scales: u32,
    /// Offset resolution exponent `R` (m-adic only).
    pub offset_exponent: Option<u32>,
    pub cardinality: u64,
}

/// `Ω_n` for a descriptor at noise level `n`.
///
/// Wavelets: `J = ⌊log_2(n)/d⌋`, `#Ω_n = 2^{Jd}`. m-adic: `J = ⌈log_m(n)/d⌉`,
/// `R = ⌈J max(1, d/2)⌉`, `#Ω_n = J m^{dR}`.
pub fn omega_n(frame: &FrameDescriptor, dim: usize, n: u64) -> Result<IndexSet> {
    frame.validate(dim)?;
    match frame {
        FrameDescriptor::Wavelet { .. } => {
            let min = 1u64 << dim;
            if n < min {
                return invalid(format!("wavelet Ω_n needs n >= 2^d = {min}, got {n}"));
            }
            let scales = (n.ilog2() as usize / dim) as u32;
            Ok(IndexSet {
                dim,
                n,
                scales,
                offset_exponent: None,
                cardinality: 1u64 << (scales as usize * dim),
            })
        }
        FrameDescriptor::Madic { base, .. } => {
            let m = *base as u64;
            let min = m.pow(dim as u32);
            if n < min {
                return invalid(format!("m-adic Ω_n needs n >= m^d = {min}, got {n}"));
            }
            let scales = ceil_log(n, m).div_ceil(dim as u32);
            let r = madic::offset_exponent(scales, dim);
            let per_scale = m
                .checked_pow(dim as u32 * r)
                .ok_or_else(|| Error::InvalidArgument("m-adic index set too large".into()))?;
            Ok(IndexSet {
                dim,
                n,
                scales,
                offset_exponent: Some(r),
                cardinality: scales as u64 * per_scale,
            })
        }
    }
}

/// Smallest `e` with `m^e >= n`.
fn ceil_log(n: u64, m: u64) -> u32 {
    let mut e = 0;
    let mut p = 1u64;
    while p < n {
        p = p.saturating_mul(m);
        e += 1;
    }
    e
}

/// Coefficients `⟨φ_ω, s⟩` over `Ω_n` in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector {
    frame_key: Arc<str>,
    indices: Arc<[FrameIndex]>,
    values: Vec<f64>,
}

impl CoefficientVector {
    pub fn frame_key(&self) -> &str {
        &self.frame_key
    }

    pub fn indices(&self) -> &[FrameIndex] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FrameIndex, f64)> {
        self.indices.iter().zip(self.values.iter().copied())
    }

    /// Plain dot product with another vector on the same index set.
    pub fn pairing(&self, other: &CoefficientVector) -> Result<f64> {
        if self.frame_key != other.frame_key {
            return Err(Error::ShapeMismatch(
                "coefficient vectors index different sets".into(),
            ));
        }
        Ok(grid::dot(&self.values, &other.values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// CSV with columns `j, k1..kd, e1..ed, value` (wavelet) or `j, k1..kd, value` (m-adic).
    pub fn to_csv(&self, dim: usize) -> String {
        let mut out = String::new();
        let axes = |p: &str| {
            (1..=dim)
                .map(|a| format!("{p}{a}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        match self.indices.first() {
            Some(FrameIndex::Madic { .. }) => out.push_str(&format!("j,{},value\n", axes("k"))),
            _ => out.push_str(&format!("j,{},{},value\n", axes("k"), axes("e"))),
        }
        for (idx, v) in self.iter() {
            match idx {
                FrameIndex::Wavelet { j, k, e } => {
                    let ks: Vec<String> = k[..dim].iter().map(|x| x.to_string()).collect();
                    let es: Vec<String> = e[..dim].iter().map(|x| x.to_string()).collect();
                    out.push_str(&format!("{j},{},{},{v:e}\n", ks.join(","), es.join(",")));
                }
                FrameIndex::Madic { j, offset } => {
                    let ks: Vec<String> = offset[..dim].iter().map(|x| x.to_string()).collect();
                    out.push_str(&format!("{j},{},{v:e}\n", ks.join(",")));
                }
            }
        }
        out
    }
}

/// A dictionary instantiated on an `N^d` grid at noise level `n`.
pub trait Frame: Send + Sync + std::fmt::Debug {
    fn descriptor(&self) -> &FrameDescriptor;
    fn dim(&self) -> usize;
    fn side(&self) -> usize;
    fn n(&self) -> u64;
    fn index_set(&self) -> &IndexSet;
    /// Indices of the coefficients in canonical order.
    fn indices(&self) -> &Arc<[FrameIndex]>;
    /// Identifies the (family, d, n, N) instantiation.
    fn key(&self) -> &Arc<str>;

    /// Grid inner products with every atom; `out.len() == #Ω_n`.
    fn analyze_into(&self, s: &[f64], out: &mut [f64]);
    /// Grid adjoint `Σ_ω c_ω φ_ω`; `out.len() == N^d`.
    fn adjoint_into(&self, c: &[f64], out: &mut [f64]);

    /// True when the atoms are orthonormal under the grid inner product.
    fn is_orthonormal(&self) -> bool {
        false
    }

    /// The underlying wavelet basis, when this frame is one.
    fn as_wavelet(&self) -> Option<&WaveletFrame> {
        None
    }

    /// Largest singular value of the analysis operator (grid norm to ℓ²).
    fn operator_norm(&self) -> f64 {
        power_iteration_norm(self)
    }

    fn len(&self) -> usize {
        self.indices().len()
    }

    fn is_empty(&self) -> bool {
        self.indices().is_empty()
    }

    fn grid_len(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    fn analyze(&self, s: &TorusSignal) -> Result<CoefficientVector> {
        if s.dim() != self.dim() || s.side() != self.side() {
            return Err(Error::ShapeMismatch(format!(
                "frame built for (d={}, N={}), signal is (d={}, N={})",
                self.dim(),
                self.side(),
                s.dim(),
                s.side()
            )));
        }
        let mut values = vec![0.0; self.len()];
        self.analyze_into(s.values(), &mut values);
        Ok(CoefficientVector {
            frame_key: self.key().clone(),
            indices: self.indices().clone(),
            values,
        })
    }

    fn adjoint(&self, c: &CoefficientVector) -> Result<TorusSignal> {
        if c.frame_key != *self.key() || c.values.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "coefficients indexed by `{}`, frame is `{}`",
                c.frame_key,
                self.key()
            )));
        }
        let mut out = vec![0.0; self.grid_len()];
        self.adjoint_into(&c.values, &mut out);
        Ok(TorusSignal::from_parts(self.dim(), self.side(), out))
    }

    /// Wraps raw values as a coefficient vector on this frame's index set.
    fn coefficients(&self, values: Vec<f64>) -> Result<CoefficientVector> {
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                self.len(),
                values.len()
            )));
        }
        Ok(CoefficientVector {
            frame_key: self.key().clone(),
            indices: self.indices().clone(),
            values,
        })
    }

    /// The atom `φ_ω` as a grid signal.
    fn atom(&self, position: usize) -> TorusSignal {
        let mut c = vec![0.0; self.len()];
        c[position] = 1.0;
        let mut out = vec![0.0; self.grid_len()];
        self.adjoint_into(&c, &mut out);
        TorusSignal::from_parts(self.dim(), self.side(), out)
    }
}

/// Builds the frame for `descriptor` on an `N^d` grid at noise level `n`.
pub fn build_frame(
    descriptor: &FrameDescriptor,
    dim: usize,
    n: u64,
    side: usize,
) -> Result<Arc<dyn Frame>> {
    grid::check_shape(dim, side)?;
    let set = omega_n(descriptor, dim, n)?;
    Ok(match descriptor {
        FrameDescriptor::Wavelet { .. } => {
            Arc::new(WaveletFrame::new(descriptor.clone(), set, side)?)
        }
        FrameDescriptor::Madic { .. } => Arc::new(MadicFrame::new(descriptor.clone(), set, side)?),
    })
}

pub(crate) const POWER_ITERATION_SEED: u64 = 0x05ee_d0ff_4a3e;
const POWER_ITERATION_MIN: usize = 64;
const POWER_ITERATION_MAX: usize = 20_000;

/// Largest singular value of `x -> analyze(x)` by power iteration on
/// `adjoint ∘ analyze` under the grid inner product.
pub fn power_iteration_norm<F: Frame + ?Sized>(frame: &F) -> f64 {
    let m = frame.grid_len();
    let w = 1.0 / m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut x: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut coeff = vec![0.0; frame.len()];
    let mut y = vec![0.0; m];
    let mut lambda = 0.0_f64;
    for it in 0..POWER_ITERATION_MAX {
        let norm = (grid::dot(&x, &x) * w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        frame.analyze_into(&x, &mut coeff);
        frame.adjoint_into(&coeff, &mut y);
        let rayleigh = grid::dot(&x, &y) * w;
        let done = it >= POWER_ITERATION_MIN && (rayleigh - lambda).abs() <= 1e-15 * rayleigh;
        lambda = rayleigh;
        if done {
            break;
        }
        std::mem::swap(&mut x, &mut y);
    }
    lambda.max(0.0).sqrt()
}

/// `‖s‖_{B^{-d/2}_{∞,∞}}`: the largest wavelet coefficient (father included)
/// over scales `0..max_scale`, using the default Daubechies family.
pub fn besov_norm_neg_half_d(s: &TorusSignal, max_scale: u32) -> Result<f64> {
    besov_norm_with(s, max_scale, DEFAULT_VANISHING_MOMENTS)
}

/// As [`besov_norm_neg_half_d`] with an explicit number of vanishing moments.
pub fn besov_norm_with(s: &TorusSignal, max_scale: u32, vanishing_moments: usize) -> Result<f64> {
    if (max_scale as usize) > s.side().ilog2() as usize {
        return Err(Error::UnderResolved(format!(
            "scale {max_scale} needs N >= 2^{max_scale}, grid has N = {}",
            s.side()
        )));
    }
    let frame = WaveletFrame::with_scales(vanishing_moments, s.dim(), s.side(), max_scale)?;
    Ok(frame.analyze(s)?.max_abs())
}

/// Supremum of the m-adic local means `|⟨φ_B, s⟩|` over `Ω_n`.
pub fn local_means_sup(s: &TorusSignal, frame: &FrameDescriptor, n: u64) -> Result<f64> {
    if !matches!(frame, FrameDescriptor::Madic { .. }) {
        return invalid("local means need an m-adic descriptor");
    }
    let f = build_frame(frame, s.dim(), n, s.side())?;
    Ok(f.analyze(s)?.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_n_examples() {
        let w = FrameDescriptor::wavelet(4);
        let s = omega_n(&w, 1, 8).unwrap();
        assert_eq!((s.scales, s.cardinality), (3, 8));
        let s = omega_n(&w, 2, 64).unwrap();
        assert_eq!((s.scales, s.cardinality), (3, 64));
        let m = FrameDescriptor::madic(2, 1);
        let s = omega_n(&m, 1, 4).unwrap();
        assert_eq!(
            (s.scales, s.offset_exponent, s.cardinality),
            (2, Some(2), 8)
        );
        assert!(omega_n(&w, 2, 3).is_err());
        assert!(omega_n(&m, 2, 3).is_err());
    }

    #[test]
    fn cardinality_bounds_hold_on_ladder() {
        for d in 1..=3usize {
            let w = FrameDescriptor::wavelet(4);
            let m = FrameDescriptor::madic(2, d);
            let gamma = f64::max(1.0, d as f64 / 2.0);
            for e in d as u32..=18 {
                let n = 1u64 << e;
                let s = omega_n(&w, d, n).unwrap();
                assert!(s.cardinality as f64 >= n as f64 / 2f64.powi(d as i32));
                assert!(s.cardinality <= n);
                let s = omega_n(&m, d, n).unwrap();
                let lo = (n as f64).powf(gamma);
                assert!(s.cardinality as f64 >= lo, "d={d} n={n}");
                // exact identity with the rounded-up offset exponent
                let r = s.offset_exponent.unwrap() as f64;
                assert_eq!(
                    s.cardinality as f64,
                    s.scales as f64 * 2f64.powf(d as f64 * r)
                );
                if d <= 2 && e as usize % d == 0 {
                    assert!(
                        s.cardinality as f64 <= lo * (n as f64).log2() * 1.0001,
                        "d={d} n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn regularity_rules() {
        assert!(FrameDescriptor::wavelet(1).validate(1).is_ok());
        assert!(FrameDescriptor::wavelet(1).validate(2).is_err());
        assert!(FrameDescriptor::wavelet(2).validate(3).is_ok());
        assert!(FrameDescriptor::Madic {
            base: 3,
            kernel: KernelSpec::default_for(1)
        }
        .validate(1)
        .is_err());
        assert!(FrameDescriptor::madic(2, 3).validate(3).is_ok());
    }

    #[test]
    fn descriptor_json() {
        let d = FrameDescriptor::madic(4, 2);
        let js = serde_json::to_string(&d).unwrap();
        let back: FrameDescriptor = serde_json::from_str(&js).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<FrameDescriptor>(
            r#"{"kind":"wavelet","vanishing_moments":2,"x":1}"#
        )
        .is_err());
    }
}
