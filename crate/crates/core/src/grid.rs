//! Periodic grid signals on the d-torus.
//!
//! A [`TorusSignal`] stores `N^d` samples in row-major order; cell `i` carries
//! the value at `x_i = i / N`. Integrals use the Riemann rule with weight
//! `N^{-d}` per cell, so the constant function 1 has unit `L^q` norm for every
//! `q` and the grid inner product approximates the `L^2(T^d)` pairing.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const MAX_DIM: usize = 3;

/// Real values on an `N^d` periodic grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSignal {
    dim: usize,
    side: usize,
    values: Vec<f64>,
}

/// Pointwise vector norm used by the discrete total variation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvFlavor {
    /// Sum of per-axis absolute differences.
    #[default]
    Anisotropic,
    /// Euclidean norm of the difference vector per cell.
    Isotropic,
}

pub(crate) fn check_shape(dim: usize, side: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return invalid(format!("dimension must be in 1..={MAX_DIM}, got {dim}"));
    }
    if side == 0 || !side.is_power_of_two() {
        return invalid(format!("grid side must be a power of two, got {side}"));
    }
    if side.checked_pow(dim as u32).is_none() {
        return invalid("grid too large");
    }
    Ok(())
}

impl TorusSignal {
    pub fn new(dim: usize, side: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(dim, side)?;
        let len = side.pow(dim as u32);
        if values.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "expected {len} values for d={dim}, N={side}, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value at cell {i}"));
        }
        Ok(Self { dim, side, values })
    }

    pub fn zeros(dim: usize, side: usize) -> Result<Self> {
        Self::constant(dim, side, 0.0)
    }

    pub fn constant(dim: usize, side: usize, c: f64) -> Result<Self> {
        check_shape(dim, side)?;
        Self::new(dim, side, vec![c; side.pow(dim as u32)])
    }

    /// Samples `f` at the cell points `x_i = i / N`.
    pub fn from_fn(dim: usize, side: usize, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        check_shape(dim, side)?;
        let len = side.pow(dim as u32);
        let mut x = vec![0.0; dim];
        let mut values = Vec::with_capacity(len);
        for flat in 0..len {
            let mut rem = flat;
            for a in (0..dim).rev() {
                x[a] = (rem % side) as f64 / side as f64;
                rem /= side;
            }
            values.push(f(&x));
        }
        Self::new(dim, side, values)
    }

    /// Internal constructor for values already known to be finite and well shaped.
    pub(crate) fn from_parts(dim: usize, side: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), side.pow(dim as u32));
        Self { dim, side, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Grid spacing `h = 1/N`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.side as f64
    }

    /// Riemann weight `N^{-d}` of one cell.
    pub fn cell_weight(&self) -> f64 {
        1.0 / self.values.len() as f64
    }

    pub fn same_shape(&self, other: &TorusSignal) -> bool {
        self.dim == other.dim && self.side == other.side
    }

    fn require_same_shape(&self, other: &TorusSignal) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "(d={}, N={}) vs (d={}, N={})",
                self.dim, self.side, other.dim, other.side
            )))
        }
    }

    pub fn sub(&self, other: &TorusSignal) -> Result<TorusSignal> {
        self.require_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_parts(self.dim, self.side, values))
    }

    pub fn add(&self, other: &TorusSignal) -> Result<TorusSignal> {
        self.require_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_parts(self.dim, self.side, values))
    }

    pub fn scaled(&self, alpha: f64) -> TorusSignal {
        let values = self.values.iter().map(|v| alpha * v).collect();
        Self::from_parts(self.dim, self.side, values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Grid inner product `N^{-d} Σ u_i v_i`.
    pub fn inner(&self, other: &TorusSignal) -> Result<f64> {
        self.require_same_shape(other)?;
        Ok(dot(&self.values, &other.values) * self.cell_weight())
    }

    /// Discrete `L^q` norm; `q = f64::INFINITY` gives the maximum modulus.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        lq_norm(self, q)
    }

    pub fn bv_seminorm(&self, flavor: TvFlavor) -> f64 {
        bv_seminorm(self, flavor)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(N^{-d} Σ |u_i|^q)^{1/q}`, or `max |u_i|` for `q = ∞`.
pub fn lq_norm(s: &TorusSignal, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return invalid(format!("L^q norm needs q >= 1, got {q}"));
    }
    let w = s.cell_weight();
    let v = &s.values;
    let norm = if q.is_infinite() {
        s.sup_norm()
    } else if q == 1.0 {
        v.iter().map(|x| x.abs()).sum::<f64>() * w
    } else if q == 2.0 {
        (dot(v, v) * w).sqrt()
    } else {
        // scale by the max to keep |u|^q in range for large q
        let m = s.sup_norm();
        if m == 0.0 {
            0.0
        } else {
            let acc: f64 = v.iter().map(|x| (x.abs() / m).powf(q)).sum();
            m * (acc * w).powf(1.0 / q)
        }
    };
    Ok(norm)
}

/// Discrete total variation `h^{d-1} Σ_i |D u_i|` with periodic forward differences.
pub fn bv_seminorm(s: &TorusSignal, flavor: TvFlavor) -> f64 {
    let (d, n) = (s.dim, s.side);
    let h_pow = (1.0 / n as f64).powi(d as i32 - 1);
    let u = &s.values;
    match flavor {
        TvFlavor::Anisotropic => {
            let mut acc = 0.0;
            for a in 0..d {
                let stride = n.pow((d - 1 - a) as u32);
                for (i, ui) in u.iter().enumerate() {
                    acc += (u[neighbor(i, stride, n)] - ui).abs();
                }
            }
            h_pow * acc
        }
        TvFlavor::Isotropic => {
            let strides: Vec<usize> = (0..d).map(|a| n.pow((d - 1 - a) as u32)).collect();
            let mut acc = 0.0;
            for (i, ui) in u.iter().enumerate() {
                let sq: f64 = strides
                    .iter()
                    .map(|&st| {
                        let diff = u[neighbor(i, st, n)] - ui;
                        diff * diff
                    })
                    .sum();
                acc += sq.sqrt();
            }
            h_pow * acc
        }
    }
}

#[inline]
pub(crate) fn neighbor(i: usize, stride: usize, side: usize) -> usize {
    if (i / stride) % side == side - 1 {
        i + stride - side * stride
    } else {
        i + stride
    }
}

#[inline]
pub(crate) fn prev_neighbor(i: usize, stride: usize, side: usize) -> usize {
    if (i / stride) % side == 0 {
        i + side * stride - stride
    } else {
        i - stride
    }
}

/// `d` stacked grid-shaped arrays, component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    dim: usize,
    side: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn new(dim: usize, side: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(dim, side)?;
        let expect = dim * side.pow(dim as u32);
        if data.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "vector field needs {expect} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dim, side, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        let m = self.side.pow(self.dim as u32);
        &self.data[axis * m..(axis + 1) * m]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Grid inner product `N^{-d} Σ_a Σ_i p_a[i] q_a[i]`.
    pub fn inner(&self, other: &VectorField) -> Result<f64> {
        if self.dim != other.dim || self.side != other.side {
            return Err(Error::ShapeMismatch("vector fields differ in shape".into()));
        }
        Ok(dot(&self.data, &other.data) / self.side.pow(self.dim as u32) as f64)
    }
}

/// Forward difference quotients `N (u[i + e_a] - u[i])` with periodic wrap.
pub fn gradient(s: &TorusSignal) -> VectorField {
    let mut data = vec![0.0; s.dim * s.len()];
    gradient_into(s.dim, s.side, &s.values, &mut data);
    VectorField {
        dim: s.dim,
        side: s.side,
        data,
    }
}

/// Negative adjoint of [`gradient`] under the grid inner product.
pub fn divergence(p: &VectorField) -> TorusSignal {
    let m = p.side.pow(p.dim as u32);
    let mut out = vec![0.0; m];
    divergence_into(p.dim, p.side, &p.data, &mut out);
    TorusSignal::from_parts(p.dim, p.side, out)
}

/// Checked variant of [`divergence`] for callers holding a signal shape.
pub fn divergence_checked(p: &VectorField, like: &TorusSignal) -> Result<TorusSignal> {
    if p.dim != like.dim || p.side != like.side {
        return Err(Error::ShapeMismatch(format!(
            "field (d={}, N={}) vs signal (d={}, N={})",
            p.dim, p.side, like.dim, like.side
        )));
    }
    Ok(divergence(p))
}

pub(crate) fn gradient_into(dim: usize, side: usize, u: &[f64], out: &mut [f64]) {
    let m = u.len();
    let scale = side as f64;
    for a in 0..dim {
        let stride = side.pow((dim - 1 - a) as u32);
        let comp = &mut out[a * m..(a + 1) * m];
        for (i, g) in comp.iter_mut().enumerate() {
            *g = scale * (u[neighbor(i, stride, side)] - u[i]);
        }
    }
}

pub(crate) fn divergence_into(dim: usize, side: usize, p: &[f64], out: &mut [f64]) {
    let m = out.len();
    let scale = side as f64;
    out.iter_mut().for_each(|v| *v = 0.0);
    for a in 0..dim {
        let stride = side.pow((dim - 1 - a) as u32);
        let comp = &p[a * m..(a + 1) * m];
        for (i, o) in out.iter_mut().enumerate() {
            *o += scale * (comp[i] - comp[prev_neighbor(i, stride, side)]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(rng: &mut ChaCha8Rng, d: usize, n: usize) -> TorusSignal {
        let m = n.pow(d as u32);
        TorusSignal::new(d, n, (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TorusSignal::new(1, 6, vec![0.0; 6]).is_err());
        assert!(TorusSignal::new(4, 2, vec![0.0; 16]).is_err());
        assert!(TorusSignal::new(1, 4, vec![0.0; 3]).is_err());
        assert!(TorusSignal::new(1, 4, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn lq_norm_examples() {
        let c = TorusSignal::constant(2, 8, -3.5).unwrap();
        assert_eq!(c.lq_norm(2.0).unwrap(), 3.5);
        let s = TorusSignal::new(1, 4, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.lq_norm(1.0).unwrap(), 0.25);
        assert_eq!(s.lq_norm(f64::INFINITY).unwrap(), 1.0);
        assert!(s.lq_norm(0.5).is_err());
    }

    #[test]
    fn lq_norm_monotone_in_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_signal(&mut rng, 2, 16);
        let qs = [1.0, 1.5, 2.0, 3.0, 8.0, 64.0, f64::INFINITY];
        let norms: Vec<f64> = qs.iter().map(|&q| s.lq_norm(q).unwrap()).collect();
        for w in norms.windows(2) {
            assert!(w[0] <= w[1] * (1.0 + 1e-14), "{norms:?}");
        }
    }

    #[test]
    fn bv_examples() {
        let c = TorusSignal::constant(2, 16, 2.0).unwrap();
        assert_eq!(c.bv_seminorm(TvFlavor::Anisotropic), 0.0);
        let mut v = vec![0.0; 8];
        v[2..5].iter_mut().for_each(|x| *x = 1.0);
        let s = TorusSignal::new(1, 8, v).unwrap();
        assert_eq!(s.bv_seminorm(TvFlavor::Anisotropic), 2.0);
        let sq = TorusSignal::from_fn(2, 64, |x| {
            let inside = |t: f64| (0.25..0.5).contains(&t);
            if inside(x[0]) && inside(x[1]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert_eq!(sq.bv_seminorm(TvFlavor::Anisotropic), 1.0);
    }

    #[test]
    fn flavors_are_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..=3 {
            let s = random_signal(&mut rng, d, 8);
            let an = s.bv_seminorm(TvFlavor::Anisotropic);
            let iso = s.bv_seminorm(TvFlavor::Isotropic);
            assert!(an >= iso * (1.0 - 1e-14));
            assert!(iso >= an / (d as f64).sqrt() * (1.0 - 1e-14));
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let c = TorusSignal::constant(3, 4, 7.0).unwrap();
        assert!(gradient(&c).data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn divergence_is_negative_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let u = random_signal(&mut rng, 2, 32);
            let p = VectorField::new(
                2,
                32,
                (0..2 * 1024).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let lhs = gradient(&u).inner(&p).unwrap();
            let rhs = -u.inner(&divergence(&p)).unwrap();
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn laplacian_eigenrelation() {
        // div grad of cos(2πkx) equals -4 N^2 sin^2(πk/N) times the same mode
        let n = 64;
        let k = 5.0;
        let u =
            TorusSignal::from_fn(1, n, |x| (2.0 * std::f64::consts::PI * k * x[0]).cos()).unwrap();
        let lap = divergence(&gradient(&u));
        let lambda =
            -4.0 * (n as f64).powi(2) * (std::f64::consts::PI * k / n as f64).sin().powi(2);
        for (l, v) in lap.values().iter().zip(u.values()) {
            assert!((l - lambda * v).abs() < 1e-9 * lambda.abs());
        }
    }

    #[test]
    fn divergence_shape_mismatch() {
        let p = VectorField::new(1, 8, vec![0.0; 8]).unwrap();
        let s = TorusSignal::zeros(1, 16).unwrap();
        assert!(divergence_checked(&p, &s).is_err());
        assert!(VectorField::new(2, 8, vec![0.0; 64]).is_err());
    }

    proptest! {
        #[test]
        fn l2_squared_is_self_inner(vals in proptest::collection::vec(-10.0f64..10.0, 64)) {
            let s = TorusSignal::new(2, 8, vals).unwrap();
            let n2 = s.lq_norm(2.0).unwrap().powi(2);
            let ip = s.inner(&s).unwrap();
            prop_assert!((n2 - ip).abs() <= 1e-12 * ip.max(1e-300));
        }

        #[test]
        fn bv_is_homogeneous_and_subadditive(
            a in proptest::collection::vec(-5.0f64..5.0, 32),
            b in proptest::collection::vec(-5.0f64..5.0, 32),
            alpha in -4.0f64..4.0,
        ) {
            let u = TorusSignal::new(1, 32, a).unwrap();
            let v = TorusSignal::new(1, 32, b).unwrap();
            for fl in [TvFlavor::Anisotropic, TvFlavor::Isotropic] {
                let bu = u.bv_seminorm(fl);
                let scaled = u.scaled(alpha).bv_seminorm(fl);
                prop_assert!((scaled - alpha.abs() * bu).abs() <= 1e-12 * (1.0 + bu));
                let sum = u.add(&v).unwrap().bv_seminorm(fl);
                prop_assert!(sum <= bu + v.bv_seminorm(fl) + 1e-12);
            }
        }
    }
}
