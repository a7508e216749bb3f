use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::frames::{Frame, FrameIndex, WaveletFrame};
use crate::grid::{TorusSignal, TvFlavor, MAX_DIM};

/// Sign-flip perturbations `g0 + γ Σ ε_m ψ_m` over disjointly supported
/// wavelets `ψ_m` at one scale.
#[derive(Clone, Debug, Serialize)]
pub struct AssouadFamily {
    pub dim: usize,
    pub side: usize,
    pub scale: u32,
    pub gamma: f64,
    pub l_bound: f64,
    /// `(k, e)` of each atom.
    pub atoms: Vec<AtomId>,
    /// `ε` of each emitted signal, `+1` where bit `m` of the pattern number is set.
    pub patterns: Vec<Vec<i8>>,
    #[serde(skip)]
    pub signals: Vec<TorusSignal>,
    #[serde(skip)]
    g0: TorusSignal,
    #[serde(skip)]
    basis: Vec<TorusSignal>,
}

impl AssouadFamily {
    /// `g0 + γ Σ ε_m ψ_m` for an arbitrary sign pattern.
    pub fn signal(&self, eps: &[i8]) -> Result<TorusSignal> {
        if eps.len() != self.basis.len() || eps.iter().any(|e| e.abs() != 1) {
            return invalid(format!("need {} signs of ±1", self.basis.len()));
        }
        let mut v = self.g0.values().to_vec();
        for (atom, &e) in self.basis.iter().zip(eps) {
            let c = self.gamma * e as f64;
            v.iter_mut()
                .zip(atom.values())
                .for_each(|(x, a)| *x += c * a);
        }
        TorusSignal::new(self.dim, self.side, v)
    }

    /// Single-flip separation `γ ‖ψ_{j,k,e}‖_{L^q}` from the grid atom.
    pub fn separation(&self, q: f64) -> Result<f64> {
        Ok(self.gamma * self.basis[0].lq_norm(q)?)
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

/// Largest admissible amplitude at scale `j`.
///
/// The smaller of `(L/2) 2^{-jd/2}` and `(L/(2‖ψ‖_∞)) 2^{-jd/2}`, further
/// capped so that the sum of `S_j` atoms has sup at most `L/2` and BV
/// seminorm at most `L/2` on the grid.
pub fn balanced_gamma(
    dim: usize,
    side: usize,
    j: u32,
    l_bound: f64,
    vanishing_moments: usize,
) -> Result<f64> {
    let (atoms, _) = pick_atoms(dim, side, j, vanishing_moments)?;
    Ok(gamma_bound(dim, j, l_bound, &atoms))
}

fn gamma_bound(dim: usize, j: u32, l: f64, atoms: &[TorusSignal]) -> f64 {
    let scale = 2f64.powf(-(j as f64) * dim as f64 / 2.0);
    let sup_grid = atoms[0].sup_norm();
    let psi_sup = sup_grid * scale;
    let bv_total: f64 = atoms
        .iter()
        .map(|a| a.bv_seminorm(TvFlavor::Anisotropic))
        .sum();
    let mut g = (l / 2.0) * scale;
    g = g.min(l / (2.0 * psi_sup) * scale);
    g = g.min(l / (2.0 * sup_grid));
    if bv_total > 0.0 {
        g = g.min(l / (2.0 * bv_total));
    }
    g
}

type AtomId = ([u32; MAX_DIM], [u8; MAX_DIM]);

/// Number of atoms `S_j = ⌊2^{j(d-1)}⌋`.
pub(crate) fn atom_count(dim: usize, j: u32) -> usize {
    1usize << (j as usize * (dim - 1))
}

fn pick_atoms(
    dim: usize,
    side: usize,
    j: u32,
    vm: usize,
) -> Result<(Vec<TorusSignal>, Vec<AtomId>)> {
    if dim == 0 || dim > MAX_DIM {
        return invalid(format!("dimension must be in 1..={MAX_DIM}"));
    }
    if (j + 1) > side.ilog2() {
        return Err(Error::UnderResolved(format!(
            "scale {j} needs N >= 2^{}, grid has N = {side}",
            j + 1
        )));
    }
    let count = atom_count(dim, j);
    let spacing = 2 * vm as u32 - 1;
    let per_axis = (1u32 << j) / spacing;
    if (per_axis as usize).pow(dim as u32) < count {
        return Err(Error::UnderResolved(format!(
            "scale {j} holds {} disjoint atoms of support {spacing}, need {count}",
            (per_axis as usize).pow(dim as u32)
        )));
    }
    let frame = WaveletFrame::with_scales(vm, dim, side, j + 1)?;
    let mut e = [0u8; MAX_DIM];
    e[0] = 1;
    let mut picked = Vec::with_capacity(count);
    let mut ids = Vec::with_capacity(count);
    for m in 0..count {
        let mut k = [0u32; MAX_DIM];
        let mut rem = m as u32;
        for slot in k.iter_mut().take(dim) {
            *slot = (rem % per_axis) * spacing;
            rem /= per_axis;
        }
        let pos = frame
            .indices()
            .iter()
            .position(|i| *i == FrameIndex::Wavelet { j, k, e })
            .ok_or_else(|| Error::InvalidArgument(format!("no atom at scale {j}, offset {k:?}")))?;
        picked.push(frame.atom(pos));
        ids.push((k, e));
    }
    for a in 0..picked.len() {
        for b in a + 1..picked.len() {
            let overlap: f64 = picked[a]
                .values()
                .iter()
                .zip(picked[b].values())
                .map(|(x, y)| (x * y).abs())
                .sum();
            if overlap > 1e-12 {
                return invalid(format!("atoms {a} and {b} overlap"));
            }
        }
    }
    Ok((picked, ids))
}

/// Builds `count` members of the hard family around `g0`, which must satisfy
/// `‖g0‖_∞ ≤ L/2` and `|g0|_BV ≤ L/2`. Every signal is checked for
/// `‖·‖_∞ ≤ L` and `|·|_BV ≤ L`.
pub fn assouad_family(
    dim: usize,
    j: u32,
    gamma: f64,
    g0: &TorusSignal,
    count: usize,
    l_bound: f64,
    vanishing_moments: usize,
) -> Result<AssouadFamily> {
    if g0.dim() != dim {
        return Err(Error::ShapeMismatch(format!(
            "g0 has d = {}, family d = {dim}",
            g0.dim()
        )));
    }
    if !(gamma > 0.0 && l_bound > 0.0) {
        return invalid("gamma and L must be positive");
    }
    let side = g0.side();
    let half = l_bound / 2.0 * (1.0 + 1e-12);
    if g0.sup_norm() > half || g0.bv_seminorm(TvFlavor::Anisotropic) > half {
        return invalid("g0 must have sup and bv at most L/2");
    }
    let (basis, atoms) = pick_atoms(dim, side, j, vanishing_moments)?;
    let bound = gamma_bound(dim, j, l_bound, &basis);
    if gamma > bound * (1.0 + 1e-12) {
        return invalid(format!(
            "amplitude {gamma} exceeds the admissible {bound} at scale {j}"
        ));
    }
    let m = basis.len();
    if m < 64 && (count as u128) > (1u128 << m) {
        return invalid(format!("only {} sign patterns over {m} atoms", 1u128 << m));
    }
    let mut family = AssouadFamily {
        dim,
        side,
        scale: j,
        gamma,
        l_bound,
        atoms,
        patterns: Vec::with_capacity(count),
        signals: Vec::with_capacity(count),
        g0: g0.clone(),
        basis,
    };
    for i in 0..count {
        let eps: Vec<i8> = (0..m)
            .map(|b| if b < 64 && (i >> b) & 1 == 1 { 1 } else { -1 })
            .collect();
        let s = family.signal(&eps)?;
        let (sup, bv) = (s.sup_norm(), s.bv_seminorm(TvFlavor::Anisotropic));
        let tol = l_bound * (1.0 + 1e-12);
        if sup > tol || bv > tol {
            return invalid(format!(
                "pattern {i} has sup {sup} and bv {bv} above L = {l_bound}"
            ));
        }
        family.patterns.push(eps);
        family.signals.push(s);
    }
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_balanced_family_is_certified() {
        let g0 = TorusSignal::zeros(1, 256).unwrap();
        let gamma = balanced_gamma(1, 256, 3, 1.0, 4).unwrap();
        let fam = assouad_family(1, 3, gamma, &g0, 2, 1.0, 4).unwrap();
        assert_eq!(fam.len(), 1);
        for s in &fam.signals {
            assert!(s.sup_norm() <= 1.0 && s.bv_seminorm(TvFlavor::Anisotropic) <= 1.0);
        }
        assert!((fam.separation(2.0).unwrap() - gamma).abs() < 1e-12 * gamma);
        let d = fam.signals[0]
            .sub(&fam.signals[1])
            .unwrap()
            .lq_norm(2.0)
            .unwrap();
        assert!((d - 2.0 * gamma).abs() < 1e-12);
        assert!(assouad_family(1, 3, 2.0 * gamma, &g0, 2, 1.0, 4).is_err());
    }

    #[test]
    fn flips_are_equidistant() {
        let g0 = TorusSignal::constant(2, 128, 0.1).unwrap();
        let gamma = balanced_gamma(2, 128, 4, 1.0, 2).unwrap();
        let fam = assouad_family(2, 4, gamma, &g0, 8, 1.0, 2).unwrap();
        assert_eq!(fam.len(), 16);
        for a in 0..8 {
            for b in 0..8 {
                let flips = fam.patterns[a]
                    .iter()
                    .zip(&fam.patterns[b])
                    .filter(|(x, y)| x != y)
                    .count() as f64;
                let d = fam.signals[a]
                    .sub(&fam.signals[b])
                    .unwrap()
                    .lq_norm(2.0)
                    .unwrap();
                assert!(
                    (d * d - flips * 4.0 * gamma * gamma).abs() < 1e-12,
                    "{a} {b}"
                );
                if flips > 0.0 {
                    assert!(
                        fam.signals[a]
                            .sub(&fam.signals[b])
                            .unwrap()
                            .lq_norm(3.0)
                            .unwrap()
                            >= fam.separation(3.0).unwrap() * (1.0 - 1e-12)
                    );
                }
            }
        }
    }

    #[test]
    fn rejections() {
        let big = TorusSignal::constant(1, 64, 0.9).unwrap();
        assert!(assouad_family(1, 2, 1e-3, &big, 1, 1.0, 2).is_err());
        let g0 = TorusSignal::zeros(1, 8).unwrap();
        assert!(assouad_family(1, 3, 1e-3, &g0, 1, 1.0, 2).is_err());
        let g0 = TorusSignal::zeros(2, 32).unwrap();
        assert!(assouad_family(2, 2, 1e-3, &g0, 1, 1.0, 4).is_err());
    }
}
