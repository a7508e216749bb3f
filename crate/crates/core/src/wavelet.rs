//! Periodized orthonormal Daubechies filter banks and the separable
//! multi-level transform on `N^d` grids.
//!
//! After a full decomposition the coefficient of `ψ_{j,k,e}` sits at the
//! array position with per-axis index `e_a 2^j + k_a`; the father coefficient
//! is at the origin. The scales `j < J` therefore occupy the corner block
//! `[0, 2^J)^d`.

use crate::error::{invalid, Result};

/// Daubechies reconstruction low-pass filters, 1..=8 vanishing moments.
const DB_FILTERS: [&[f64]; 8] = [
    &[
        std::f64::consts::FRAC_1_SQRT_2,
        std::f64::consts::FRAC_1_SQRT_2,
    ],
    &[
        0.48296291314453416,
        0.8365163037378079,
        0.2241438680420134,
        -0.12940952255126037,
    ],
    &[
        0.33267055295008263,
        0.8068915093110925,
        0.45987750211849154,
        -0.13501102001025458,
        -0.08544127388202666,
        0.03522629188570953,
    ],
    &[
        0.2303778133088965,
        0.7148465705529157,
        0.6308807679298589,
        -0.027983769416859854,
        -0.18703481171909309,
        0.030841381835560764,
        0.0328830116668852,
        -0.010597401785069032,
    ],
    &[
        0.16010239797419293,
        0.6038292697971896,
        0.7243085284377729,
        0.13842814590132074,
        -0.24229488706638203,
        -0.032244869584638375,
        0.07757149384004572,
        -0.006241490212798274,
        -0.012580751999081999,
        0.0033357252854737712,
    ],
    &[
        0.11154074335010947,
        0.49462389039845306,
        0.7511339080210954,
        0.31525035170919763,
        -0.22626469396543983,
        -0.12976686756726194,
        0.09750160558732304,
        0.027522865530305727,
        -0.03158203931748603,
        0.0005538422011614961,
        0.004777257510945511,
        -0.0010773010853084796,
    ],
    &[
        0.07785205408500918,
        0.3965393194819173,
        0.7291320908462351,
        0.4697822874051931,
        -0.14390600392856498,
        -0.22403618499387498,
        0.07130921926683026,
        0.08061260915108308,
        -0.03802993693501441,
        -0.01657454163066688,
        0.01255099855609984,
        0.0004295779729213665,
        -0.0018016407040474908,
        0.00035371379997452024,
    ],
    &[
        0.05441584224310401,
        0.31287159091429995,
        0.6756307362972898,
        0.5853546836542067,
        -0.015829105256349306,
        -0.2840155429615469,
        0.0004724845739132828,
        0.12874742662047847,
        -0.017369301001807547,
        -0.044088253930794755,
        0.013981027917398282,
        0.008746094047405777,
        -0.004870352993451574,
        -0.00039174037337694705,
        0.0006754494064505693,
        -0.00011747678412476953,
    ],
];

pub const MAX_VANISHING_MOMENTS: usize = DB_FILTERS.len();

/// Quadrature-mirror pair for one Daubechies family.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    vanishing_moments: usize,
    low: Vec<f64>,
    high: Vec<f64>,
}

impl FilterBank {
    pub fn daubechies(vanishing_moments: usize) -> Result<Self> {
        if vanishing_moments == 0 || vanishing_moments > MAX_VANISHING_MOMENTS {
            return invalid(format!(
                "Daubechies filters available for 1..={MAX_VANISHING_MOMENTS} vanishing moments, got {vanishing_moments}"
            ));
        }
        let low = DB_FILTERS[vanishing_moments - 1].to_vec();
        let len = low.len();
        let high = (0..len)
            .map(|k| {
                if k % 2 == 0 {
                    low[len - 1 - k]
                } else {
                    -low[len - 1 - k]
                }
            })
            .collect();
        Ok(Self {
            vanishing_moments,
            low,
            high,
        })
    }

    pub fn vanishing_moments(&self) -> usize {
        self.vanishing_moments
    }

    pub fn taps(&self) -> usize {
        self.low.len()
    }

    /// One periodized analysis step on a strided line of even length `len`.
    fn analyze_line(
        &self,
        data: &mut [f64],
        start: usize,
        stride: usize,
        len: usize,
        buf: &mut Vec<f64>,
    ) {
        let half = len / 2;
        let taps = self.low.len();
        buf.clear();
        buf.extend((0..len + taps).map(|t| data[start + (t % len) * stride]));
        let (lo, hi) = (&self.low, &self.high);
        for i in 0..half {
            let x = &buf[2 * i..2 * i + taps];
            let (mut a, mut d) = (0.0, 0.0);
            for k in 0..taps {
                a += lo[k] * x[k];
                d += hi[k] * x[k];
            }
            data[start + i * stride] = a;
            data[start + (half + i) * stride] = d;
        }
    }

    /// Transpose of [`Self::analyze_line`].
    fn synthesize_line(
        &self,
        data: &mut [f64],
        start: usize,
        stride: usize,
        len: usize,
        buf: &mut Vec<f64>,
    ) {
        let half = len / 2;
        let taps = self.low.len();
        buf.clear();
        buf.resize(len + taps, 0.0);
        let (lo, hi) = (&self.low, &self.high);
        for i in 0..half {
            let a = data[start + i * stride];
            let d = data[start + (half + i) * stride];
            let out = &mut buf[2 * i..2 * i + taps];
            for k in 0..taps {
                out[k] += lo[k] * a + hi[k] * d;
            }
        }
        for t in len..len + taps {
            buf[t % len] += buf[t];
        }
        for (i, v) in buf[..len].iter().enumerate() {
            data[start + i * stride] = *v;
        }
    }
}

/// Full separable decomposition of an `N^d` array in place (Euclidean-orthonormal).
pub(crate) fn forward(bank: &FilterBank, dim: usize, side: usize, data: &mut [f64]) {
    let mut buf = Vec::with_capacity(side);
    let mut size = side;
    while size >= 2 {
        for_each_line(dim, side, size, |start, stride| {
            bank.analyze_line(data, start, stride, size, &mut buf)
        });
        size /= 2;
    }
}

/// Inverse of [`forward`] (its transpose).
pub(crate) fn inverse(bank: &FilterBank, dim: usize, side: usize, data: &mut [f64]) {
    inverse_from(bank, dim, side, data, 1);
}

/// Synthesis starting at block size `from` (coefficients outside `[0, from)^d`
/// at coarser levels are ignored). Used to skip work when only coarse
/// coefficients are nonzero.
pub(crate) fn inverse_from(
    bank: &FilterBank,
    dim: usize,
    side: usize,
    data: &mut [f64],
    from: usize,
) {
    let mut buf = Vec::with_capacity(side);
    let mut size = from.max(1) * 2;
    while size <= side {
        for_each_line_rev(dim, side, size, |start, stride| {
            bank.synthesize_line(data, start, stride, size, &mut buf)
        });
        size *= 2;
    }
}

/// Visits every axis-aligned line of the `[0,size)^d` block, axis by axis.
fn for_each_line(dim: usize, side: usize, size: usize, mut f: impl FnMut(usize, usize)) {
    for axis in 0..dim {
        visit_axis(dim, side, size, axis, &mut f);
    }
}

fn for_each_line_rev(dim: usize, side: usize, size: usize, mut f: impl FnMut(usize, usize)) {
    for axis in (0..dim).rev() {
        visit_axis(dim, side, size, axis, &mut f);
    }
}

fn visit_axis(dim: usize, side: usize, size: usize, axis: usize, f: &mut impl FnMut(usize, usize)) {
    let stride = side.pow((dim - 1 - axis) as u32);
    let others: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
    let count = size.pow(others.len() as u32);
    for c in 0..count {
        let mut rem = c;
        let mut start = 0;
        for &a in others.iter().rev() {
            start += (rem % size) * side.pow((dim - 1 - a) as u32);
            rem /= size;
        }
        f(start, stride);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn filters_are_orthonormal() {
        for s in 1..=MAX_VANISHING_MOMENTS {
            let bank = FilterBank::daubechies(s).unwrap();
            let h = &bank.low;
            for shift in (0..h.len()).step_by(2) {
                let acc: f64 = (0..h.len() - shift).map(|k| h[k] * h[k + shift]).sum();
                let expect = if shift == 0 { 1.0 } else { 0.0 };
                assert!((acc - expect).abs() < 1e-14, "db{s} shift {shift}: {acc}");
            }
            let sum: f64 = h.iter().sum();
            assert!((sum - std::f64::consts::SQRT_2).abs() < 1e-14);
        }
        assert!(FilterBank::daubechies(0).is_err());
        assert!(FilterBank::daubechies(9).is_err());
    }

    #[test]
    fn high_pass_kills_polynomials() {
        for s in 1..=MAX_VANISHING_MOMENTS {
            let bank = FilterBank::daubechies(s).unwrap();
            for p in 0..s {
                let m: f64 = bank
                    .high
                    .iter()
                    .enumerate()
                    .map(|(k, g)| g * (k as f64).powi(p as i32))
                    .sum();
                let scale: f64 = bank
                    .high
                    .iter()
                    .enumerate()
                    .map(|(k, g)| (g * (k as f64).powi(p as i32)).abs())
                    .sum();
                assert!(m.abs() < 1e-9 * scale.max(1.0), "db{s} moment {p}: {m}");
            }
        }
    }

    #[test]
    fn roundtrip_and_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (dim, side) in [(1usize, 64usize), (2, 16), (3, 8)] {
            for s in [1, 2, 4, 8] {
                let bank = FilterBank::daubechies(s).unwrap();
                let x: Vec<f64> = (0..side.pow(dim as u32))
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                let mut y = x.clone();
                forward(&bank, dim, side, &mut y);
                let ex: f64 = x.iter().map(|v| v * v).sum();
                let ey: f64 = y.iter().map(|v| v * v).sum();
                assert!((ex - ey).abs() < 1e-12 * ex);
                inverse(&bank, dim, side, &mut y);
                let err = x
                    .iter()
                    .zip(&y)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(err < 1e-12, "d={dim} db{s}: {err}");
            }
        }
    }
}
