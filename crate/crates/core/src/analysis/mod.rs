//! Monte Carlo risk, rate fitting and the inequality diagnostics.

mod assouad;
mod diagnostics;
mod plot;
mod risk;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Result};

pub use assouad::{assouad_family, balanced_gamma, AssouadFamily};
pub use diagnostics::{
    check_interpolation, interpolation_corpus, jackson_check, wavelet_l1_constant,
    InterpolationCorpus, InterpolationReport, JacksonReport,
};
pub use plot::risk_plot_svg;
pub use risk::{
    estimate_risk, estimate_risk_all, grid_side, Estimator, ExperimentSpec, RiskReport, RiskRow,
    CSV_HEADER as RISK_CSV_HEADER, MAX_EXCLUDED_FRACTION,
};

/// Significance level of the curvature test in [`fit_rate_checked`].
pub const CURVATURE_LEVEL: f64 = 0.05;

/// Exponent `-min{1/(d+2), 1/(dq)}` of the minimax rate over `BV_L`.
pub fn target_exponent(dim: usize, q: f64) -> Result<f64> {
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(q >= 1.0) {
        return invalid(format!("q must be at least 1, got {q}"));
    }
    let d = dim as f64;
    Ok(-f64::min(1.0 / (d + 2.0), 1.0 / (d * q)))
}

/// `q` at which the two branches of [`target_exponent`] meet.
pub fn phase_boundary(dim: usize) -> f64 {
    1.0 + 2.0 / dim as f64
}

/// Least-squares line through `(log n, log risk)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits `log risk = intercept + slope · log n` by ordinary least squares.
pub fn fit_rate(ladder: &[(f64, f64)]) -> Result<RateFit> {
    if ladder.len() < 3 {
        return invalid(format!(
            "rate fit needs at least 3 points, got {}",
            ladder.len()
        ));
    }
    if ladder
        .iter()
        .any(|(n, r)| !(*n > 0.0 && *r > 0.0 && n.is_finite() && r.is_finite()))
    {
        return invalid("rate fit needs positive finite n and risks");
    }
    let m = ladder.len() as f64;
    let xs: Vec<f64> = ladder.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = ladder.iter().map(|(_, r)| r.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return invalid("rate fit needs at least two distinct n");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (rss / (m - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        stderr,
        intercept,
        points: ladder.len(),
    })
}

/// Rate fit with a pre-asymptotic curvature check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckedFit {
    pub full: RateFit,
    /// Two-sided p-value of the quadratic term in `log n`; `None` below 4 points.
    pub curvature_p: Option<f64>,
    /// Refit without the smallest `n`, present when the curvature test fires.
    pub trimmed: Option<RateFit>,
}

impl CheckedFit {
    /// The fit to compare against the target: trimmed when present.
    pub fn preferred(&self) -> &RateFit {
        self.trimmed.as_ref().unwrap_or(&self.full)
    }
}

/// [`fit_rate`] plus a quadratic-term t-test; when it is significant at
/// [`CURVATURE_LEVEL`] and at least 3 points remain, the smallest `n` is
/// dropped and the line refitted. Both fits are reported.
pub fn fit_rate_checked(ladder: &[(f64, f64)]) -> Result<CheckedFit> {
    let full = fit_rate(ladder)?;
    let curvature_p = curvature_p_value(ladder);
    let mut trimmed = None;
    if curvature_p.is_some_and(|p| p < CURVATURE_LEVEL) && ladder.len() > 3 {
        let mut sorted = ladder.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        trimmed = Some(fit_rate(&sorted[1..])?);
    }
    Ok(CheckedFit {
        full,
        curvature_p,
        trimmed,
    })
}

fn curvature_p_value(ladder: &[(f64, f64)]) -> Option<f64> {
    let m = ladder.len();
    if m < 4 {
        return None;
    }
    let xs: Vec<f64> = ladder.iter().map(|(n, _)| n.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m as f64;
    let rows: Vec<[f64; 3]> = xs.iter().map(|x| [1.0, x - mx, (x - mx).powi(2)]).collect();
    let ys: Vec<f64> = ladder.iter().map(|(_, r)| r.ln()).collect();
    let mut xtx = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    for (r, y) in rows.iter().zip(&ys) {
        for i in 0..3 {
            xty[i] += r[i] * y;
            for j in 0..3 {
                xtx[i][j] += r[i] * r[j];
            }
        }
    }
    let inv = invert3(&xtx)?;
    let beta: Vec<f64> = (0..3)
        .map(|i| (0..3).map(|j| inv[i][j] * xty[j]).sum())
        .collect();
    let rss: f64 = rows
        .iter()
        .zip(&ys)
        .map(|(r, y)| (y - (0..3).map(|i| r[i] * beta[i]).sum::<f64>()).powi(2))
        .sum();
    let dof = (m - 3) as f64;
    let se = (rss / dof * inv[2][2]).sqrt();
    if !(se > 0.0) {
        return Some(if beta[2].abs() > 0.0 { 0.0 } else { 1.0 });
    }
    let t = StudentsT::new(0.0, 1.0, dof).ok()?;
    Some(2.0 * (1.0 - t.cdf((beta[2] / se).abs())))
}

fn invert3(a: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ([1, 0, 0][j], [2, 2, 1][j]);
            let (c0, c1) = ([1, 0, 0][i], [2, 2, 1][i]);
            let minor = a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[i][j] = sign * minor / det;
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_table() {
        assert!((target_exponent(1, 2.0).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!((target_exponent(2, 2.0).unwrap() + 0.25).abs() < 1e-15);
        assert!((target_exponent(3, 2.0).unwrap() + 1.0 / 6.0).abs() < 1e-15);
        assert!(target_exponent(1, 0.5).is_err());
        assert!(target_exponent(0, 2.0).is_err());
        for d in 1..=3 {
            let qb = phase_boundary(d);
            let left = target_exponent(d, qb - 1e-9).unwrap();
            let right = target_exponent(d, qb + 1e-9).unwrap();
            assert!((left - right).abs() < 1e-8);
            assert_eq!(target_exponent(d, 1.0).unwrap(), -1.0 / (d as f64 + 2.0));
        }
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = (10..17)
            .map(|e| (2f64.powi(e), 3.0 * 2f64.powf(-e as f64 / 3.0)))
            .collect();
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.slope + 1.0 / 3.0).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
        let flat: Vec<(f64, f64)> = pts.iter().map(|(n, _)| (*n, 0.7)).collect();
        assert!(fit_rate(&flat).unwrap().slope.abs() < 1e-15);
        let scaled: Vec<(f64, f64)> = pts.iter().map(|(n, r)| (*n, 5.0 * r)).collect();
        assert!((fit_rate(&scaled).unwrap().slope - fit.slope).abs() < 1e-12);
    }

    #[test]
    fn perturbed_power_law() {
        let pts: Vec<(f64, f64)> = (0..7)
            .map(|i| {
                let n = 2f64.powi(10 + i);
                let wiggle = if i % 2 == 0 { 1.01 } else { 0.99 };
                (n, n.powf(-0.25) * wiggle)
            })
            .collect();
        assert!((fit_rate(&pts).unwrap().slope + 0.25).abs() < 0.005);
    }

    #[test]
    fn degenerate_ladders_rejected() {
        assert!(fit_rate(&[(2.0, 1.0), (4.0, 1.0)]).is_err());
        assert!(fit_rate(&[(2.0, 1.0), (2.0, 0.5), (2.0, 0.2)]).is_err());
        assert!(fit_rate(&[(2.0, 1.0), (4.0, 0.0), (8.0, 0.2)]).is_err());
    }

    #[test]
    fn curvature_trims_smallest_point() {
        // log-factor contamination: strongly bent at the small end
        let pts: Vec<(f64, f64)> = (0..7)
            .map(|i| {
                let n = 2f64.powi(8 + 2 * i);
                (n, n.powf(-1.0 / 3.0) * n.ln().powi(3))
            })
            .collect();
        let fit = fit_rate_checked(&pts).unwrap();
        assert!(fit.curvature_p.unwrap() < CURVATURE_LEVEL);
        assert_eq!(fit.trimmed.unwrap().points, 6);
        let straight: Vec<(f64, f64)> = (0..6)
            .map(|i| (2f64.powi(i + 4), 2f64.powf(-(i as f64 + 4.0) / 4.0)))
            .collect();
        let fit = fit_rate_checked(&straight).unwrap();
        assert!(fit.trimmed.is_none());
    }
}
