//! Gaussian white-noise observations on the grid.
//!
//! Pixel noise with standard deviation `σ sqrt(N^d / n)` is the grid version
//! of `(σ/√n) dW`: analyzing it against any unit-norm atom gives a
//! `N(0, σ²/n)` coefficient, and the joint law of the coefficients is that of
//! the projected white noise for every frame, correlated or not.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frames::{build_frame, CoefficientVector, Frame, FrameDescriptor};
use crate::grid::TorusSignal;
use crate::wavelet::{self, FilterBank};

pub const RNG_ID: &str = "chacha8-boxmuller";

/// Noise level and generator key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma: f64,
    /// Effective sample size; `n = N^d` couples one sample per cell.
    pub n: u64,
    pub seed: u64,
    #[serde(default = "default_rng")]
    pub rng: String,
}

fn default_rng() -> String {
    RNG_ID.to_string()
}

impl NoiseSpec {
    pub fn new(sigma: f64, n: u64, seed: u64) -> Self {
        Self {
            sigma,
            n,
            seed,
            rng: default_rng(),
        }
    }

    /// Pixel standard deviation `σ sqrt(N^d / n)` on a grid with `cells` cells.
    pub fn pixel_sd(&self, cells: usize) -> f64 {
        self.sigma * (cells as f64 / self.n as f64).sqrt()
    }

    /// Standard deviation `σ/√n` of every coefficient noise.
    pub fn coefficient_sd(&self) -> f64 {
        self.sigma / (self.n as f64).sqrt()
    }

    fn validate(&self, cells: usize) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return invalid(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.n == 0 {
            return invalid("n must be positive");
        }
        if self.n > cells as u64 {
            return invalid(format!(
                "n = {} exceeds the {cells} grid cells; the grid cannot carry this information level",
                self.n
            ));
        }
        if self.rng != RNG_ID {
            return invalid(format!("unknown generator `{}`", self.rng));
        }
        Ok(())
    }
}

/// Universal threshold `γ_n(κ) = κ σ sqrt(2 log #Ω_n / n)`.
pub fn gamma_universal(kappa: f64, sigma: f64, n: u64, card: u64) -> Result<f64> {
    if !(kappa > 0.0) || !(sigma > 0.0) || n == 0 || card == 0 {
        return invalid(format!(
            "threshold needs kappa, sigma, n > 0 and #Ω_n >= 1 (got {kappa}, {sigma}, {n}, {card})"
        ));
    }
    Ok(kappa * sigma * (2.0 * (card as f64).ln() / n as f64).sqrt())
}

/// Standard normals for `(seed, replicate)`; cell `i` always receives the
/// same draw regardless of how many cells are requested.
pub fn standard_normals(seed: u64, replicate: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    let mut out = Vec::with_capacity(count + 1);
    let unit = |x: u64| ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    while out.len() < count {
        let u1 = unit(rng.next_u64());
        let u2 = unit(rng.next_u64());
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        out.push(r * c);
        out.push(r * s);
    }
    out.truncate(count);
    out
}

/// `y_i = f(x_i) + σ sqrt(N^d/n) ε_i` for replicate 0.
pub fn simulate_pixels(truth: &TorusSignal, noise: &NoiseSpec) -> Result<TorusSignal> {
    simulate_pixels_replicate(truth, noise, 0)
}

pub fn simulate_pixels_replicate(
    truth: &TorusSignal,
    noise: &NoiseSpec,
    replicate: u64,
) -> Result<TorusSignal> {
    noise.validate(truth.len())?;
    let sd = noise.pixel_sd(truth.len());
    let eps = standard_normals(noise.seed, replicate, truth.len());
    let values = truth
        .values()
        .iter()
        .zip(&eps)
        .map(|(f, e)| f + sd * e)
        .collect();
    Ok(TorusSignal::from_parts(truth.dim(), truth.side(), values))
}

/// Observed frame coefficients `Y_ω` with the threshold in force.
#[derive(Clone, Debug)]
pub struct Observations {
    pub coefficients: CoefficientVector,
    pub frame: Arc<dyn Frame>,
    pub noise: NoiseSpec,
    pub gamma: f64,
    pub kappa: f64,
    /// The noisy pixels the coefficients were computed from.
    pub pixels: TorusSignal,
}

impl Observations {
    pub fn frame_descriptor(&self) -> &FrameDescriptor {
        self.frame.descriptor()
    }

    /// Observations of given pixels with the universal threshold.
    pub fn from_pixels(
        pixels: TorusSignal,
        frame: Arc<dyn Frame>,
        noise: NoiseSpec,
        kappa: f64,
    ) -> Result<Self> {
        if frame.dim() != pixels.dim() || frame.side() != pixels.side() {
            return Err(Error::ShapeMismatch(
                "frame and pixels differ in shape".into(),
            ));
        }
        let gamma = gamma_universal(kappa, noise.sigma, noise.n, frame.len() as u64)?;
        let coefficients = frame.analyze(&pixels)?;
        Ok(Self {
            coefficients,
            frame,
            noise,
            gamma,
            kappa,
            pixels,
        })
    }

    /// Replaces the threshold.
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return invalid(format!("gamma must be nonnegative, got {gamma}"));
        }
        self.gamma = gamma;
        Ok(self)
    }

    /// `max_ω |⟨φ_ω, g⟩ - Y_ω|`.
    pub fn max_residual(&self, g: &TorusSignal) -> Result<f64> {
        let c = self.frame.analyze(g)?;
        Ok(c.values()
            .iter()
            .zip(self.coefficients.values())
            .fold(0.0_f64, |m, (a, y)| m.max((a - y).abs())))
    }

    /// Whether `g` satisfies the multiscale constraint (the event `A_n` when `g` is the truth).
    pub fn is_feasible(&self, g: &TorusSignal) -> Result<bool> {
        Ok(self.max_residual(g)? <= self.gamma)
    }
}

/// Builds the frame for `frame` at level `noise.n` and observes replicate 0.
pub fn observe(
    truth: &TorusSignal,
    frame: &FrameDescriptor,
    noise: &NoiseSpec,
    kappa: f64,
) -> Result<Observations> {
    let f = build_frame(frame, truth.dim(), noise.n, truth.side())?;
    observe_with(truth, f, noise, kappa, 0)
}

pub fn observe_with(
    truth: &TorusSignal,
    frame: Arc<dyn Frame>,
    noise: &NoiseSpec,
    kappa: f64,
    replicate: u64,
) -> Result<Observations> {
    let pixels = simulate_pixels_replicate(truth, noise, replicate)?;
    Observations::from_pixels(pixels, frame, noise.clone(), kappa)
}

/// Robust `σ` from the finest Haar detail coefficients: `median|d| / 0.6745`,
/// rescaled from pixel level to the white-noise level `n`.
pub fn estimate_sigma_mad(pixels: &TorusSignal, n: u64) -> Result<f64> {
    let (dim, side) = (pixels.dim(), pixels.side());
    if side < 2 {
        return invalid("need at least two cells per axis");
    }
    let bank = FilterBank::daubechies(1)?;
    let mut data = pixels.values().to_vec();
    wavelet::forward(&bank, dim, side, &mut data);
    let half = side / 2;
    let mut details: Vec<f64> = data
        .iter()
        .enumerate()
        .filter(|(flat, _)| {
            let mut rem = *flat;
            (0..dim).any(|_| {
                let x = rem % side;
                rem /= side;
                x >= half
            })
        })
        .map(|(_, v)| v.abs())
        .collect();
    details.sort_by(|a, b| a.total_cmp(b));
    let m = details.len();
    let median = if m % 2 == 1 {
        details[m / 2]
    } else {
        0.5 * (details[m / 2 - 1] + details[m / 2])
    };
    let pixel_sd = median / 0.674_489_750_196_081_7;
    Ok(pixel_sd * (n as f64 / pixels.len() as f64).sqrt())
}
