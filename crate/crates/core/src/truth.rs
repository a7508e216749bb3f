//! Test functions of bounded variation with certified sup and BV bounds.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{TorusSignal, TvFlavor};

/// Named generator plus numeric parameters (missing ones take defaults).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl TruthSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn build(&self, dim: usize, side: usize) -> Result<Truth> {
        truth_library(&self.name, dim, side, &self.params)
    }
}

/// A generated signal with its measured and declared bounds.
#[derive(Clone, Debug)]
pub struct Truth {
    pub name: String,
    pub signal: TorusSignal,
    pub sup: f64,
    /// Anisotropic BV seminorm.
    pub bv: f64,
    /// The `L` of the class `BV_L` the generator claims membership in.
    pub declared_l: f64,
}

impl Truth {
    fn certify(name: &str, signal: TorusSignal, declared_l: f64) -> Result<Self> {
        let sup = signal.sup_norm();
        let bv = signal.bv_seminorm(TvFlavor::Anisotropic);
        let slack = 1e-12 * declared_l.max(1.0);
        if sup > declared_l + slack || bv > declared_l + slack {
            return invalid(format!(
                "generator `{name}` produced sup {sup} and bv {bv} above its declared L = {declared_l}"
            ));
        }
        Ok(Self {
            name: name.to_string(),
            signal,
            sup,
            bv,
            declared_l,
        })
    }
}

/// Names accepted by [`truth_library`].
pub const TRUTH_NAMES: &[&str] = &[
    "constant",
    "step1d",
    "ramp1d",
    "step_ramp1d",
    "blocks1d",
    "square2d",
    "cube",
    "disc2d",
    "cartoon2d",
    "random_cartoon",
];

struct Params<'a> {
    name: &'a str,
    given: &'a BTreeMap<String, f64>,
    allowed: &'static [&'static str],
}

impl Params<'_> {
    fn check(&self) -> Result<()> {
        for key in self.given.keys() {
            if !self.allowed.contains(&key.as_str()) {
                return invalid(format!(
                    "generator `{}` has no parameter `{key}` (accepted: {})",
                    self.name,
                    self.allowed.join(", ")
                ));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.given.get(key).copied().unwrap_or(default);
        if !v.is_finite() {
            return invalid(format!("parameter `{key}` must be finite"));
        }
        Ok(v)
    }
}

fn need_dim(name: &str, dim: usize, want: usize) -> Result<()> {
    if dim != want {
        return invalid(format!(
            "generator `{name}` is defined for d = {want}, got d = {dim}"
        ));
    }
    Ok(())
}

fn in_interval(x: f64, a: f64, b: f64) -> bool {
    // periodic interval [a, b) of length b - a < 1
    let t = (x - a).rem_euclid(1.0);
    t < b - a
}

/// Donoho-Johnstone "blocks" jump locations and heights.
const BLOCKS_T: [f64; 11] = [
    0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81,
];
const BLOCKS_H: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];

/// Builds the named member of `BV_L` on an `N^d` grid.
///
/// | name | d | parameters (defaults) |
/// |---|---|---|
/// | `constant` | any | `c` (0.5) |
/// | `step1d` | 1 | `height` (1), `start` (0.25), `width` (0.5) |
/// | `ramp1d` | 1 | `amplitude` (1) |
/// | `step_ramp1d` | 1 | `height` (1), `amplitude` (1) |
/// | `blocks1d` | 1 | `scale` (0.2) |
/// | `square2d` | 2 | `side` (0.5), `x0`, `y0` (0.25), `height` (1) |
/// | `cube` | any | `side` (0.5), `corner` (0.25), `height` (1) |
/// | `disc2d` | 2 | `radius` (0.25), `cx`, `cy` (0.5), `height` (1), `edge` (2 cells) |
/// | `cartoon2d` | 2 | `scale` (1) |
/// | `random_cartoon` | any | `seed` (0), `shapes` (4) |
pub fn truth_library(
    name: &str,
    dim: usize,
    side: usize,
    params: &BTreeMap<String, f64>,
) -> Result<Truth> {
    crate::grid::check_shape(dim, side)?;
    let allowed: &'static [&'static str] = match name {
        "constant" => &["c"],
        "step1d" => &["height", "start", "width"],
        "ramp1d" => &["amplitude"],
        "step_ramp1d" => &["height", "amplitude"],
        "blocks1d" => &["scale"],
        "square2d" => &["side", "x0", "y0", "height"],
        "cube" => &["side", "corner", "height"],
        "disc2d" => &["radius", "cx", "cy", "height", "edge"],
        "cartoon2d" => &["scale"],
        "random_cartoon" => &["seed", "shapes"],
        _ => return Err(Error::UnknownName(name.to_string())),
    };
    let p = Params {
        name,
        given: params,
        allowed,
    };
    p.check()?;
    let nf = side as f64;
    match name {
        "constant" => {
            let c = p.get("c", 0.5)?;
            Truth::certify(name, TorusSignal::constant(dim, side, c)?, c.abs())
        }
        "step1d" => {
            need_dim(name, dim, 1)?;
            let (h, a, w) = (
                p.get("height", 1.0)?,
                p.get("start", 0.25)?,
                p.get("width", 0.5)?,
            );
            if !(0.0..1.0).contains(&w) {
                return invalid("step width must lie in [0, 1)");
            }
            let s =
                TorusSignal::from_fn(
                    1,
                    side,
                    |x| if in_interval(x[0], a, a + w) { h } else { 0.0 },
                )?;
            Truth::certify(name, s, 2.0 * h.abs())
        }
        "ramp1d" => {
            need_dim(name, dim, 1)?;
            let a = p.get("amplitude", 1.0)?;
            let s = TorusSignal::from_fn(1, side, |x| a * (1.0 - (2.0 * x[0] - 1.0).abs()))?;
            Truth::certify(name, s, 2.0 * a.abs())
        }
        "step_ramp1d" => {
            need_dim(name, dim, 1)?;
            let (h, a) = (p.get("height", 1.0)?, p.get("amplitude", 1.0)?);
            let s = TorusSignal::from_fn(1, side, |x| {
                let t = x[0];
                if (0.0625..0.3125).contains(&t) {
                    h
                } else if t >= 0.5 {
                    a * (1.0 - (4.0 * t - 3.0).abs())
                } else {
                    0.0
                }
            })?;
            Truth::certify(name, s, 2.0 * (h.abs() + a.abs()))
        }
        "blocks1d" => {
            need_dim(name, dim, 1)?;
            let scale = p.get("scale", 0.2)?;
            let s = TorusSignal::from_fn(1, side, |x| {
                scale
                    * BLOCKS_T
                        .iter()
                        .zip(BLOCKS_H)
                        .filter(|(t, _)| x[0] >= **t)
                        .map(|(_, h)| h)
                        .sum::<f64>()
            })?;
            let total: f64 = BLOCKS_H.iter().sum();
            let l = scale.abs() * (BLOCKS_H.iter().map(|h| h.abs()).sum::<f64>() + total.abs());
            Truth::certify(name, s, l)
        }
        "square2d" => {
            need_dim(name, dim, 2)?;
            let (w, x0, y0, h) = (
                p.get("side", 0.5)?,
                p.get("x0", 0.25)?,
                p.get("y0", 0.25)?,
                p.get("height", 1.0)?,
            );
            box_truth(name, 2, side, &[x0, y0], w, h)
        }
        "cube" => {
            let (w, c, h) = (
                p.get("side", 0.5)?,
                p.get("corner", 0.25)?,
                p.get("height", 1.0)?,
            );
            box_truth(name, dim, side, &[c; 3][..dim], w, h)
        }
        "disc2d" => {
            need_dim(name, dim, 2)?;
            let (r, cx, cy, h) = (
                p.get("radius", 0.25)?,
                p.get("cx", 0.5)?,
                p.get("cy", 0.5)?,
                p.get("height", 1.0)?,
            );
            if !(r > 0.0 && r < 0.5) {
                return invalid("disc radius must lie in (0, 1/2)");
            }
            let edge = p.get("edge", 2.0)?;
            if edge < 0.0 {
                return invalid("`edge` must be nonnegative");
            }
            // radial linear ramp across `edge` cells; 0 gives the sharp indicator
            let s = TorusSignal::from_fn(2, side, |x| {
                let dist = ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)).sqrt();
                if edge == 0.0 {
                    if dist < r {
                        h
                    } else {
                        0.0
                    }
                } else {
                    h * (0.5 + (r - dist) * nf / edge).clamp(0.0, 1.0)
                }
            })?;
            // at most 2(r + edge/2N)N + 1 crossed rows and columns, each with total variation 2h
            Truth::certify(
                name,
                s,
                h.abs() * f64::max(1.0, 8.0 * r + (4.0 + 4.0 * edge) / nf),
            )
        }
        "cartoon2d" => {
            need_dim(name, dim, 2)?;
            let scale = p.get("scale", 1.0)?;
            let s = TorusSignal::from_fn(2, side, |x| {
                let mut v = 0.0;
                if in_disc(x, 0.35, 0.4, 0.2) {
                    v += 1.0;
                }
                if (0.625..0.875).contains(&x[0]) && (0.5..0.875).contains(&x[1]) {
                    v -= 0.5;
                }
                if (0.125..0.875).contains(&x[0]) && (0.75..0.8125).contains(&x[1]) {
                    v += 0.25;
                }
                scale * v
            })?;
            let l = scale.abs()
                * ((8.0 * 0.2 + 4.0 / nf)
                    + 0.5 * 2.0 * (0.25 + 0.375)
                    + 0.25 * 2.0 * (0.75 + 0.0625));
            Truth::certify(name, s, l.max(1.75 * scale.abs()))
        }
        "random_cartoon" => {
            let seed = p.get("seed", 0.0)?;
            let shapes = p.get("shapes", 4.0)?;
            if seed < 0.0 || seed.fract() != 0.0 || shapes < 1.0 || shapes.fract() != 0.0 {
                return invalid("`seed` and `shapes` must be nonnegative integers (shapes >= 1)");
            }
            let s = random_cartoon(dim, side, seed as u64, shapes as usize)?;
            let l = s.sup_norm().max(s.bv_seminorm(TvFlavor::Anisotropic));
            Truth::certify(name, s, l)
        }
        _ => unreachable!(),
    }
}

fn in_disc(x: &[f64], cx: f64, cy: f64, r: f64) -> bool {
    let (dx, dy) = (x[0] - cx, x[1] - cy);
    dx * dx + dy * dy < r * r
}

fn box_truth(name: &str, dim: usize, side: usize, corner: &[f64], w: f64, h: f64) -> Result<Truth> {
    if !(w > 0.0 && w < 1.0) {
        return invalid("box side must lie in (0, 1)");
    }
    let s = TorusSignal::from_fn(dim, side, |x| {
        if x.iter()
            .zip(corner)
            .all(|(xi, c)| in_interval(*xi, *c, c + w))
        {
            h
        } else {
            0.0
        }
    })?;
    // 2d faces of area w^{d-1}; one extra cell of rounding per axis
    let wr = w + 1.0 / side as f64;
    let perim = 2.0 * dim as f64 * wr.powi(dim as i32 - 1);
    Truth::certify(name, s, h.abs() * f64::max(1.0, perim))
}

/// Sum of `shapes` random boxes and balls with heights in `[-1, 1]`.
pub fn random_cartoon(dim: usize, side: usize, seed: u64, shapes: usize) -> Result<TorusSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::with_capacity(shapes);
    for _ in 0..shapes {
        let ball = dim > 1 && rng.random_bool(0.5);
        let center: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let radius: Vec<f64> = (0..dim).map(|_| rng.random_range(0.05..0.3)).collect();
        let height = rng.random_range(-1.0..1.0);
        specs.push((ball, center, radius, height));
    }
    TorusSignal::from_fn(dim, side, |x| {
        specs
            .iter()
            .filter(|(ball, c, r, _)| {
                // periodic displacement
                let d = |a: usize| {
                    let t = (x[a] - c[a]).rem_euclid(1.0);
                    t.min(1.0 - t)
                };
                if *ball {
                    (0..dim).map(|a| d(a) * d(a)).sum::<f64>() < r[0] * r[0]
                } else {
                    (0..dim).all(|a| d(a) < r[a])
                }
            })
            .map(|s| s.3)
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(name: &str, dim: usize, side: usize, kv: &[(&str, f64)]) -> Result<Truth> {
        let params = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        truth_library(name, dim, side, &params)
    }

    #[test]
    fn documented_examples() {
        let c = build("constant", 2, 16, &[("c", 0.5)]).unwrap();
        assert_eq!((c.bv, c.sup), (0.0, 0.5));
        let s = build("step1d", 1, 64, &[]).unwrap();
        assert_eq!(s.bv, 2.0);
        let d = build("disc2d", 2, 256, &[]).unwrap();
        let iso = d.signal.bv_seminorm(TvFlavor::Isotropic);
        let perimeter = std::f64::consts::FRAC_PI_2;
        assert!((iso / perimeter - 1.0).abs() < 0.05, "{iso}");
    }

    #[test]
    fn exact_box_perimeters() {
        let sq = build("square2d", 2, 64, &[("side", 0.25)]).unwrap();
        assert_eq!(sq.bv, 1.0);
        let cube = build("cube", 3, 16, &[]).unwrap();
        assert_eq!(cube.bv, 6.0 * 0.25);
        let ramp = build("ramp1d", 1, 128, &[]).unwrap();
        assert_eq!(ramp.bv, 2.0);
        let sr = build("step_ramp1d", 1, 1024, &[]).unwrap();
        assert_eq!(sr.bv, 4.0);
    }

    #[test]
    fn every_generator_certifies() {
        for &name in TRUTH_NAMES {
            for dim in 1..=3 {
                for side in [16, 64] {
                    match build(name, dim, side, &[]) {
                        Ok(t) => assert!(
                            t.sup <= t.declared_l && t.bv <= t.declared_l + 1e-12,
                            "{name}"
                        ),
                        Err(Error::InvalidArgument(msg)) => {
                            assert!(msg.contains("defined for"), "{msg}")
                        }
                        Err(e) => panic!("{name}: {e}"),
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_unknown_names_and_params() {
        assert!(matches!(
            build("nope", 1, 8, &[]),
            Err(Error::UnknownName(_))
        ));
        assert!(build("step1d", 1, 8, &[("radius", 1.0)]).is_err());
        assert!(build("disc2d", 1, 8, &[]).is_err());
    }

    #[test]
    fn random_cartoon_is_seeded() {
        let a = random_cartoon(2, 32, 4, 5).unwrap();
        assert_eq!(a, random_cartoon(2, 32, 4, 5).unwrap());
        assert_ne!(a, random_cartoon(2, 32, 5, 5).unwrap());
    }
}
