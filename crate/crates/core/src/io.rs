//! Signal files: CSV (d = 1), 16-bit binary PGM with a JSON sidecar (d = 2),
//! and the raw `.tsig` format (any d).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TorusSignal;

pub const TSIG_MAGIC: &[u8; 4] = b"TSIG";
pub const TSIG_VERSION: u32 = 1;
const PGM_MAX: f64 = 65535.0;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

/// Linear map between PGM gray levels and signal values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PgmMapping {
    pub min: f64,
    pub max: f64,
}

impl PgmMapping {
    fn to_level(self, v: f64) -> u16 {
        if self.max > self.min {
            ((v - self.min) / (self.max - self.min) * PGM_MAX)
                .round()
                .clamp(0.0, PGM_MAX) as u16
        } else {
            0
        }
    }

    fn to_value(self, level: f64, maxval: f64) -> f64 {
        self.min + (self.max - self.min) * level / maxval
    }
}

/// Sidecar path `<path>.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn csv_to_string(s: &TorusSignal) -> Result<String> {
    if s.dim() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "CSV holds 1D signals, got d = {}",
            s.dim()
        )));
    }
    let mut out = String::with_capacity(s.len() * 20);
    for v in s.values() {
        out.push_str(&format!("{v}\n"));
    }
    Ok(out)
}

/// One value per line; blank lines and lines starting with `#` are skipped.
pub fn csv_from_str(text: &str) -> Result<TorusSignal> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => return format_err(format!("line {}: `{t}` is not a finite number", i + 1)),
        }
    }
    let side = values.len();
    TorusSignal::new(1, side, values)
}

/// 16-bit P5 bytes and the mapping that recovers the values.
pub fn pgm_encode(s: &TorusSignal) -> Result<(Vec<u8>, PgmMapping)> {
    if s.dim() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "PGM holds 2D signals, got d = {}",
            s.dim()
        )));
    }
    let v = s.values();
    let map = PgmMapping {
        min: v.iter().copied().fold(f64::INFINITY, f64::min),
        max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let side = s.side();
    let mut out = format!("P5\n{side} {side}\n65535\n").into_bytes();
    out.reserve(2 * v.len());
    // row y is the second axis, written top to bottom
    for y in 0..side {
        for x in 0..side {
            out.extend_from_slice(&map.to_level(v[x + side * y]).to_be_bytes());
        }
    }
    Ok((out, map))
}

/// Parses a square P5 image; without a mapping the levels are scaled to `[0, 1]`.
pub fn pgm_decode(bytes: &[u8], map: Option<PgmMapping>) -> Result<TorusSignal> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return format_err("truncated PGM header");
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return format_err(format!("expected P5 magic, got `{}`", fields[0]));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM header field `{s}`")))
    };
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if w != h {
        return Err(Error::ShapeMismatch(format!(
            "PGM must be square, got {w}x{h}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return format_err(format!("PGM maxval {maxval} out of range"));
    }
    pos += 1;
    let wide = maxval > 255;
    let need = w * h * if wide { 2 } else { 1 };
    let data = bytes.get(pos..).unwrap_or(&[]);
    if data.len() != need {
        return format_err(format!(
            "PGM raster has {} bytes, expected {need}",
            data.len()
        ));
    }
    let map = map.unwrap_or(PgmMapping { min: 0.0, max: 1.0 });
    let mut values = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = x + w * y;
            let level = if wide {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as f64
            } else {
                data[i] as f64
            };
            values[i] = map.to_value(level, maxval as f64);
        }
    }
    TorusSignal::new(2, w, values)
}

pub fn tsig_encode(s: &TorusSignal) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * s.len());
    out.extend_from_slice(TSIG_MAGIC);
    for h in [TSIG_VERSION, s.dim() as u32, s.side() as u32] {
        out.extend_from_slice(&h.to_le_bytes());
    }
    for v in s.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn tsig_decode(bytes: &[u8]) -> Result<TorusSignal> {
    if bytes.len() < 16 || &bytes[..4] != TSIG_MAGIC {
        return format_err("missing TSIG header");
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (version, dim, side) = (word(4), word(8) as usize, word(12) as usize);
    if version != TSIG_VERSION {
        return format_err(format!("unsupported TSIG version {version}"));
    }
    crate::grid::check_shape(dim, side)?;
    let count = side.pow(dim as u32);
    let body = &bytes[16..];
    if body.len() != 8 * count {
        return format_err(format!(
            "TSIG body has {} bytes, expected {}",
            body.len(),
            8 * count
        ));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    TorusSignal::new(dim, side, values)
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Reads by extension: `.csv`, `.pgm` (with `<path>.json` sidecar when present), `.tsig`.
pub fn read_signal(path: &Path) -> Result<TorusSignal> {
    match extension(path).as_str() {
        "csv" => csv_from_str(&fs::read_to_string(path)?),
        "pgm" => {
            let side = sidecar_path(path);
            let map = if side.exists() {
                Some(serde_json::from_str(&fs::read_to_string(side)?)?)
            } else {
                None
            };
            pgm_decode(&fs::read(path)?, map)
        }
        "tsig" => tsig_decode(&fs::read(path)?),
        other => format_err(format!(
            "unsupported signal extension `{other}` (csv, pgm, tsig)"
        )),
    }
}

/// Writes by extension; PGM also writes its sidecar.
pub fn write_signal(path: &Path, s: &TorusSignal) -> Result<()> {
    match extension(path).as_str() {
        "csv" => fs::write(path, csv_to_string(s)?)?,
        "pgm" => {
            let (bytes, map) = pgm_encode(s)?;
            fs::write(path, bytes)?;
            fs::write(sidecar_path(path), serde_json::to_string_pretty(&map)?)?;
        }
        "tsig" => fs::write(path, tsig_encode(s))?,
        other => {
            return format_err(format!(
                "unsupported signal extension `{other}` (csv, pgm, tsig)"
            ))
        }
    }
    Ok(())
}
