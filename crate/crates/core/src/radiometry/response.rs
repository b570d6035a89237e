use std::path::Path;

use crate::error::{format_err, invalid, Result};
use crate::frame::Rgb;

/// Number of intensity levels of the 8-bit sensor.
pub const LEVELS: usize = 256;

/// Per-channel inverse camera response `g = f⁻¹`.
///
/// Each channel is a table of 256 non-decreasing, non-negative values mapping an
/// intensity `z` to a normalized exposure, with `g(255) = 1` exactly. The forward
/// response `f` is the left inverse `f(x) = max{z : g(z) <= x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    tables: [[f64; LEVELS]; 3],
}

impl ResponseCurve {
    pub fn from_tables(tables: [[f64; LEVELS]; 3]) -> Result<Self> {
        for (c, table) in tables.iter().enumerate() {
            if table.iter().any(|g| !g.is_finite() || *g < 0.0) {
                return Err(invalid(format!(
                    "response channel {c} has negative or non-finite entries"
                )));
            }
            if table.windows(2).any(|w| w[1] < w[0]) {
                return Err(invalid(format!("response channel {c} is not monotone")));
            }
            if table[LEVELS - 1] != 1.0 {
                return Err(invalid(format!(
                    "response channel {c} must satisfy g(255) = 1, got {}",
                    table[LEVELS - 1]
                )));
            }
        }
        Ok(Self { tables })
    }

    /// Builds a curve by evaluating `generator(channel, z)` for every level.
    pub fn from_fn(generator: impl Fn(usize, u8) -> f64) -> Result<Self> {
        let mut tables = [[0.0; LEVELS]; 3];
        for (c, table) in tables.iter_mut().enumerate() {
            for (z, g) in table.iter_mut().enumerate() {
                *g = generator(c, z as u8);
            }
        }
        Self::from_tables(tables)
    }

    /// `g(z) = z / 255` on every channel.
    pub fn linear() -> Self {
        Self::gamma(1.0).expect("linear curve is valid")
    }

    /// `g(z) = (z / 255)^gamma` on every channel.
    pub fn gamma(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("gamma must be positive, got {gamma}")));
        }
        Self::from_fn(|_, z| (z as f64 / 255.0).powf(gamma))
    }

    pub fn table(&self, channel: usize) -> &[f64; LEVELS] {
        &self.tables[channel]
    }

    /// `g_c(z)`.
    #[inline]
    pub fn inverse(&self, channel: usize, z: u8) -> f64 {
        self.tables[channel][z as usize]
    }

    pub fn inverse_rgb(&self, z: [u8; 3]) -> Rgb {
        [self.inverse(0, z[0]), self.inverse(1, z[1]), self.inverse(2, z[2])]
    }

    /// Largest `z` with `g_c(z) <= x` after clamping `x` to `[0, 1]`; 0 when no level qualifies.
    #[inline]
    pub fn forward(&self, channel: usize, x: f64) -> u8 {
        let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
        let table = &self.tables[channel];
        let n = table.partition_point(|g| *g <= x);
        n.saturating_sub(1) as u8
    }

    pub fn forward_rgb(&self, x: Rgb) -> [u8; 3] {
        [self.forward(0, x[0]), self.forward(1, x[1]), self.forward(2, x[2])]
    }

    pub fn is_strictly_increasing(&self, channel: usize) -> bool {
        self.tables[channel].windows(2).all(|w| w[0] < w[1])
    }

    /// Three lines (R, G, B) of 256 comma-separated decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for table in &self.tables {
            let line: Vec<String> = table.iter().map(|g| g.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        if lines.len() != 3 {
            return Err(format_err(
                "response curve",
                format!("expected 3 lines, found {}", lines.len()),
            ));
        }
        let mut tables = [[0.0; LEVELS]; 3];
        for (c, line) in lines.iter().enumerate() {
            let values: Vec<&str> = line.split(',').map(str::trim).collect();
            if values.len() != LEVELS {
                return Err(format_err(
                    "response curve",
                    format!("line {} has {} values, expected {LEVELS}", c + 1, values.len()),
                ));
            }
            for (z, v) in values.iter().enumerate() {
                tables[c][z] = v.parse().map_err(|_| {
                    format_err("response curve", format!("bad number {v:?} on line {}", c + 1))
                })?;
            }
        }
        if tables.iter().flatten().any(|g| *g > 1.0) {
            return Err(format_err("response curve", "values must lie in [0, 1]"));
        }
        Self::from_tables(tables).map_err(|e| format_err("response curve", e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_inverse_values() {
        let curve = ResponseCurve::linear();
        let g = curve.inverse_rgb([255, 0, 128]);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[1], 0.0);
        assert!((g[2] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn gamma_inverse_matches_generator() {
        let curve = ResponseCurve::gamma(2.2).unwrap();
        let expected = (128.0f64 / 255.0).powf(2.2);
        assert!((expected - 0.219_52).abs() < 1e-5);
        assert_eq!(curve.inverse_rgb([128; 3]), [expected; 3]);
        assert_eq!(curve.inverse_rgb([255; 3]), [1.0; 3]);
    }

    #[test]
    fn forward_clamps_and_floors() {
        let curve = ResponseCurve::linear();
        assert_eq!(curve.forward(0, 0.5), 127);
        assert_eq!(curve.forward(0, 1.5), 255);
        assert_eq!(curve.forward(0, -0.1), 0);
        assert_eq!(curve.forward(0, f64::NAN), 0);
        assert_eq!(curve.forward(0, 1.0), 255);
    }

    #[test]
    fn forward_ties_go_to_larger_level() {
        let curve = ResponseCurve::from_fn(|_, z| if z < 10 { 0.0 } else { z as f64 / 255.0 }).unwrap();
        assert_eq!(curve.forward(1, 0.0), 9);
        assert_eq!(curve.forward(1, 0.001), 9);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(ResponseCurve::from_fn(|_, z| z as f64 / 256.0).is_err());
        assert!(ResponseCurve::from_fn(|_, z| if z == 3 { 0.5 } else { z as f64 / 255.0 }).is_err());
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let curve = ResponseCurve::gamma(2.2).unwrap();
        let text = curve.to_text();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.ends_with(",1")));
        assert_eq!(ResponseCurve::parse(&text).unwrap(), curve);
    }

    #[test]
    fn parse_rejects_short_lines() {
        assert!(ResponseCurve::parse("0,1\n0,1\n0,1\n").is_err());
    }
}
