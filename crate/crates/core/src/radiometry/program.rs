use crate::error::{invalid, Error, Result};
use crate::frame::Rgb;
use crate::interval::Interval;

use super::response::ResponseCurve;

/// Per-channel exposure classification of an 8-bit intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExposureClass {
    Under,
    Well,
    Over,
}

/// The discrete set of supported exposure times together with the saturation
/// thresholds and the detectable ranges they induce.
///
/// A channel is under-exposed iff `z <= z_lo` and over-exposed iff `z >= z_hi`.
/// `x_min = g(z_lo + 1)` and `x_max = g(z_hi)` are the smallest and largest normalized
/// exposures still classified as well-exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureProgram {
    times: Vec<f64>,
    z_lo: u8,
    z_hi: u8,
    x_min: Rgb,
    x_max: Rgb,
}

impl ExposureProgram {
    pub const DEFAULT_Z_LO: u8 = 4;
    pub const DEFAULT_Z_HI: u8 = 250;
    /// Relative tolerance used when matching an exposure time against the program.
    const TIME_TOLERANCE: f64 = 1e-9;

    pub fn new(times: Vec<f64>, curve: &ResponseCurve) -> Result<Self> {
        Self::with_thresholds(times, curve, Self::DEFAULT_Z_LO, Self::DEFAULT_Z_HI)
    }

    pub fn with_thresholds(mut times: Vec<f64>, curve: &ResponseCurve, z_lo: u8, z_hi: u8) -> Result<Self> {
        if times.is_empty() {
            return Err(invalid("exposure program needs at least one time"));
        }
        if times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(invalid("exposure times must be positive and finite"));
        }
        times.sort_by(f64::total_cmp);
        if times.windows(2).any(|w| w[1] <= w[0] * (1.0 + Self::TIME_TOLERANCE)) {
            return Err(invalid("exposure times must be distinct"));
        }
        if z_lo >= z_hi {
            return Err(invalid(format!("need z_lo < z_hi, got {z_lo} >= {z_hi}")));
        }
        let mut x_min = [0.0; 3];
        let mut x_max = [0.0; 3];
        for c in 0..3 {
            x_min[c] = curve.inverse(c, z_lo + 1);
            x_max[c] = curve.inverse(c, z_hi);
            if !(x_min[c] > 0.0 && x_min[c] < x_max[c] && x_max[c] <= 1.0) {
                return Err(invalid(format!(
                    "channel {c}: thresholds give x_min = {}, x_max = {}",
                    x_min[c], x_max[c]
                )));
            }
        }
        Ok(Self {
            times,
            z_lo,
            z_hi,
            x_min,
            x_max,
        })
    }

    /// `count` times spaced geometrically between `t_min` and `t_max` inclusive.
    pub fn geometric_times(t_min: f64, t_max: f64, count: usize) -> Result<Vec<f64>> {
        if count == 0 || t_min.is_nan() || t_min <= 0.0 || t_max < t_min {
            return Err(invalid("geometric times need 0 < t_min <= t_max and count >= 1"));
        }
        if count == 1 {
            return Ok(vec![t_min]);
        }
        let ratio = t_max / t_min;
        Ok((0..count)
            .map(|i| match i {
                0 => t_min,
                i if i == count - 1 => t_max,
                i => t_min * ratio.powf(i as f64 / (count - 1) as f64),
            })
            .collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_min(&self) -> f64 {
        self.times[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn z_lo(&self) -> u8 {
        self.z_lo
    }

    pub fn z_hi(&self) -> u8 {
        self.z_hi
    }

    pub fn x_min(&self) -> Rgb {
        self.x_min
    }

    pub fn x_max(&self) -> Rgb {
        self.x_max
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .position(|ti| (ti - t).abs() <= Self::TIME_TOLERANCE * ti)
    }

    /// Returns the program's own representation of `t`.
    pub fn canonical(&self, t: f64) -> Result<f64> {
        self.index_of(t)
            .map(|i| self.times[i])
            .ok_or(Error::UnknownExposure(t))
    }

    /// The member of the program closest to `t`.
    pub fn nearest(&self, t: f64) -> f64 {
        *self
            .times
            .iter()
            .min_by(|a, b| (*a - t).abs().total_cmp(&(*b - t).abs()))
            .unwrap()
    }

    pub fn classify_channel(&self, z: u8) -> ExposureClass {
        if z <= self.z_lo {
            ExposureClass::Under
        } else if z >= self.z_hi {
            ExposureClass::Over
        } else {
            ExposureClass::Well
        }
    }

    /// Per-channel detectable irradiance range `[x_min / t, x_max / t]`.
    pub fn detectable_range(&self, t: f64) -> Result<[Interval; 3]> {
        let t = self.canonical(t)?;
        Ok(self.range_for(t))
    }

    pub(crate) fn range_for(&self, t: f64) -> [Interval; 3] {
        std::array::from_fn(|c| Interval::new(self.x_min[c] / t, self.x_max[c] / t))
    }

    /// Per-channel effective detectable range `[x_min / max T, x_max / min T]`.
    pub fn system_range(&self) -> [Interval; 3] {
        std::array::from_fn(|c| Interval::new(self.x_min[c] / self.t_max(), self.x_max[c] / self.t_min()))
    }

    /// Radiance range `[l_min, l_max]` over all channels for a camera whose weakest
    /// attenuation factor is `v_min`.
    pub fn radiance_range(&self, v_min: f64) -> Interval {
        let sys = self.system_range();
        let lo = sys.iter().map(|i| i.lo).fold(f64::INFINITY, f64::min);
        let hi = sys.iter().map(|i| i.hi).fold(0.0, f64::max);
        Interval::new(lo, hi / v_min.clamp(f64::MIN_POSITIVE, 1.0))
    }

    /// Saturating cap on the accumulated weight used by the 16-bit weight code.
    pub fn weight_cap(&self) -> f64 {
        64.0 * self.t_max()
    }
}
