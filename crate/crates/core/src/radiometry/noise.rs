use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::frame::{LdrFrame, Rgb};

use super::program::ExposureProgram;
use super::response::ResponseCurve;

/// Signal-dependent noise: the exposure variance is `a_c · X` per channel.
///
/// `a_c = 0` describes a noise-free camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    a: Rgb,
}

impl NoiseModel {
    pub fn new(a: Rgb) -> Result<Self> {
        if a.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid(format!("noise coefficients must be finite and >= 0, got {a:?}")));
        }
        Ok(Self { a })
    }

    pub fn noiseless() -> Self {
        Self { a: [0.0; 3] }
    }

    pub fn coefficients(&self) -> Rgb {
        self.a
    }

    pub fn coefficient(&self, channel: usize) -> f64 {
        self.a[channel]
    }

    pub fn is_noiseless(&self) -> bool {
        self.a.iter().all(|a| *a == 0.0)
    }

    /// Variance of the normalized exposure `x` on `channel`.
    pub fn exposure_variance(&self, channel: usize, x: f64) -> f64 {
        self.a[channel] * x
    }

    /// One line of three comma-separated coefficients.
    pub fn to_text(&self) -> String {
        format!("{},{},{}\n", self.a[0], self.a[1], self.a[2])
    }

    pub fn parse(text: &str) -> Result<Self> {
        let values: Vec<f64> = text
            .trim()
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| crate::error::format_err("noise model", "expected numbers"))?;
        match values.as_slice() {
            [r, g, b] => Self::new([*r, *g, *b]),
            _ => Err(crate::error::format_err("noise model", "expected 3 coefficients")),
        }
    }
}

/// Result of the variance-vs-exposure fit.
#[derive(Debug, Clone)]
pub struct NoiseFit {
    pub model: NoiseModel,
    /// Per channel, the `(mean exposure, median variance)` points used by the fit.
    pub points: [Vec<(f64, f64)>; 3],
    /// Per channel, points dropped because their bin sits in the saturation roll-off.
    pub excluded: [Vec<(f64, f64)>; 3],
    /// Channels whose recovered slope is zero (noise-free data).
    pub degenerate: [bool; 3],
}

/// Running mean / M2 accumulator per pixel channel (Welford).
#[derive(Clone, Copy, Default)]
struct Welford {
    n: u32,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }
}

/// Recovers the per-channel noise coefficient from repeated captures of a static scene.
///
/// Frames are grouped by exposure time. For every pixel the mean and variance of
/// `g(Z)` are computed; observations are binned by mean exposure into `bins` bins over
/// `[0, 1]` and the median-variance observation of each bin is kept. Bins above
/// `0.95·x_max` are dropped, then a line through the origin is fitted.
pub fn fit_noise_coefficient(
    frames: &[LdrFrame],
    curve: &ResponseCurve,
    program: &ExposureProgram,
    bins: usize,
) -> Result<NoiseFit> {
    if bins == 0 {
        return Err(invalid("need at least one bin"));
    }
    let Some(first) = frames.first() else {
        return Err(Error::NoiseFit("no frames".into()));
    };
    let dims = first.dims();
    let mut groups: BTreeMap<u64, Vec<&LdrFrame>> = BTreeMap::new();
    for frame in frames {
        if frame.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: frame.dims(),
            });
        }
        groups.entry(frame.exposure().to_bits()).or_default().push(frame);
    }
    if groups.values().any(|g| g.len() < 2) {
        return Err(Error::NoiseFit("every exposure needs at least 2 frames".into()));
    }

    // per channel, per bin: (mean, variance) observations
    let mut binned: [Vec<Vec<(f64, f64)>>; 3] = std::array::from_fn(|_| vec![Vec::new(); bins]);
    for group in groups.values() {
        let mut stats = vec![[Welford::default(); 3]; dims.0 * dims.1];
        for frame in group {
            for (acc, z) in stats.iter_mut().zip(frame.pixels()) {
                for c in 0..3 {
                    acc[c].push(curve.inverse(c, z[c]));
                }
            }
        }
        for acc in &stats {
            for c in 0..3 {
                let mean = acc[c].mean;
                let bin = ((mean * bins as f64) as usize).min(bins - 1);
                binned[c][bin].push((mean, acc[c].variance()));
            }
        }
    }

    let mut points: [Vec<(f64, f64)>; 3] = Default::default();
    let mut excluded: [Vec<(f64, f64)>; 3] = Default::default();
    let mut slopes = [0.0; 3];
    let mut degenerate = [false; 3];
    let x_max = program.x_max();
    for c in 0..3 {
        let cutoff = 0.95 * x_max[c];
        for bin in binned[c].iter_mut().filter(|b| !b.is_empty()) {
            bin.sort_by(|a, b| a.1.total_cmp(&b.1));
            let median = bin[(bin.len() - 1) / 2];
            if median.0 > cutoff {
                excluded[c].push(median);
            } else {
                points[c].push(median);
            }
        }
        if points[c].len() < 3 {
            return Err(Error::NoiseFit(format!(
                "channel {c}: only {} populated bins below the saturation cutoff",
                points[c].len()
            )));
        }
        let sxy: f64 = points[c].iter().map(|(x, y)| x * y).sum();
        let sxx: f64 = points[c].iter().map(|(x, _)| x * x).sum();
        slopes[c] = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
        degenerate[c] = slopes[c] == 0.0;
        if degenerate[c] {
            log::warn!("noise fit for channel {c} is degenerate (zero variance)");
        }
    }

    Ok(NoiseFit {
        model: NoiseModel::new(slopes)?,
        points,
        excluded,
        degenerate,
    })
}
