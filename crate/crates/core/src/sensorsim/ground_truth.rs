use crate::error::{invalid, Error, Result};
use crate::frame::{LdrFrame, Rgb};
use crate::fusion::classify;
use crate::radiometry::{radiance_variance, ExposureProgram, NoiseModel, ResponseCurve, VignettingMap};

/// Reference radiance per pixel, with a flag for pixels that had at least
/// one valid observation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub width: usize,
    pub height: usize,
    pub radiance: Vec<Rgb>,
    pub valid: Vec<bool>,
}

impl GroundTruth {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Offline inverse-variance fusion of all valid observations in `frames`.
///
/// Weights are evaluated at a per-pixel reference radiance shared by all
/// samples, so the estimate does not depend on the noise of each sample.
pub fn batch_ground_truth(
    frames: &[LdrFrame],
    curve: &ResponseCurve,
    vmap: &VignettingMap,
    noise: &NoiseModel,
    program: &ExposureProgram,
) -> Result<GroundTruth> {
    let first = frames.first().ok_or_else(|| invalid("ground truth needs at least one frame"))?;
    let (width, height) = first.dims();
    if vmap.dims() != (width, height) {
        return Err(Error::DimensionMismatch {
            expected: (width, height),
            actual: vmap.dims(),
        });
    }
    for frame in frames {
        if frame.dims() != (width, height) {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: frame.dims(),
            });
        }
        program.canonical(frame.exposure())?;
    }
    let a = noise.coefficients();
    // a = 0 has no variance to weigh by; any constant coefficient gives the same weights.
    let weighting = NoiseModel::new(a.map(|a| if a > 0.0 { a } else { 1.0 }))?;

    let n = width * height;
    let mut radiance = vec![[0.0; 3]; n];
    let mut valid = vec![false; n];
    let mut samples: Vec<(f64, Rgb)> = Vec::with_capacity(frames.len());
    for i in 0..n {
        let (x, y) = (i % width, i / width);
        let v = vmap.get(x, y);
        samples.clear();
        for frame in frames {
            let z = frame.pixels()[i];
            if !classify(z, program).valid {
                continue;
            }
            let t = frame.exposure();
            let est = [0, 1, 2].map(|c| curve.inverse(c, z[c]) / (t * v[c]));
            samples.push((t, est));
        }
        if samples.is_empty() {
            continue;
        }
        valid[i] = true;
        for c in 0..3 {
            let reference = samples.iter().map(|s| s.1[c]).sum::<f64>() / samples.len() as f64;
            let (mut num, mut den) = (0.0, 0.0);
            for s in &samples {
                let w = 1.0 / radiance_variance(&weighting, c, reference, s.0, v[c])?;
                num += w * s.1[c];
                den += w;
            }
            radiance[i][c] = num / den;
        }
    }
    Ok(GroundTruth {
        width,
        height,
        radiance,
        valid,
    })
}
