//! Radiometric camera model: response curves, vignetting, exposure programs,
//! the signal-dependent noise model and their calibration.
//!
//! Image formation follows `Z = f(t·L·V + n_s)` with `Var[n_s] = a·X`, so a pixel
//! yields the radiance estimate `L̂ = g(z) / (t·v)` with variance `a·L̂ / (t·v)`.

mod calibrate;
mod noise;
mod program;
mod response;
mod vignetting;

pub use calibrate::{fit_response_curve, CrfFit, CrfFitOptions};
pub use noise::{fit_noise_coefficient, NoiseFit, NoiseModel};
pub use program::{ExposureClass, ExposureProgram};
pub use response::{ResponseCurve, LEVELS};
pub use vignetting::VignettingMap;

use crate::error::{invalid, Result};

fn check_exposure(t: f64, v: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("exposure time must be positive, got {t}")));
    }
    if !(v > 0.0 && v <= 1.0) {
        return Err(invalid(format!("attenuation must lie in (0, 1], got {v}")));
    }
    Ok(())
}

/// Per-channel normalized exposures `(g_R(z_R), g_G(z_G), g_B(z_B))`.
pub fn inverse_response(curve: &ResponseCurve, z: [u8; 3]) -> [f64; 3] {
    curve.inverse_rgb(z)
}

/// Radiance estimate `g(z) / (t·v)` for one channel.
pub fn estimate_radiance(curve: &ResponseCurve, channel: usize, z: u8, t: f64, v: f64) -> Result<f64> {
    check_exposure(t, v)?;
    Ok(curve.inverse(channel, z) / (t * v))
}

/// Variance `a·L̂ / (t·v)` of a radiance estimate.
pub fn radiance_variance(model: &NoiseModel, channel: usize, radiance: f64, t: f64, v: f64) -> Result<f64> {
    check_exposure(t, v)?;
    if radiance.is_nan() || radiance < 0.0 {
        return Err(invalid(format!("radiance must be non-negative, got {radiance}")));
    }
    Ok(model.coefficient(channel) * radiance / (t * v))
}
