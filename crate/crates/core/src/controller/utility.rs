use crate::error::{invalid, Error, Result};
use crate::frame::Rgb;
use crate::fusion::MapView;
use crate::interval::Interval;
use crate::radiometry::{ExposureProgram, VignettingMap};

/// Relative tolerance under which two total utilities are treated as tied.
pub const TIE_RTOL: f64 = 1e-9;

/// Probability that a radiance drawn log-uniformly from `bounds` lands in `detectable`:
/// the log-length of the overlap over the log-length of `bounds`. A degenerate
/// `bounds` yields 1 if its point is detectable and 0 otherwise.
pub fn saturation_probability(bounds: &Interval, detectable: &Interval) -> Result<f64> {
    if !bounds.is_positive() || !detectable.is_positive() {
        return Err(invalid(format!(
            "log-space probability needs positive intervals, got {bounds} and {detectable}"
        )));
    }
    Ok(probability(bounds, detectable))
}

#[inline]
pub(crate) fn probability(bounds: &Interval, detectable: &Interval) -> f64 {
    if bounds.is_degenerate() {
        return if detectable.contains(bounds.lo) { 1.0 } else { 0.0 };
    }
    match bounds.intersect(detectable) {
        Some(overlap) => (overlap.log_len() / bounds.log_len()).clamp(0.0, 1.0),
        None => 0.0,
    }
}

/// Detectable radiance range of a pixel with attenuation `v` at exposure `t`.
#[inline]
pub fn pixel_detectable(program: &ExposureProgram, t: f64, v: Rgb) -> [Interval; 3] {
    let x_min = program.x_min();
    let x_max = program.x_max();
    std::array::from_fn(|c| Interval::new(x_min[c] / (t * v[c]), x_max[c] / (t * v[c])))
}

/// Read-only inputs to the exposure controller.
#[derive(Debug, Clone, Copy)]
pub struct ControllerInput<'a> {
    pub view: &'a MapView,
    pub vmap: &'a VignettingMap,
    pub program: &'a ExposureProgram,
}

impl<'a> ControllerInput<'a> {
    pub fn new(view: &'a MapView, vmap: &'a VignettingMap, program: &'a ExposureProgram) -> Result<Self> {
        if (view.width, view.height) != vmap.dims() {
            return Err(Error::DimensionMismatch {
                expected: (view.width, view.height),
                actual: vmap.dims(),
            });
        }
        Ok(Self { view, vmap, program })
    }
}

/// Expected number of incomplete points that a frame at `t` would complete.
pub fn exploration_utility(t: f64, input: &ControllerInput) -> Result<f64> {
    let t = input.program.canonical(t)?;
    Ok(exploration(t, input))
}

pub(crate) fn exploration(t: f64, input: &ControllerInput) -> f64 {
    let view = input.view;
    let mut total = 0.0;
    for (i, v) in input.vmap.values().iter().enumerate() {
        if !view.is_incomplete(i) {
            continue;
        }
        let detectable = pixel_detectable(input.program, t, *v);
        let bounds = &view.bounds[i];
        let mut p = 1.0;
        for c in 0..3 {
            p *= probability(&bounds[c], &detectable[c]);
        }
        total += p;
    }
    total
}

/// Sum of `t / W(u)` over complete points whose expected irradiance `L·V` is
/// detectable at `t` on every channel.
pub fn refinement_utility(t: f64, input: &ControllerInput) -> Result<f64> {
    let t = input.program.canonical(t)?;
    Ok(refinement(t, input))
}

pub(crate) fn refinement(t: f64, input: &ControllerInput) -> f64 {
    let view = input.view;
    let eps = input.program.range_for(t);
    let mut total = 0.0;
    for (i, v) in input.vmap.values().iter().enumerate() {
        let w = view.weight[i];
        if w <= 0.0 {
            continue;
        }
        let l = view.radiance[i];
        if (0..3).all(|c| eps[c].contains(l[c] * v[c])) {
            total += t / w;
        }
    }
    total
}
