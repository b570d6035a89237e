use crate::error::{invalid, Result};
use crate::frame::Rgb;
use crate::interval::Interval;
use crate::radiometry::{ExposureClass, ExposureProgram, ResponseCurve};

use super::observation::Observation;

/// Radiance bounds of a point that has not yet been observed validly.
///
/// While a channel has never been well-exposed its bounds come from saturation:
/// over-exposure raises the lower bound, under-exposure lowers the upper bound.
/// Once a channel has a well-exposed sample, its bounds are the hull of all
/// well-exposed radiance samples on that channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncompleteColor {
    bounds: [Interval; 3],
    exposed: [bool; 3],
}

/// Accumulated radiance estimate `Σ g(z_i) / Σ t_i·v_i`, kept per channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteColor {
    sum_g: Rgb,
    sum_tv: Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HdrColor {
    Incomplete(IncompleteColor),
    Complete(CompleteColor),
}

/// What an observation did to a color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Promoted,
    Updated,
    Bounded { conflict: bool },
    Ignored,
}

impl IncompleteColor {
    /// Fresh color spanning the full radiance range on every channel.
    pub fn new(range: Interval) -> Self {
        Self {
            bounds: [range; 3],
            exposed: [false; 3],
        }
    }

    pub fn from_bounds(bounds: [Interval; 3]) -> Self {
        Self {
            bounds,
            exposed: [false; 3],
        }
    }

    pub fn bounds(&self) -> [Interval; 3] {
        self.bounds
    }

    /// Whether each channel's bounds are a hull of well-exposed samples.
    pub fn exposed(&self) -> [bool; 3] {
        self.exposed
    }

    /// Refines the bounds with an observation. Returns true when saturation bounds
    /// crossed (possible under noise) and had to be collapsed.
    pub fn update(&mut self, obs: &Observation, curve: &ResponseCurve, program: &ExposureProgram, range: &Interval) -> bool {
        let x_min = program.x_min();
        let x_max = program.x_max();
        let mut conflict = false;
        for c in 0..3 {
            let tv = obs.t * obs.v[c];
            let b = &mut self.bounds[c];
            match (obs.class.channels[c], self.exposed[c]) {
                (ExposureClass::Well, false) => {
                    let l = (curve.inverse(c, obs.z[c]) / tv).clamp(range.lo, range.hi);
                    *b = Interval::point(l);
                    self.exposed[c] = true;
                }
                (ExposureClass::Well, true) => {
                    let l = (curve.inverse(c, obs.z[c]) / tv).clamp(range.lo, range.hi);
                    *b = b.include(l);
                }
                (ExposureClass::Over, false) => {
                    let lo = (x_max[c] / tv).clamp(range.lo, range.hi);
                    if lo > b.lo {
                        b.lo = lo;
                    }
                    if b.lo > b.hi {
                        log::trace!("crossed radiance bounds on channel {c}: lower {} > upper {}", b.lo, b.hi);
                        b.hi = b.lo;
                        conflict = true;
                    }
                }
                (ExposureClass::Under, false) => {
                    let hi = (x_min[c] / tv).clamp(range.lo, range.hi);
                    if hi < b.hi {
                        b.hi = hi;
                    }
                    if b.hi < b.lo {
                        log::trace!("crossed radiance bounds on channel {c}: upper {} < lower {}", b.hi, b.lo);
                        b.lo = b.hi;
                        conflict = true;
                    }
                }
                // saturated samples carry no information once a channel has been well-exposed
                (_, true) => {}
            }
        }
        conflict
    }
}

impl CompleteColor {
    /// Starts an estimate from a valid observation.
    pub fn promote(obs: &Observation, curve: &ResponseCurve) -> Result<Self> {
        if !obs.is_valid() {
            return Err(invalid("cannot promote a color from an invalid observation"));
        }
        Ok(Self {
            sum_g: curve.inverse_rgb(obs.z),
            sum_tv: obs.v.map(|v| obs.t * v),
        })
    }

    /// Rebuilds an estimate from a radiance triplet and a common weight.
    pub fn from_radiance(radiance: Rgb, weight: f64) -> Self {
        Self {
            sum_g: radiance.map(|l| l * weight),
            sum_tv: [weight; 3],
        }
    }

    /// Averages in a valid observation; invalid ones leave the color untouched.
    pub fn update(&mut self, obs: &Observation, curve: &ResponseCurve) -> bool {
        if !obs.is_valid() {
            return false;
        }
        for c in 0..3 {
            self.sum_g[c] += curve.inverse(c, obs.z[c]);
            self.sum_tv[c] += obs.t * obs.v[c];
        }
        true
    }

    pub fn radiance(&self) -> Rgb {
        std::array::from_fn(|c| self.sum_g[c] / self.sum_tv[c])
    }

    /// Common weight: the green channel's accumulated `Σ t·v`.
    pub fn weight(&self) -> f64 {
        self.sum_tv[1]
    }

    pub fn channel_weights(&self) -> Rgb {
        self.sum_tv
    }
}

impl HdrColor {
    pub fn new(range: Interval) -> Self {
        HdrColor::Incomplete(IncompleteColor::new(range))
    }

    pub fn is_complete(&self) -> bool {
        matches!(self, HdrColor::Complete(_))
    }

    pub fn as_complete(&self) -> Option<&CompleteColor> {
        match self {
            HdrColor::Complete(c) => Some(c),
            HdrColor::Incomplete(_) => None,
        }
    }

    pub fn as_incomplete(&self) -> Option<&IncompleteColor> {
        match self {
            HdrColor::Incomplete(c) => Some(c),
            HdrColor::Complete(_) => None,
        }
    }

    /// Routes an observation through the state machine.
    pub fn observe(&mut self, obs: &Observation, curve: &ResponseCurve, program: &ExposureProgram, range: &Interval) -> Outcome {
        match self {
            HdrColor::Incomplete(inc) => {
                if obs.is_valid() {
                    *self = HdrColor::Complete(CompleteColor::promote(obs, curve).expect("checked valid"));
                    Outcome::Promoted
                } else {
                    let conflict = inc.update(obs, curve, program, range);
                    Outcome::Bounded { conflict }
                }
            }
            HdrColor::Complete(done) => {
                if done.update(obs, curve) {
                    Outcome::Updated
                } else {
                    Outcome::Ignored
                }
            }
        }
    }
}
