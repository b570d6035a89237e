use crate::error::{invalid, Result};
use crate::radiometry::ExposureProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepKind {
    AdditiveUp,
    AdditiveDown,
    MultiplicativeUp,
    MultiplicativeDown,
}

impl SweepKind {
    pub fn is_multiplicative(&self) -> bool {
        matches!(self, SweepKind::MultiplicativeUp | SweepKind::MultiplicativeDown)
    }

    pub fn is_upward(&self) -> bool {
        matches!(self, SweepKind::AdditiveUp | SweepKind::MultiplicativeUp)
    }
}

/// Baseline controller that sweeps the exposure range with fixed additive or
/// multiplicative steps, wrapping around at the end of the range.
///
/// The sweep keeps its own continuous position and reports the nearest member of
/// the program (nearest in log space for multiplicative sweeps), so small additive
/// steps still make progress between widely spaced members.
#[derive(Debug, Clone)]
pub struct SweepController {
    kind: SweepKind,
    step: f64,
    times: Vec<f64>,
    position: Option<f64>,
}

const EDGE_RTOL: f64 = 1e-9;

impl SweepController {
    /// `step` is the additive increment in seconds, or the multiplicative factor.
    pub fn new(kind: SweepKind, program: &ExposureProgram, step: f64) -> Result<Self> {
        if kind.is_multiplicative() && !(step > 1.0 && step.is_finite()) {
            return Err(invalid(format!("multiplicative sweep needs a factor > 1, got {step}")));
        }
        if !kind.is_multiplicative() && !(step > 0.0 && step.is_finite()) {
            return Err(invalid(format!("additive sweep needs a step > 0, got {step}")));
        }
        Ok(Self {
            kind,
            step,
            times: program.times().to_vec(),
            position: None,
        })
    }

    pub fn kind(&self) -> SweepKind {
        self.kind
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn t_min(&self) -> f64 {
        self.times[0]
    }

    fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn snap(&self, t: f64) -> f64 {
        let distance = |ti: f64| {
            if self.kind.is_multiplicative() {
                (ti.ln() - t.ln()).abs()
            } else {
                (ti - t).abs()
            }
        };
        *self
            .times
            .iter()
            .min_by(|a, b| distance(**a).total_cmp(&distance(**b)))
            .unwrap()
    }

    pub fn next_exposure(&mut self) -> f64 {
        let (lo, hi) = (self.t_min(), self.t_max());
        let next = match self.position {
            None => {
                if self.kind.is_upward() {
                    lo
                } else {
                    hi
                }
            }
            Some(p) => {
                let stepped = match self.kind {
                    SweepKind::AdditiveUp => p + self.step,
                    SweepKind::AdditiveDown => p - self.step,
                    SweepKind::MultiplicativeUp => p * self.step,
                    SweepKind::MultiplicativeDown => p / self.step,
                };
                if stepped > hi * (1.0 + EDGE_RTOL) {
                    lo
                } else if stepped < lo * (1.0 - EDGE_RTOL) {
                    hi
                } else {
                    stepped
                }
            }
        };
        self.position = Some(next);
        self.snap(next)
    }
}
