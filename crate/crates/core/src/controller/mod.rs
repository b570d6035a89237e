//! Exposure-time controllers.
//!
//! The map-aware controller scores every exposure time `t` of the program with
//! `β·U_e(t) + U_r(t)`: the expected number of incomplete points that become complete,
//! plus the weight gain `Σ t / W(u)` of complete points that would be observed validly.

mod sweep;
mod utility;

pub use sweep::{SweepController, SweepKind};
pub use utility::{
    exploration_utility, pixel_detectable, refinement_utility, saturation_probability, ControllerInput,
    TIE_RTOL,
};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Larger,
    Smaller,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Scale of the exploration term.
    pub beta: f64,
    pub tie_break: TieBreak,
    /// Only issue a new command once the previous one has taken effect.
    pub lag_aware: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            tie_break: TieBreak::Larger,
            lag_aware: true,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Utilities of one candidate exposure time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityRecord {
    pub t: f64,
    pub exploration: f64,
    pub refinement: f64,
    pub total: f64,
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub t: f64,
    pub trace: Vec<UtilityRecord>,
}

/// Index of the winning candidate: every total within `TIE_RTOL` of the maximum
/// counts as tied, and the tie is broken by exposure time.
pub(crate) fn argmax_with_ties(totals: &[f64], tie_break: TieBreak) -> usize {
    let best = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_RTOL * best.abs();
    let mut tied = totals.iter().enumerate().filter(|(_, u)| **u >= best - tol).map(|(i, _)| i);
    match tie_break {
        TieBreak::Larger => tied.next_back().unwrap(),
        TieBreak::Smaller => tied.next().unwrap(),
    }
}

/// Picks the exposure time maximizing `β·U_e + U_r` over the whole program.
pub fn select_exposure(input: &ControllerInput, config: &ControllerConfig) -> Selection {
    let times = input.program.times();
    let mut trace: Vec<UtilityRecord> = times
        .iter()
        .map(|&t| {
            let exploration = utility::exploration(t, input);
            let refinement = utility::refinement(t, input);
            UtilityRecord {
                t,
                exploration,
                refinement,
                total: config.beta * exploration + refinement,
                chosen: false,
            }
        })
        .collect();
    let totals: Vec<f64> = trace.iter().map(|r| r.total).collect();
    let best = argmax_with_ties(&totals, config.tie_break);
    trace[best].chosen = true;
    Selection { t: times[best], trace }
}

/// A controller decision plus the utilities that led to it (empty for baselines).
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub t: f64,
    pub trace: Vec<UtilityRecord>,
}

pub trait ExposureController: Send {
    fn name(&self) -> &str;
    fn decide(&mut self, input: &ControllerInput) -> Decision;
}

/// The map-aware information-gain controller.
#[derive(Debug, Clone)]
pub struct MapAwareController {
    name: String,
    config: ControllerConfig,
}

impl MapAwareController {
    pub fn new(name: impl Into<String>, config: ControllerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            name: name.into(),
            config,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }
}

impl ExposureController for MapAwareController {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&mut self, input: &ControllerInput) -> Decision {
        let s = select_exposure(input, &self.config);
        Decision { t: s.t, trace: s.trace }
    }
}

/// Named sweep baseline.
#[derive(Debug, Clone)]
pub struct SweepBaseline {
    name: String,
    sweep: SweepController,
}

impl SweepBaseline {
    pub fn new(name: impl Into<String>, sweep: SweepController) -> Self {
        Self {
            name: name.into(),
            sweep,
        }
    }
}

impl ExposureController for SweepBaseline {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&mut self, _input: &ControllerInput) -> Decision {
        Decision {
            t: self.sweep.next_exposure(),
            trace: Vec::new(),
        }
    }
}
