use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerConfig, SweepKind, TieBreak};
use crate::error::{Error, Result};
use crate::radiometry::{ExposureProgram, NoiseModel, ResponseCurve, VignettingMap};
use crate::sensorsim::{make_scene, Scene, SceneKind};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Full description of a controller race. Parsed from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Frames captured per controller run.
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default)]
    pub error_metric: ErrorMetric,
    pub scene: SceneSpec,
    #[serde(default)]
    pub camera: CameraSpec,
    #[serde(default)]
    pub control: ControlSpec,
    pub controllers: Vec<ControllerSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seed() -> u64 {
    1
}

fn default_frames() -> usize {
    40
}

/// Reference used for the per-frame reconstruction error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMetric {
    /// Relative error against a noise-free bracketing sweep fused offline.
    #[default]
    GroundTruth,
    /// Relative error against the scene radiance itself.
    Scene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SceneSpec {
    LogGradient {
        width: usize,
        height: usize,
        low: f64,
        high: f64,
    },
    Checkerboard {
        width: usize,
        height: usize,
        dark: f64,
        bright: f64,
        cell: usize,
    },
    BrightDarkSplit {
        width: usize,
        height: usize,
        dark: f64,
        bright: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ResponseSpec {
    Linear,
    Gamma { gamma: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VignettingSpec {
    Uniform,
    /// `corner` is the attenuation at the image corners.
    Radial { corner: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSpec {
    pub response: ResponseSpec,
    pub vignetting: VignettingSpec,
    /// Shot-noise coefficients per channel.
    pub noise: [f64; 3],
    /// Explicit exposure times; when absent a geometric series is used.
    pub times: Option<Vec<f64>>,
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
    pub z_lo: u8,
    pub z_hi: u8,
    pub lag: usize,
    /// Defaults to the middle member of the exposure set.
    pub initial_exposure: Option<f64>,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            response: ResponseSpec::Linear,
            vignetting: VignettingSpec::Radial { corner: 0.5 },
            noise: [0.0005, 0.0008, 0.0015],
            times: None,
            t_min: 0.001,
            t_max: 0.128,
            count: 16,
            z_lo: ExposureProgram::DEFAULT_Z_LO,
            z_hi: ExposureProgram::DEFAULT_Z_HI,
            lag: 3,
            initial_exposure: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSpec {
    pub beta: f64,
    /// Minimum number of frames between two decisions.
    pub throttle: usize,
    /// Wait until the previous command has taken effect before deciding again.
    pub lag_aware: bool,
    pub tie_break: TieBreakSpec,
}

impl Default for ControlSpec {
    fn default() -> Self {
        Self {
            beta: 1.0,
            throttle: 3,
            lag_aware: true,
            tie_break: TieBreakSpec::Larger,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreakSpec {
    Larger,
    Smaller,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    MapAware,
    AdditiveUp,
    AdditiveDown,
    MultiplicativeUp,
    MultiplicativeDown,
}

impl ControllerKind {
    pub fn sweep(self) -> Option<SweepKind> {
        match self {
            ControllerKind::MapAware => None,
            ControllerKind::AdditiveUp => Some(SweepKind::AdditiveUp),
            ControllerKind::AdditiveDown => Some(SweepKind::AdditiveDown),
            ControllerKind::MultiplicativeUp => Some(SweepKind::MultiplicativeUp),
            ControllerKind::MultiplicativeDown => Some(SweepKind::MultiplicativeDown),
        }
    }

    fn label(self) -> &'static str {
        match self {
            ControllerKind::MapAware => "map-aware",
            ControllerKind::AdditiveUp => "additive-up",
            ControllerKind::AdditiveDown => "additive-down",
            ControllerKind::MultiplicativeUp => "multiplicative-up",
            ControllerKind::MultiplicativeDown => "multiplicative-down",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    /// Unique label used in CSV rows and file names. Defaults to the kind.
    #[serde(default)]
    pub name: Option<String>,
    /// Sweep step: seconds for additive sweeps, a factor for multiplicative ones.
    /// Defaults to an eighth of the exposure span, or a factor of 2.
    #[serde(default)]
    pub step: Option<f64>,
}

impl ControllerSpec {
    pub fn new(kind: ControllerKind) -> Self {
        Self {
            kind,
            name: None,
            step: None,
        }
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.label().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Per-frame records, relative to the output directory.
    pub csv: PathBuf,
    pub plot: PathBuf,
    /// Write `trace_<controller>.csv` with the utilities of every decision.
    pub traces: bool,
    /// Write `<controller>.hdrmap` with the final packed map.
    pub snapshots: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            csv: "frames.csv".into(),
            plot: "controllers.svg".into(),
            traces: true,
            snapshots: true,
        }
    }
}

impl ExperimentConfig {
    /// The standard race: a three-decade log gradient, sixteen exposures from
    /// 1 ms to 128 ms, the map-aware controller and four sweeps.
    ///
    /// β is raised to 100 because `U_r` sums `t / W` terms that reach the
    /// hundreds per pixel early on, which would otherwise drown the pixel-count
    /// scale of `U_e`.
    pub fn standard_race() -> Self {
        let sweep = |kind| ControllerSpec::new(kind);
        Self {
            seed: default_seed(),
            frames: default_frames(),
            error_metric: ErrorMetric::GroundTruth,
            scene: SceneSpec::LogGradient {
                width: 64,
                height: 48,
                low: 1.0,
                high: 1000.0,
            },
            camera: CameraSpec::default(),
            control: ControlSpec {
                beta: 100.0,
                ..Default::default()
            },
            controllers: vec![
                ControllerSpec::new(ControllerKind::MapAware),
                sweep(ControllerKind::MultiplicativeUp),
                sweep(ControllerKind::MultiplicativeDown),
                sweep(ControllerKind::AdditiveUp),
                sweep(ControllerKind::AdditiveDown),
            ],
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    /// Loads a config file; relative scene/curve/vignetting paths resolve
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let SceneSpec::File { path } = &mut self.scene {
            fix(path);
        }
        if let ResponseSpec::File { path } = &mut self.camera.response {
            fix(path);
        }
        if let VignettingSpec::File { path } = &mut self.camera.vignetting {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(config_err("frames must be >= 1"));
        }
        if self.controllers.is_empty() {
            return Err(config_err("at least one controller is required"));
        }
        let mut names = HashSet::new();
        for spec in &self.controllers {
            let name = spec.name();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(config_err(format!("controller name {name:?} must be non-empty [A-Za-z0-9._-]")));
            }
            if !names.insert(name.clone()) {
                return Err(config_err(format!("duplicate controller name {name:?}")));
            }
            if spec.kind == ControllerKind::MapAware && spec.step.is_some() {
                return Err(config_err(format!("controller {name:?}: step only applies to sweeps")));
            }
        }
        if self.control.throttle == 0 {
            return Err(config_err("throttle must be >= 1"));
        }
        self.controller_config()?;
        let c = &self.camera;
        if c.noise.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(config_err("noise coefficients must be finite and >= 0"));
        }
        if c.z_lo >= c.z_hi {
            return Err(config_err("z_lo must be below z_hi"));
        }
        if c.times.is_none() && !(c.t_min > 0.0 && c.t_max >= c.t_min && c.count >= 1) {
            return Err(config_err("need 0 < t_min <= t_max and count >= 1"));
        }
        Ok(())
    }

    pub fn controller_config(&self) -> Result<ControllerConfig> {
        let config = ControllerConfig {
            beta: self.control.beta,
            tie_break: match self.control.tie_break {
                TieBreakSpec::Larger => TieBreak::Larger,
                TieBreakSpec::Smaller => TieBreak::Smaller,
            },
            lag_aware: self.control.lag_aware,
        };
        config.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(config)
    }
}

/// Everything needed to simulate the camera, built from a config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub scene: Scene,
    pub curve: ResponseCurve,
    pub vmap: VignettingMap,
    pub noise: NoiseModel,
    pub program: ExposureProgram,
    pub initial_exposure: f64,
}

impl Setup {
    /// Builds the scene and camera model. Invalid parameters are config errors;
    /// unreadable files stay I/O errors.
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        let as_config = |e: Error| match e {
            Error::Io(_) => e,
            other => config_err(other.to_string()),
        };
        let scene = match &config.scene {
            SceneSpec::LogGradient {
                width,
                height,
                low,
                high,
            } => make_scene(&SceneKind::LogGradient { low: *low, high: *high }, *width, *height),
            SceneSpec::Checkerboard {
                width,
                height,
                dark,
                bright,
                cell,
            } => make_scene(
                &SceneKind::Checkerboard {
                    dark: *dark,
                    bright: *bright,
                    cell: *cell,
                },
                *width,
                *height,
            ),
            SceneSpec::BrightDarkSplit {
                width,
                height,
                dark,
                bright,
            } => make_scene(
                &SceneKind::BrightDarkSplit {
                    dark: *dark,
                    bright: *bright,
                },
                *width,
                *height,
            ),
            SceneSpec::File { path } => make_scene(&SceneKind::File(path.clone()), 0, 0),
        }
        .map_err(as_config)?;
        let cam = &config.camera;
        let curve = match &cam.response {
            ResponseSpec::Linear => Ok(ResponseCurve::linear()),
            ResponseSpec::Gamma { gamma } => ResponseCurve::gamma(*gamma),
            ResponseSpec::File { path } => ResponseCurve::load(path),
        }
        .map_err(as_config)?;
        let (w, h) = scene.dims();
        let vmap = match &cam.vignetting {
            VignettingSpec::Uniform => Ok(VignettingMap::uniform(w, h)),
            VignettingSpec::Radial { corner } => VignettingMap::radial(w, h, *corner),
            VignettingSpec::File { path } => VignettingMap::load(path),
        }
        .map_err(as_config)?;
        if vmap.dims() != (w, h) {
            return Err(config_err(format!(
                "vignetting map is {}x{} but the scene is {w}x{h}",
                vmap.width(),
                vmap.height()
            )));
        }
        let noise = NoiseModel::new(cam.noise).map_err(as_config)?;
        let times = match &cam.times {
            Some(times) => times.clone(),
            None => ExposureProgram::geometric_times(cam.t_min, cam.t_max, cam.count).map_err(as_config)?,
        };
        let program = ExposureProgram::with_thresholds(times, &curve, cam.z_lo, cam.z_hi).map_err(as_config)?;
        let initial_exposure = match cam.initial_exposure {
            Some(t) => program.canonical(t).map_err(as_config)?,
            None => program.times()[(program.times().len() - 1) / 2],
        };
        Ok(Self {
            scene,
            curve,
            vmap,
            noise,
            program,
            initial_exposure,
        })
    }
}
