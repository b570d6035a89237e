use rayon::prelude::*;

use crate::controller::{
    ControllerInput, ExposureController, MapAwareController, SweepBaseline, SweepController, SweepKind,
};
use crate::error::{Error, Result};
use crate::fusion::{FusionStats, MapBuffer, PackingScale};
use crate::harness::config::{ControllerSpec, ErrorMetric, ExperimentConfig, Setup};
use crate::sensorsim::{batch_ground_truth, render, CameraSim, GroundTruth};

/// Metrics after fusing one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame: usize,
    pub controller: String,
    /// Most recent commanded exposure, or the initial exposure before any command.
    pub t_cmd: f64,
    /// Exposure the frame was captured with.
    pub t_eff: f64,
    /// Whether `t_eff` resulted from a controller command.
    pub commanded: bool,
    pub frac_complete: f64,
    /// NaN while no complete pixel can be compared.
    pub mean_rel_err: f64,
    pub stats: FusionStats,
}

/// Utilities of one candidate at one decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub frame: usize,
    pub t_candidate: f64,
    pub exploration: f64,
    pub refinement: f64,
    pub total: f64,
    pub chosen: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub controller: String,
    pub map: MapBuffer,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// Grouped by controller in config order, then by frame.
    pub records: Vec<FrameRecord>,
    pub runs: Vec<RunOutput>,
    pub reference: GroundTruth,
    pub scale: PackingScale,
}

/// Mean of `|L̄ - L*| / L*` over complete cells and channels with a valid,
/// positive reference. NaN when nothing qualifies.
pub fn mean_relative_error(map: &MapBuffer, reference: &GroundTruth) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, cell) in map.cells().iter().enumerate() {
        let Some(c) = cell.as_complete() else { continue };
        if !reference.valid[i] {
            continue;
        }
        let estimate = c.radiance();
        for (l, truth) in estimate.iter().zip(reference.radiance[i]) {
            if truth > 0.0 {
                sum += (l - truth).abs() / truth;
                count += 1;
            }
        }
    }
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Reference radiance for the error metric.
pub fn reference(setup: &Setup, metric: ErrorMetric) -> Result<GroundTruth> {
    let (width, height) = setup.scene.dims();
    match metric {
        ErrorMetric::Scene => Ok(GroundTruth {
            width,
            height,
            radiance: setup.scene.radiance().to_vec(),
            valid: vec![true; width * height],
        }),
        ErrorMetric::GroundTruth => {
            let frames = setup
                .program
                .times()
                .iter()
                .map(|&t| {
                    render(
                        &setup.scene,
                        &setup.curve,
                        &setup.vmap,
                        &crate::radiometry::NoiseModel::noiseless(),
                        t,
                        0,
                        0,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            batch_ground_truth(
                &frames,
                &setup.curve,
                &setup.vmap,
                &crate::radiometry::NoiseModel::noiseless(),
                &setup.program,
            )
        }
    }
}

fn build_controller(
    spec: &ControllerSpec,
    config: &ExperimentConfig,
    setup: &Setup,
) -> Result<Box<dyn ExposureController>> {
    let name = spec.name();
    match spec.kind.sweep() {
        None => Ok(Box::new(MapAwareController::new(name, config.controller_config()?)?)),
        Some(kind) => {
            let step = spec.step.unwrap_or(match kind {
                SweepKind::MultiplicativeUp | SweepKind::MultiplicativeDown => 2.0,
                _ => (setup.program.t_max() - setup.program.t_min()) / 8.0,
            });
            let sweep = SweepController::new(kind, &setup.program, step)
                .map_err(|e| Error::Config(format!("controller {name:?}: {e}")))?;
            Ok(Box::new(SweepBaseline::new(name, sweep)))
        }
    }
}

/// Runs every configured controller against the same simulated camera and seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let setup = Setup::from_config(config)?;
    let reference = reference(&setup, config.error_metric)?;
    let scale = PackingScale::for_program(&setup.program, setup.vmap.min_value())?;
    let controllers = config
        .controllers
        .iter()
        .map(|spec| build_controller(spec, config, &setup))
        .collect::<Result<Vec<_>>>()?;
    let runs = controllers
        .into_par_iter()
        .map(|controller| run_controller(controller, config, &setup, &reference, &scale))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(config.frames * runs.len());
    let mut outputs = Vec::with_capacity(runs.len());
    for (run_records, output) in runs {
        records.extend(run_records);
        outputs.push(output);
    }
    Ok(ExperimentOutput {
        records,
        runs: outputs,
        reference,
        scale,
    })
}

fn run_controller(
    mut controller: Box<dyn ExposureController>,
    config: &ExperimentConfig,
    setup: &Setup,
    reference: &GroundTruth,
    scale: &PackingScale,
) -> Result<(Vec<FrameRecord>, RunOutput)> {
    let name = controller.name().to_string();
    let (width, height) = setup.scene.dims();
    let mut camera = CameraSim::new(
        setup.curve.clone(),
        setup.vmap.clone(),
        setup.noise,
        setup.program.clone(),
        config.camera.lag,
        setup.initial_exposure,
        config.seed,
    )?;
    let mut map = MapBuffer::new(width, height, scale.range());
    let mut records = Vec::with_capacity(config.frames);
    let mut trace = Vec::new();
    let mut t_cmd = setup.initial_exposure;
    let mut last_decision: Option<usize> = None;

    for frame_index in 0..config.frames {
        let frame = camera.capture(&setup.scene)?;
        let stats = map.fuse_frame(&frame, &setup.vmap, &setup.curve, &setup.program)?;
        if stats.conflicts > 0 {
            log::debug!("{name} frame {frame_index}: {} crossed bounds collapsed", stats.conflicts);
        }

        let due = last_decision.is_none_or(|d| frame_index - d >= config.control.throttle);
        let ready = !config.control.lag_aware || !camera.has_pending();
        if due && ready {
            let view = map.render();
            let input = ControllerInput::new(&view, &setup.vmap, &setup.program)?;
            let decision = controller.decide(&input);
            trace.extend(decision.trace.iter().map(|r| TraceRow {
                frame: frame_index,
                t_candidate: r.t,
                exploration: r.exploration,
                refinement: r.refinement,
                total: r.total,
                chosen: r.chosen,
            }));
            camera.command_exposure(decision.t)?;
            t_cmd = decision.t;
            last_decision = Some(frame_index);
        }

        records.push(FrameRecord {
            frame: frame_index,
            controller: name.clone(),
            t_cmd,
            t_eff: frame.exposure(),
            commanded: camera.is_commanded(),
            frac_complete: map.fraction_complete(),
            mean_rel_err: mean_relative_error(&map, reference),
            stats,
        });
    }
    Ok((
        records,
        RunOutput {
            controller: name,
            map,
            trace,
        },
    ))
}
