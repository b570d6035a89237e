//! Controller races on a simulated static camera.

mod config;
mod output;
mod run;

pub use config::{
    CameraSpec, ControlSpec, ControllerKind, ControllerSpec, ErrorMetric, ExperimentConfig, OutputSpec,
    ResponseSpec, SceneSpec, Setup, TieBreakSpec, VignettingSpec,
};
pub use output::{
    emit_csv, emit_plot, read_csv, render_plot, write_csv, write_outputs, write_trace_csv, CSV_HEADER,
    TRACE_HEADER,
};
pub use run::{mean_relative_error, reference, run_experiment, ExperimentOutput, FrameRecord, RunOutput, TraceRow};
