//! Synthetic scenes and a simulated camera with exposure latency.

mod camera;
mod ground_truth;
mod scene;

pub use camera::{render, CameraSim};
pub use ground_truth::{batch_ground_truth, GroundTruth};
pub use scene::{make_scene, Scene, SceneKind};

use std::path::Path;

use crate::error::Result;
use crate::frame::LdrFrame;
use crate::io::ppm;

/// Writes frames as `frame_0000.ppm` plus exposure sidecars.
pub fn dump_frames(dir: impl AsRef<Path>, frames: &[LdrFrame]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    for (i, frame) in frames.iter().enumerate() {
        ppm::save_frame(dir.join(format!("frame_{i:04}.ppm")), frame)?;
    }
    Ok(())
}
