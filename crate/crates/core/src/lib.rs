//! Incremental HDR color fusion for LDR cameras with a map-aware exposure controller.
//!
//! A static camera captures 8-bit frames at exposure times chosen from a fixed set.
//! [`fusion::MapBuffer`] turns them into per-pixel HDR radiance: bounds while a pixel
//! has only been seen saturated, an inverse-variance weighted estimate afterwards.
//! [`controller`] picks the next exposure time to complete and refine the map as fast
//! as possible, and [`sensorsim`] plus [`harness`] race it against sweep baselines.

pub mod controller;
pub mod error;
pub mod frame;
pub mod fusion;
pub mod harness;
pub mod interval;
pub mod io;
pub mod radiometry;
pub mod sensorsim;

pub use error::{Error, Result};
pub use frame::{LdrFrame, Rgb};
pub use interval::Interval;
