//! Portable float map and pixmap readers/writers.

pub mod pfm;
pub mod ppm;
