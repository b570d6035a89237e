use crate::error::{invalid, Result};

/// Linear RGB triplet.
pub type Rgb = [f64; 3];

/// 8-bit RGB image tagged with the exposure time it was captured at.
#[derive(Debug, Clone, PartialEq)]
pub struct LdrFrame {
    width: usize,
    height: usize,
    exposure: f64,
    pixels: Vec<[u8; 3]>,
}

impl LdrFrame {
    pub fn new(width: usize, height: usize, exposure: f64, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(invalid(format!(
                "frame {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if !(exposure > 0.0 && exposure.is_finite()) {
            return Err(invalid(format!("exposure time must be positive, got {exposure}")));
        }
        Ok(Self {
            width,
            height,
            exposure,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, exposure: f64, z: [u8; 3]) -> Result<Self> {
        Self::new(width, height, exposure, vec![z; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Exposure time in seconds.
    pub fn exposure(&self) -> f64 {
        self.exposure
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}
