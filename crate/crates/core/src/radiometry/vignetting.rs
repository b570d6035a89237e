use std::path::Path;

use crate::error::{format_err, invalid, Result};
use crate::frame::Rgb;
use crate::io::pfm::{self, PfmImage};

/// Per-pixel, per-channel attenuation factors in `(0, 1]`.
///
/// Each channel is normalized on construction so that its largest factor is exactly 1.
/// Photo-response non-uniformity is folded into the same factors.
#[derive(Debug, Clone, PartialEq)]
pub struct VignettingMap {
    width: usize,
    height: usize,
    data: Vec<Rgb>,
}

impl VignettingMap {
    pub fn new(width: usize, height: usize, mut data: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(invalid(format!(
                "vignetting map {width}x{height} needs {} entries, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().flatten().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(invalid("vignetting factors must lie in (0, 1]"));
        }
        for c in 0..3 {
            let peak = data.iter().map(|v| v[c]).fold(0.0, f64::max);
            if peak != 1.0 {
                data.iter_mut().for_each(|v| v[c] /= peak);
            }
        }
        Ok(Self { width, height, data })
    }

    pub fn uniform(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![[1.0; 3]; width * height],
        }
    }

    /// Radial fall-off `v(r) = (1 + (r/r0)^2)^-2` around the image center, with `r0` chosen
    /// so the corners are attenuated to `corner` (before unit-peak normalization).
    pub fn radial(width: usize, height: usize, corner: f64) -> Result<Self> {
        if !(corner > 0.0 && corner <= 1.0) {
            return Err(invalid(format!("corner attenuation must lie in (0, 1], got {corner}")));
        }
        if corner == 1.0 {
            return Ok(Self::uniform(width, height));
        }
        let cx = (width as f64 - 1.0) / 2.0;
        let cy = (height as f64 - 1.0) / 2.0;
        let r_corner2 = cx * cx + cy * cy;
        // (1 + k)^2 = 1/corner at the corner
        let k = corner.powf(-0.5) - 1.0;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let rel = if r_corner2 > 0.0 {
                    (dx * dx + dy * dy) / r_corner2
                } else {
                    0.0
                };
                let v = (1.0 + k * rel).powi(-2);
                data.push([v; 3]);
            }
        }
        Self::new(width, height, data)
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

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.data[y * self.width + x]
    }

    pub fn values(&self) -> &[Rgb] {
        &self.data
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().flatten().copied().fold(1.0, f64::min)
    }

    pub fn from_pfm(image: &PfmImage) -> Result<Self> {
        let data = match image.channels {
            1 => image.data.iter().map(|v| [*v as f64; 3]).collect(),
            3 => image
                .data
                .chunks_exact(3)
                .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
                .collect(),
            n => return Err(format_err("vignetting PFM", format!("{n} channels"))),
        };
        Self::new(image.width, image.height, data)
            .map_err(|e| format_err("vignetting PFM", e.to_string()))
    }

    pub fn to_pfm(&self) -> PfmImage {
        PfmImage {
            width: self.width,
            height: self.height,
            channels: 3,
            data: self.data.iter().flatten().map(|v| *v as f32).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_pfm(&pfm::load(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        pfm::save(path, &self.to_pfm())
    }
}
