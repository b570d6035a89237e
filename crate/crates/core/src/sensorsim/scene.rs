use std::path::{Path, PathBuf};

use crate::error::{format_err, invalid, Result};
use crate::frame::Rgb;
use crate::io::pfm::{self, PfmImage};

/// Ground-truth linear RGB radiance for every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    width: usize,
    height: usize,
    radiance: Vec<Rgb>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneKind {
    /// Radiance grows geometrically from `low` (left column) to `high` (right column).
    LogGradient { low: f64, high: f64 },
    /// Alternating square cells of size `cell` pixels.
    Checkerboard { dark: f64, bright: f64, cell: usize },
    /// Left half `dark`, right half `bright`.
    BrightDarkSplit { dark: f64, bright: f64 },
    /// Three-channel PFM of linear radiance.
    File(PathBuf),
}

impl Scene {
    pub fn new(width: usize, height: usize, radiance: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 || radiance.len() != width * height {
            return Err(invalid(format!(
                "scene {width}x{height} needs {} radiances, got {}",
                width * height,
                radiance.len()
            )));
        }
        if radiance.iter().flatten().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(invalid("scene radiances must be finite and non-negative"));
        }
        Ok(Self {
            width,
            height,
            radiance,
        })
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

    pub fn radiance(&self) -> &[Rgb] {
        &self.radiance
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.radiance[y * self.width + x]
    }

    /// Ratio of the brightest to the darkest non-zero radiance.
    pub fn dynamic_range(&self) -> f64 {
        let values = self.radiance.iter().flatten().copied().filter(|l| *l > 0.0);
        let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), l| (lo.min(l), hi.max(l)));
        if hi > 0.0 {
            hi / lo
        } else {
            1.0
        }
    }

    pub fn from_pfm(image: &PfmImage) -> Result<Self> {
        if image.channels != 3 {
            return Err(format_err("scene PFM", "scenes need 3 channels"));
        }
        let radiance = image
            .data
            .chunks_exact(3)
            .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
            .collect();
        Self::new(image.width, image.height, radiance)
    }

    pub fn to_pfm(&self) -> PfmImage {
        PfmImage {
            width: self.width,
            height: self.height,
            channels: 3,
            data: self.radiance.iter().flatten().map(|v| *v as f32).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_pfm(&pfm::load(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        pfm::save(path, &self.to_pfm())
    }
}

/// Builds a deterministic synthetic scene. `width`/`height` are ignored for files.
pub fn make_scene(kind: &SceneKind, width: usize, height: usize) -> Result<Scene> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(invalid(format!("{name} must be positive, got {v}")))
        }
    };
    match kind {
        SceneKind::LogGradient { low, high } => {
            positive("low", *low)?;
            positive("high", *high)?;
            if high < low {
                return Err(invalid("log-gradient needs low <= high"));
            }
            let denom = width.saturating_sub(1).max(1) as f64;
            let columns: Vec<f64> = (0..width)
                .map(|x| low * (high / low).powf(x as f64 / denom))
                .collect();
            let radiance = (0..height)
                .flat_map(|_| columns.iter().map(|l| [*l; 3]))
                .collect();
            Scene::new(width, height, radiance)
        }
        SceneKind::Checkerboard { dark, bright, cell } => {
            positive("dark", *dark)?;
            positive("bright", *bright)?;
            if *cell == 0 {
                return Err(invalid("checkerboard cell size must be >= 1"));
            }
            let radiance = (0..height)
                .flat_map(|y| {
                    (0..width).map(move |x| {
                        if (x / cell + y / cell) % 2 == 0 {
                            [*dark; 3]
                        } else {
                            [*bright; 3]
                        }
                    })
                })
                .collect();
            Scene::new(width, height, radiance)
        }
        SceneKind::BrightDarkSplit { dark, bright } => {
            positive("dark", *dark)?;
            positive("bright", *bright)?;
            let radiance = (0..height)
                .flat_map(|_| (0..width).map(|x| if x < width / 2 { [*dark; 3] } else { [*bright; 3] }))
                .collect();
            Scene::new(width, height, radiance)
        }
        SceneKind::File(path) => Scene::load(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_gradient_columns() {
        let scene = make_scene(&SceneKind::LogGradient { low: 0.001, high: 1.0 }, 256, 2).unwrap();
        for x in [0usize, 1, 100, 255] {
            let expected = 0.001 * 1000f64.powf(x as f64 / 255.0);
            assert!((scene.get(x, 1)[0] - expected).abs() <= 1e-15 * expected.max(1.0));
        }
        assert!((scene.dynamic_range() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn checkerboard_two_levels() {
        let scene = make_scene(
            &SceneKind::Checkerboard {
                dark: 0.01,
                bright: 0.9,
                cell: 2,
            },
            4,
            4,
        )
        .unwrap();
        assert_eq!(scene.get(0, 0), [0.01; 3]);
        assert_eq!(scene.get(2, 0), [0.9; 3]);
        assert_eq!(scene.get(2, 2), [0.01; 3]);
        let mut levels: Vec<f64> = scene.radiance().iter().map(|l| l[0]).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        assert_eq!(levels, vec![0.01, 0.9]);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.pfm");
        let scene = make_scene(&SceneKind::BrightDarkSplit { dark: 0.25, bright: 8.0 }, 5, 3).unwrap();
        scene.save(&path).unwrap();
        let back = make_scene(&SceneKind::File(path), 0, 0).unwrap();
        assert_eq!(back, scene);
    }

    #[test]
    fn invalid_params() {
        assert!(make_scene(&SceneKind::LogGradient { low: 0.0, high: 1.0 }, 4, 4).is_err());
        assert!(make_scene(&SceneKind::LogGradient { low: 2.0, high: 1.0 }, 4, 4).is_err());
        assert!(make_scene(
            &SceneKind::Checkerboard {
                dark: 0.1,
                bright: 1.0,
                cell: 0
            },
            4,
            4
        )
        .is_err());
        assert!(make_scene(&SceneKind::BrightDarkSplit { dark: 0.1, bright: 1.0 }, 0, 4).is_err());
    }
}
