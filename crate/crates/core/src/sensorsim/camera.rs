use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::LdrFrame;
use crate::radiometry::{ExposureProgram, NoiseModel, ResponseCurve, VignettingMap};
use crate::sensorsim::Scene;

/// Simulated camera with radiometric forward model and command latency.
///
/// Commanded exposures take effect exactly `lag` captures after the capture
/// following the command. With lag 0 the next capture already uses them.
#[derive(Debug, Clone)]
pub struct CameraSim {
    curve: ResponseCurve,
    vmap: VignettingMap,
    noise: NoiseModel,
    program: ExposureProgram,
    lag: usize,
    seed: u64,
    current: f64,
    captures: u64,
    commanded: bool,
    /// (capture index at which it applies, exposure)
    pending: VecDeque<(u64, f64)>,
}

impl CameraSim {
    pub fn new(
        curve: ResponseCurve,
        vmap: VignettingMap,
        noise: NoiseModel,
        program: ExposureProgram,
        lag: usize,
        initial_exposure: f64,
        seed: u64,
    ) -> Result<Self> {
        let current = program.canonical(initial_exposure)?;
        Ok(Self {
            curve,
            vmap,
            noise,
            program,
            lag,
            seed,
            current,
            captures: 0,
            commanded: false,
            pending: VecDeque::new(),
        })
    }

    pub fn program(&self) -> &ExposureProgram {
        &self.program
    }

    pub fn curve(&self) -> &ResponseCurve {
        &self.curve
    }

    pub fn vignetting(&self) -> &VignettingMap {
        &self.vmap
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Number of frames captured so far.
    pub fn captures(&self) -> u64 {
        self.captures
    }

    /// Exposure the next capture would use if no pending command matures.
    pub fn current_exposure(&self) -> f64 {
        self.current
    }

    /// True once any commanded exposure has taken effect.
    pub fn is_commanded(&self) -> bool {
        self.commanded
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    pub fn has_pending(&self) -> bool {
        !self.pending.is_empty()
    }

    /// Queues an exposure change. A second command before the next capture
    /// replaces the first one.
    pub fn command_exposure(&mut self, t: f64) -> Result<()> {
        let t = self.program.canonical(t)?;
        let at = self.captures + self.lag as u64;
        match self.pending.back_mut() {
            Some(last) if last.0 == at => last.1 = t,
            _ => self.pending.push_back((at, t)),
        }
        Ok(())
    }

    fn apply_due(&mut self) {
        while let Some(&(at, t)) = self.pending.front() {
            if at > self.captures {
                break;
            }
            self.current = t;
            self.commanded = true;
            self.pending.pop_front();
        }
    }

    /// Captures one frame of `scene` at the effective exposure.
    pub fn capture(&mut self, scene: &Scene) -> Result<LdrFrame> {
        if scene.dims() != self.vmap.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.vmap.dims(),
                actual: scene.dims(),
            });
        }
        self.apply_due();
        let t = self.current;
        let frame = render(
            scene,
            &self.curve,
            &self.vmap,
            &self.noise,
            t,
            self.seed,
            self.captures,
        )?;
        self.captures += 1;
        debug_assert!(self.pending.len() <= self.lag);
        Ok(frame)
    }
}

/// Renders a single exposure. Noise for row `y` of frame `index` comes from a
/// dedicated ChaCha stream, so rows can be rendered in any order.
pub fn render(
    scene: &Scene,
    curve: &ResponseCurve,
    vmap: &VignettingMap,
    noise: &NoiseModel,
    t: f64,
    seed: u64,
    index: u64,
) -> Result<LdrFrame> {
    let (width, height) = scene.dims();
    let a = noise.coefficients();
    let mut pixels = vec![[0u8; 3]; width * height];
    pixels
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index);
            rng.set_word_pos((y as u128) << 32);
            for (x, out) in row.iter_mut().enumerate() {
                let l = scene.get(x, y);
                let v = vmap.get(x, y);
                for c in 0..3 {
                    let mut exposure = t * l[c] * v[c];
                    if a[c] > 0.0 && exposure > 0.0 {
                        let n: f64 = rng.sample(StandardNormal);
                        exposure = (exposure + (a[c] * exposure).sqrt() * n).max(0.0);
                    }
                    out[c] = curve.forward(c, exposure);
                }
            }
        });
    LdrFrame::new(width, height, t, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensorsim::{make_scene, SceneKind};

    fn camera(lag: usize, noise: NoiseModel) -> (CameraSim, Scene) {
        let curve = ResponseCurve::linear();
        let times = vec![0.001, 0.002, 0.004, 0.008];
        let program = ExposureProgram::new(times, &curve).unwrap();
        let scene = make_scene(&SceneKind::LogGradient { low: 1.0, high: 200.0 }, 16, 4).unwrap();
        let cam = CameraSim::new(
            curve,
            VignettingMap::uniform(16, 4),
            noise,
            program,
            lag,
            0.001,
            3,
        )
        .unwrap();
        (cam, scene)
    }

    #[test]
    fn lag_delays_by_exactly_lag_frames() {
        let (mut cam, scene) = camera(3, NoiseModel::noiseless());
        assert_eq!(cam.capture(&scene).unwrap().exposure(), 0.001);
        cam.command_exposure(0.004).unwrap();
        let seen: Vec<f64> = (0..5).map(|_| cam.capture(&scene).unwrap().exposure()).collect();
        assert_eq!(seen, vec![0.001, 0.001, 0.001, 0.004, 0.004]);
        assert!(!cam.has_pending());
    }

    #[test]
    fn zero_lag_applies_next_frame() {
        let (mut cam, scene) = camera(0, NoiseModel::noiseless());
        cam.command_exposure(0.008).unwrap();
        assert_eq!(cam.capture(&scene).unwrap().exposure(), 0.008);
    }

    #[test]
    fn repeated_command_replaces() {
        let (mut cam, scene) = camera(2, NoiseModel::noiseless());
        cam.command_exposure(0.004).unwrap();
        cam.command_exposure(0.008).unwrap();
        assert_eq!(cam.pending(), 1);
        let seen: Vec<f64> = (0..3).map(|_| cam.capture(&scene).unwrap().exposure()).collect();
        assert_eq!(seen, vec![0.001, 0.001, 0.008]);
    }

    #[test]
    fn rejects_unknown_exposure_and_bad_scene() {
        let (mut cam, _) = camera(1, NoiseModel::noiseless());
        assert!(matches!(cam.command_exposure(0.003), Err(Error::UnknownExposure(_))));
        let other = make_scene(&SceneKind::LogGradient { low: 1.0, high: 2.0 }, 8, 4).unwrap();
        assert!(matches!(cam.capture(&other), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn noiseless_matches_forward_model() {
        let (mut cam, scene) = camera(0, NoiseModel::noiseless());
        cam.command_exposure(0.004).unwrap();
        let frame = cam.capture(&scene).unwrap();
        for x in 0..16 {
            let l = scene.get(x, 2)[1];
            assert_eq!(frame.get(x, 2)[1], ResponseCurve::linear().forward(1, 0.004 * l));
        }
    }

    #[test]
    fn noise_is_seeded() {
        let noise = NoiseModel::new([0.001; 3]).unwrap();
        let (mut a, scene) = camera(0, noise);
        let (mut b, _) = camera(0, noise);
        for _ in 0..3 {
            assert_eq!(a.capture(&scene).unwrap(), b.capture(&scene).unwrap());
        }
        let (mut c, _) = camera(0, noise);
        let f0 = c.capture(&scene).unwrap();
        let f1 = c.capture(&scene).unwrap();
        assert_ne!(f0.pixels(), f1.pixels());
    }
}
