use crate::frame::Rgb;
use crate::radiometry::{ExposureClass, ExposureProgram};

/// Per-channel classes plus the all-channels-well-exposed flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub channels: [ExposureClass; 3],
    pub valid: bool,
}

pub fn classify(z: [u8; 3], program: &ExposureProgram) -> Classification {
    let channels = z.map(|zc| program.classify_channel(zc));
    Classification {
        channels,
        valid: channels.iter().all(|c| *c == ExposureClass::Well),
    }
}

/// One pixel measurement of a map point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub z: [u8; 3],
    /// Exposure time in seconds.
    pub t: f64,
    /// Attenuation factors at the pixel site.
    pub v: Rgb,
    pub class: Classification,
}

impl Observation {
    pub fn new(z: [u8; 3], t: f64, v: Rgb, program: &ExposureProgram) -> Self {
        Self {
            z,
            t,
            v,
            class: classify(z, program),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.class.valid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiometry::ResponseCurve;
    use ExposureClass::*;

    fn program() -> ExposureProgram {
        ExposureProgram::new(vec![1.0], &ResponseCurve::linear()).unwrap()
    }

    #[test]
    fn classify_examples() {
        let p = program();
        let c = classify([255, 100, 50], &p);
        assert!(!c.valid);
        assert_eq!(c.channels[0], Over);

        assert!(classify([100, 100, 100], &p).valid);

        let c = classify([3, 251, 100], &p);
        assert!(!c.valid);
        assert_eq!(c.channels, [Under, Over, Well]);

        assert!(classify([249, 5, 249], &p).valid);
        assert!(!classify([250, 100, 100], &p).valid);
        assert!(!classify([100, 4, 100], &p).valid);
    }
}
