//! 64-bit packed color representation.
//!
//! Complete colors store three 16-bit linear radiance codes over `[0, l_max]`
//! (bits 0..48, R first) and a 16-bit weight code over `[0, w_cap]` (bits 48..64).
//! Incomplete colors store six 8-bit indices into a 256-level log-spaced grid over
//! `[l_min, l_max]` (lower then upper bound, R first, bits 0..48) and weight code 0.
//! Lower bounds round down and upper bounds round up, so intervals never shrink.

use crate::error::{invalid, Result};
use crate::interval::Interval;
use crate::radiometry::ExposureProgram;

use super::color::{CompleteColor, HdrColor, IncompleteColor};

const CODE_MAX: f64 = 65535.0;
const GRID_MAX: usize = 255;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PackingScale {
    pub l_min: f64,
    pub l_max: f64,
    pub w_cap: f64,
}

impl PackingScale {
    pub fn new(range: Interval, w_cap: f64) -> Result<Self> {
        if !(range.is_positive() && range.lo < range.hi) {
            return Err(invalid(format!("packing range must be positive and non-empty, got {range}")));
        }
        if !(w_cap > 0.0 && w_cap.is_finite()) {
            return Err(invalid(format!("weight cap must be positive, got {w_cap}")));
        }
        Ok(Self {
            l_min: range.lo,
            l_max: range.hi,
            w_cap,
        })
    }

    /// Scale implied by an exposure program and the camera's weakest attenuation.
    pub fn for_program(program: &ExposureProgram, v_min: f64) -> Result<Self> {
        Self::new(program.radiance_range(v_min), program.weight_cap())
    }

    pub fn range(&self) -> Interval {
        Interval::new(self.l_min, self.l_max)
    }

    /// Size of one 16-bit radiance quantization step.
    pub fn radiance_step(&self) -> f64 {
        self.l_max / CODE_MAX
    }

    pub fn weight_step(&self) -> f64 {
        self.w_cap / CODE_MAX
    }

    /// Ratio between neighbouring levels of the bound grid.
    pub fn grid_ratio(&self) -> f64 {
        (self.l_max / self.l_min).powf(1.0 / GRID_MAX as f64)
    }

    pub fn grid_level(&self, k: u8) -> f64 {
        match k as usize {
            0 => self.l_min,
            GRID_MAX => self.l_max,
            k => self.l_min * ((k as f64 / GRID_MAX as f64) * (self.l_max / self.l_min).ln()).exp(),
        }
    }

    fn grid_position(&self, x: f64) -> f64 {
        (x / self.l_min).ln() / (self.l_max / self.l_min).ln() * GRID_MAX as f64
    }

    /// Largest grid index whose level is `<= x`.
    fn grid_floor(&self, x: f64) -> u8 {
        let mut k = self.grid_position(x).floor().clamp(0.0, GRID_MAX as f64) as u8;
        while k > 0 && self.grid_level(k) > x {
            k -= 1;
        }
        while (k as usize) < GRID_MAX && self.grid_level(k + 1) <= x {
            k += 1;
        }
        k
    }

    /// Smallest grid index whose level is `>= x`.
    fn grid_ceil(&self, x: f64) -> u8 {
        let mut k = self.grid_position(x).ceil().clamp(0.0, GRID_MAX as f64) as u8;
        while (k as usize) < GRID_MAX && self.grid_level(k) < x {
            k += 1;
        }
        while k > 0 && self.grid_level(k - 1) >= x {
            k -= 1;
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PackedColor(pub u64);

impl PackedColor {
    pub fn weight_code(&self) -> u16 {
        (self.0 >> 48) as u16
    }

    pub fn is_incomplete(&self) -> bool {
        self.weight_code() == 0
    }
}

fn radiance_code(l: f64, scale: &PackingScale, clamped: &mut bool) -> u64 {
    let code = (l / scale.l_max * CODE_MAX).round();
    if !(0.0..=CODE_MAX).contains(&code) {
        *clamped = true;
    }
    if code.is_nan() {
        return 0;
    }
    code.clamp(0.0, CODE_MAX) as u64
}

fn weight_code(w: f64, scale: &PackingScale, clamped: &mut bool) -> u64 {
    let code = (w / scale.w_cap * CODE_MAX).round();
    if code > CODE_MAX {
        *clamped = true;
    }
    code.clamp(1.0, CODE_MAX) as u64
}

/// Packs a color; the flag reports whether any field had to be clamped.
pub fn pack(color: &HdrColor, scale: &PackingScale) -> (PackedColor, bool) {
    let mut clamped = false;
    let word = match color {
        HdrColor::Complete(c) => {
            let l = c.radiance();
            let mut word = 0u64;
            for (i, lc) in l.iter().enumerate() {
                word |= radiance_code(*lc, scale, &mut clamped) << (16 * i);
            }
            word | (weight_code(c.weight(), scale, &mut clamped) << 48)
        }
        HdrColor::Incomplete(c) => {
            let mut word = 0u64;
            for (i, b) in c.bounds().iter().enumerate() {
                if b.lo < scale.l_min || b.hi > scale.l_max {
                    clamped = true;
                }
                let lo = scale.grid_floor(b.lo.max(scale.l_min)) as u64;
                let hi = scale.grid_ceil(b.hi.min(scale.l_max)) as u64;
                word |= lo << (16 * i);
                word |= hi << (16 * i + 8);
            }
            word
        }
    };
    (PackedColor(word), clamped)
}

pub fn unpack(packed: PackedColor, scale: &PackingScale) -> HdrColor {
    let word = packed.0;
    if packed.is_incomplete() {
        let bounds = std::array::from_fn(|i| {
            let lo = ((word >> (16 * i)) & 0xff) as u8;
            let hi = ((word >> (16 * i + 8)) & 0xff) as u8;
            Interval::new(scale.grid_level(lo), scale.grid_level(hi.max(lo)))
        });
        HdrColor::Incomplete(IncompleteColor::from_bounds(bounds))
    } else {
        let radiance = std::array::from_fn(|i| ((word >> (16 * i)) & 0xffff) as f64 / CODE_MAX * scale.l_max);
        let weight = packed.weight_code() as f64 / CODE_MAX * scale.w_cap;
        HdrColor::Complete(CompleteColor::from_radiance(radiance, weight))
    }
}
