use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{format_err, Error, Result};
use crate::frame::{LdrFrame, Rgb};
use crate::interval::Interval;
use crate::radiometry::{ExposureProgram, ResponseCurve, VignettingMap};

use super::color::{HdrColor, Outcome};
use super::observation::Observation;
use super::packing::{pack, unpack, PackedColor, PackingScale};

const SNAPSHOT_MAGIC: &[u8; 8] = b"HDRMAP\0\x01";

/// Per-frame fusion counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FusionStats {
    pub promoted: u64,
    /// Complete colors that averaged in a valid observation.
    pub updated: u64,
    /// Incomplete colors whose bounds were refined.
    pub bounded: u64,
    /// Complete colors that skipped an invalid observation.
    pub ignored: u64,
    /// Bound refinements that produced crossed bounds.
    pub conflicts: u64,
    /// Per-channel count of radiance accumulator updates.
    pub channel_updates: [u64; 3],
}

impl FusionStats {
    fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Promoted => self.promoted += 1,
            Outcome::Updated => self.updated += 1,
            Outcome::Bounded { conflict } => {
                self.bounded += 1;
                self.conflicts += conflict as u64;
            }
            Outcome::Ignored => self.ignored += 1,
        }
        if matches!(outcome, Outcome::Promoted | Outcome::Updated) {
            self.channel_updates.iter_mut().for_each(|n| *n += 1);
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.promoted += other.promoted;
        self.updated += other.updated;
        self.bounded += other.bounded;
        self.ignored += other.ignored;
        self.conflicts += other.conflicts;
        for c in 0..3 {
            self.channel_updates[c] += other.channel_updates[c];
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.promoted + self.updated + self.bounded + self.ignored
    }
}

/// The map rendered into the image plane: radiance `L`, weight `W` and bounds `Λ`.
///
/// Incomplete cells have zero weight and zero radiance; complete cells carry
/// degenerate bounds at their radiance.
#[derive(Debug, Clone, PartialEq)]
pub struct MapView {
    pub width: usize,
    pub height: usize,
    pub radiance: Vec<Rgb>,
    pub weight: Vec<f64>,
    pub bounds: Vec<[Interval; 3]>,
}

impl MapView {
    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    pub fn is_incomplete(&self, i: usize) -> bool {
        self.weight[i] == 0.0
    }
}

/// Grid of HDR colors for a static camera, one cell per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct MapBuffer {
    width: usize,
    height: usize,
    range: Interval,
    cells: Vec<HdrColor>,
}

impl MapBuffer {
    /// All cells start incomplete with bounds equal to `range`.
    pub fn new(width: usize, height: usize, range: Interval) -> Self {
        Self {
            width,
            height,
            range,
            cells: vec![HdrColor::new(range); width * height],
        }
    }

    pub fn from_cells(width: usize, height: usize, range: Interval, cells: Vec<HdrColor>) -> Result<Self> {
        if cells.len() != width * height {
            return Err(crate::error::invalid("cell count does not match dimensions"));
        }
        Ok(Self {
            width,
            height,
            range,
            cells,
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

    pub fn range(&self) -> Interval {
        self.range
    }

    pub fn cells(&self) -> &[HdrColor] {
        &self.cells
    }

    pub fn get(&self, x: usize, y: usize) -> &HdrColor {
        &self.cells[y * self.width + x]
    }

    pub fn complete_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_complete()).count()
    }

    pub fn fraction_complete(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.complete_count() as f64 / self.cells.len() as f64
    }

    /// Fuses one frame: every pixel is classified and routed to bound refinement,
    /// promotion, accumulation or ignored. Cells are updated in parallel; the map is
    /// borrowed mutably for the whole call so no partially fused state is observable.
    pub fn fuse_frame(
        &mut self,
        frame: &LdrFrame,
        vmap: &VignettingMap,
        curve: &ResponseCurve,
        program: &ExposureProgram,
    ) -> Result<FusionStats> {
        for dims in [frame.dims(), vmap.dims()] {
            if dims != self.dims() {
                return Err(Error::DimensionMismatch {
                    expected: self.dims(),
                    actual: dims,
                });
            }
        }
        let t = frame.exposure();
        let range = self.range;
        let width = self.width.max(1);
        let stats = self
            .cells
            .par_chunks_mut(width)
            .zip(frame.pixels().par_chunks(width))
            .zip(vmap.values().par_chunks(width))
            .map(|((cells, pixels), factors)| {
                let mut stats = FusionStats::default();
                for ((cell, z), v) in cells.iter_mut().zip(pixels).zip(factors) {
                    let obs = Observation::new(*z, t, *v, program);
                    stats.record(cell.observe(&obs, curve, program, &range));
                }
                stats
            })
            .reduce(FusionStats::default, FusionStats::merge);
        Ok(stats)
    }

    /// Identity render of the map into the image plane.
    pub fn render(&self) -> MapView {
        let mut radiance = Vec::with_capacity(self.cells.len());
        let mut weight = Vec::with_capacity(self.cells.len());
        let mut bounds = Vec::with_capacity(self.cells.len());
        for cell in &self.cells {
            match cell {
                HdrColor::Complete(c) => {
                    let l = c.radiance();
                    radiance.push(l);
                    weight.push(c.weight());
                    bounds.push(l.map(Interval::point));
                }
                HdrColor::Incomplete(c) => {
                    radiance.push([0.0; 3]);
                    weight.push(0.0);
                    bounds.push(c.bounds());
                }
            }
        }
        MapView {
            width: self.width,
            height: self.height,
            radiance,
            weight,
            bounds,
        }
    }

    /// Packs every cell; the count reports how many cells needed clamping.
    pub fn pack(&self, scale: &PackingScale) -> (Vec<PackedColor>, usize) {
        let mut clamped = 0;
        let words = self
            .cells
            .iter()
            .map(|c| {
                let (p, flag) = pack(c, scale);
                clamped += flag as usize;
                p
            })
            .collect();
        (words, clamped)
    }

    /// Snapshot layout, all little-endian: 8-byte magic, `u32` width, `u32` height,
    /// `f64` l_min, `f64` l_max, `f64` w_cap, then one `u64` packed word per cell in
    /// row-major order.
    pub fn write_snapshot<W: Write>(&self, mut writer: W, scale: &PackingScale) -> Result<usize> {
        let (words, clamped) = self.pack(scale);
        let mut buf = Vec::with_capacity(40 + words.len() * 8);
        buf.extend_from_slice(SNAPSHOT_MAGIC);
        buf.extend_from_slice(&(self.width as u32).to_le_bytes());
        buf.extend_from_slice(&(self.height as u32).to_le_bytes());
        buf.extend_from_slice(&scale.l_min.to_le_bytes());
        buf.extend_from_slice(&scale.l_max.to_le_bytes());
        buf.extend_from_slice(&scale.w_cap.to_le_bytes());
        for w in words {
            buf.extend_from_slice(&w.0.to_le_bytes());
        }
        writer.write_all(&buf)?;
        Ok(clamped)
    }

    pub fn read_snapshot<R: Read>(mut reader: R) -> Result<(Self, PackingScale)> {
        let mut header = [0u8; 40];
        reader
            .read_exact(&mut header)
            .map_err(|_| format_err("map snapshot", "truncated header"))?;
        if &header[..8] != SNAPSHOT_MAGIC {
            return Err(format_err("map snapshot", "bad magic"));
        }
        let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
        let f64_at = |i: usize| f64::from_le_bytes(header[i..i + 8].try_into().unwrap());
        let (width, height) = (u32_at(8), u32_at(12));
        let scale = PackingScale::new(Interval::new(f64_at(16), f64_at(24)), f64_at(32))
            .map_err(|e| format_err("map snapshot", e.to_string()))?;
        let mut body = vec![0u8; width * height * 8];
        reader
            .read_exact(&mut body)
            .map_err(|_| format_err("map snapshot", "truncated body"))?;
        let cells = body
            .chunks_exact(8)
            .map(|b| unpack(PackedColor(u64::from_le_bytes(b.try_into().unwrap())), &scale))
            .collect();
        Ok((Self::from_cells(width, height, scale.range(), cells)?, scale))
    }

    pub fn save_snapshot(&self, path: impl AsRef<Path>, scale: &PackingScale) -> Result<usize> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_snapshot(file, scale)
    }

    pub fn load_snapshot(path: impl AsRef<Path>) -> Result<(Self, PackingScale)> {
        Self::read_snapshot(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
