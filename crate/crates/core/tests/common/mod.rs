//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use hdrmap::controller::TIE_RTOL;
use hdrmap::fusion::{pack, unpack, CompleteColor, HdrColor, IncompleteColor, MapBuffer, Observation, PackingScale};
use hdrmap::radiometry::{ExposureProgram, NoiseModel, ResponseCurve, VignettingMap, LEVELS};
use hdrmap::sensorsim::{make_scene, render, Scene, SceneKind};
use hdrmap::{Interval, LdrFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fraction of `[lo, hi]` (in log space) that falls inside `[dlo, dhi]`.
pub fn log_fraction(lo: f64, hi: f64, dlo: f64, dhi: f64) -> f64 {
    if lo == hi {
        return if dlo <= lo && lo <= dhi { 1.0 } else { 0.0 };
    }
    let a = lo.max(dlo);
    let b = hi.min(dhi);
    if a >= b {
        0.0
    } else {
        (b.ln() - a.ln()) / (hi.ln() - lo.ln())
    }
}

/// Exhaustive evaluation of `β·U_e(t) + U_r(t)` for every t, straight from the
/// definitions: expected completions plus `Σ t/W` over validly observable points.
pub fn utility_oracle(map: &MapBuffer, vmap: &VignettingMap, program: &ExposureProgram, beta: f64) -> Vec<(f64, f64, f64)> {
    let (x_min, x_max) = (program.x_min(), program.x_max());
    program
        .times()
        .iter()
        .map(|&t| {
            let mut u_e = 0.0;
            let mut u_r = 0.0;
            for y in 0..map.height() {
                for x in 0..map.width() {
                    let v = vmap.get(x, y);
                    match map.get(x, y) {
                        HdrColor::Incomplete(c) => {
                            let b = c.bounds();
                            let mut p = 1.0;
                            for ch in 0..3 {
                                let d_lo = x_min[ch] / (t * v[ch]);
                                let d_hi = x_max[ch] / (t * v[ch]);
                                p *= log_fraction(b[ch].lo, b[ch].hi, d_lo, d_hi);
                            }
                            u_e += p;
                        }
                        HdrColor::Complete(c) => {
                            let l = c.radiance();
                            let observable = (0..3).all(|ch| {
                                let e = l[ch] * v[ch];
                                x_min[ch] / t <= e && e <= x_max[ch] / t
                            });
                            if observable {
                                u_r += t / c.weight();
                            }
                        }
                    }
                }
            }
            (u_e, u_r, beta * u_e + u_r)
        })
        .collect()
}

/// Argmax with relative-tolerance ties resolved toward the longest (or shortest) time.
pub fn oracle_choice(times: &[f64], totals: &[f64], prefer_larger: bool) -> f64 {
    let best = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<f64> = times
        .iter()
        .zip(totals)
        .filter(|(_, u)| **u >= best - TIE_RTOL * best.abs())
        .map(|(t, _)| *t)
        .collect();
    if prefer_larger {
        tied.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    } else {
        tied.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub struct RandomCase {
    pub program: ExposureProgram,
    pub vmap: VignettingMap,
    pub map: MapBuffer,
    pub beta: f64,
}

/// Random map of at most 8x8 points over at most 8 exposure times.
pub fn random_case<R: Rng>(rng: &mut R) -> RandomCase {
    let curve = if rng.random_bool(0.5) {
        ResponseCurve::linear()
    } else {
        ResponseCurve::gamma(rng.random_range(1.0..2.6)).unwrap()
    };
    let n_times = rng.random_range(1..=8);
    let mut times: Vec<f64> = (0..n_times).map(|_| 10f64.powf(rng.random_range(-3.0..0.0))).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let program = ExposureProgram::new(times, &curve).unwrap();
    let (w, h) = (rng.random_range(1..=8), rng.random_range(1..=8));
    let vmap = if rng.random_bool(0.3) {
        VignettingMap::uniform(w, h)
    } else {
        let data = (0..w * h)
            .map(|_| std::array::from_fn(|_| rng.random_range(0.3..=1.0)))
            .collect();
        VignettingMap::new(w, h, data).unwrap()
    };
    let range = program.radiance_range(vmap.min_value());
    let log_uniform = |rng: &mut R| rng.random_range(range.lo.ln()..=range.hi.ln()).exp().clamp(range.lo, range.hi);
    let all_incomplete = rng.random_bool(0.15);
    let cells = (0..w * h)
        .map(|_| {
            if !all_incomplete && rng.random_bool(0.5) {
                let l = std::array::from_fn(|_| log_uniform(rng));
                let k = rng.random_range(1..=4) as f64;
                let w = k * program.times()[rng.random_range(0..program.times().len())];
                HdrColor::Complete(CompleteColor::from_radiance(l, w))
            } else if all_incomplete || rng.random_bool(0.2) {
                HdrColor::new(range)
            } else {
                let bounds = std::array::from_fn(|_| {
                    if rng.random_bool(0.1) {
                        Interval::point(log_uniform(rng))
                    } else {
                        let a = log_uniform(rng);
                        let b = log_uniform(rng);
                        Interval::new(a.min(b), a.max(b))
                    }
                });
                HdrColor::Incomplete(IncompleteColor::from_bounds(bounds))
            }
        })
        .collect();
    let map = MapBuffer::from_cells(w, h, range, cells).unwrap();
    let beta = [0.0, 0.5, 1.0, 10.0, 100.0][rng.random_range(0..5)];
    RandomCase { program, vmap, map, beta }
}

/// Expected effective exposure per capture. `schedule[k]` lists the commands
/// issued right after capture `k`; they apply from capture `k + 1 + lag` on, and
/// the last one issued after the same capture wins.
pub fn lag_oracle(initial: f64, lag: usize, schedule: &[Vec<f64>]) -> Vec<f64> {
    let mut changes: Vec<(usize, f64)> = Vec::new();
    for (k, cmds) in schedule.iter().enumerate() {
        if let Some(&t) = cmds.last() {
            changes.push((k + 1 + lag, t));
        }
    }
    let mut out = Vec::with_capacity(schedule.len());
    let mut current = initial;
    for k in 0..schedule.len() {
        for (at, t) in &changes {
            if *at == k {
                current = *t;
            }
        }
        out.push(current);
    }
    out
}

/// One sample of a fused sequence: pixel values, exposure time, vignetting.
pub type Sample = ([u8; 3], f64, [f64; 3]);

/// Independent weighted-average oracle: per-sample estimates `g/(t v)` with
/// weights `1/σ²`, `σ² = a·L/(t v)` evaluated at a shared reference radiance.
pub fn inverse_variance_oracle(curve: &ResponseCurve, samples: &[Sample], a: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|c| {
        let estimates: Vec<f64> = samples.iter().map(|(z, t, v)| curve.inverse(c, z[c]) / (t * v[c])).collect();
        let reference = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for ((_, t, v), l) in samples.iter().zip(&estimates) {
            let var = a[c] * reference / (t * v[c]);
            num += l / var;
            den += 1.0 / var;
        }
        num / den
    })
}

pub fn batch_estimate(curve: &ResponseCurve, samples: &[Sample]) -> [f64; 3] {
    std::array::from_fn(|c| {
        let g: f64 = samples.iter().map(|(z, _, _)| curve.inverse(c, z[c])).sum();
        let tv: f64 = samples.iter().map(|(_, t, v)| t * v[c]).sum();
        g / tv
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Feeds `samples` one at a time and checks the result against the batch sum and
/// the weighted-average oracle. Returns the worst relative deviation.
pub fn incremental_deviation(
    curve: &ResponseCurve,
    program: &ExposureProgram,
    samples: &[Sample],
    a: [f64; 3],
) -> Result<f64, String> {
    let range = program.radiance_range(0.3);
    let mut color = HdrColor::new(range);
    for (z, t, v) in samples {
        color.observe(&Observation::new(*z, *t, *v, program), curve, program, &range);
    }
    let complete = color.as_complete().ok_or("valid observations left the color incomplete")?;
    let got = complete.radiance();
    let b = batch_estimate(curve, samples);
    let o = inverse_variance_oracle(curve, samples, a);
    let green_tv: f64 = samples.iter().map(|(_, t, v)| t * v[1]).sum();
    let mut worst = rel(complete.weight(), green_tv);
    for c in 0..3 {
        worst = worst.max(rel(got[c], b[c])).max(rel(got[c], o[c]));
    }
    Ok(worst)
}

/// Log-uniform radiance per pixel, so every sampled site sees a distinct value.
pub fn speckle_scene(width: usize, height: usize, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (0.5f64.ln(), 500f64.ln());
    let radiance = (0..width * height).map(|_| [rng.random_range(lo..hi).exp(); 3]).collect();
    Scene::new(width, height, radiance).unwrap()
}

/// Eight geometric exposures from 1 ms to 128 ms of a speckle scene.
pub fn bracketed_stack(curve: &ResponseCurve, noise: &NoiseModel) -> Vec<LdrFrame> {
    let scene = speckle_scene(96, 64, 3);
    let vmap = VignettingMap::uniform(96, 64);
    let times = ExposureProgram::geometric_times(0.001, 0.128, 8).unwrap();
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| render(&scene, curve, &vmap, noise, t, 11, i as u64).unwrap())
        .collect()
}

pub fn curve_rms(a: &ResponseCurve, b: &ResponseCurve, c: usize) -> f64 {
    let sum: f64 = (0..LEVELS).map(|z| (a.table(c)[z] - b.table(c)[z]).powi(2)).sum();
    (sum / LEVELS as f64).sqrt()
}

pub fn reference_program() -> ExposureProgram {
    ExposureProgram::new(vec![0.001, 0.004, 0.016, 0.064, 0.25], &ResponseCurve::gamma(2.2).unwrap()).unwrap()
}

/// Random pack/unpack roundtrips: complete colors stay within one code step,
/// incomplete bounds are widened by at most one grid ratio and never shrink.
pub fn pack_roundtrips(cases: usize, seed: u64) -> Result<(), String> {
    let s = PackingScale::for_program(&reference_program(), 0.4).unwrap();
    let range = s.range();
    let ratio = s.grid_ratio();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        if rng.random_bool(0.5) {
            let l: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..=range.hi));
            let w = rng.random_range(1e-9..=s.w_cap);
            let (p, clamped) = pack(&HdrColor::Complete(CompleteColor::from_radiance(l, w)), &s);
            let back = unpack(p, &s);
            let back = back.as_complete().ok_or(format!("case {case}: complete came back incomplete"))?;
            let ok = !clamped
                && p.weight_code() != 0
                && (0..3).all(|c| (back.radiance()[c] - l[c]).abs() <= s.radiance_step())
                && (back.weight() - w).abs() <= s.weight_step();
            if !ok {
                return Err(format!("case {case}: {l:?}, w {w} -> {:?}, w {}", back.radiance(), back.weight()));
            }
        } else {
            let (log_lo, log_hi) = (range.lo.ln(), range.hi.ln());
            let bounds: [Interval; 3] = std::array::from_fn(|_| {
                let a = rng.random_range(log_lo..=log_hi).exp().clamp(range.lo, range.hi);
                let b = rng.random_range(log_lo..=log_hi).exp().clamp(range.lo, range.hi);
                Interval::new(a.min(b), a.max(b))
            });
            let (p, clamped) = pack(&HdrColor::Incomplete(IncompleteColor::from_bounds(bounds)), &s);
            let back = unpack(p, &s);
            let back = back.as_incomplete().ok_or(format!("case {case}: incomplete came back complete"))?.bounds();
            let ok = !clamped
                && p.weight_code() == 0
                && (0..3).all(|c| {
                    bounds[c].is_subset_of(&back[c])
                        && back[c].lo >= bounds[c].lo / ratio * (1.0 - 1e-12)
                        && back[c].hi <= bounds[c].hi * ratio * (1.0 + 1e-12)
                });
            if !ok {
                return Err(format!("case {case}: {bounds:?} -> {back:?}"));
            }
        }
    }
    Ok(())
}

/// A fixed four-frame fusion whose snapshot bytes are frozen in the tests.
pub fn reference_snapshot() -> Vec<u8> {
    let curve = ResponseCurve::gamma(2.2).unwrap();
    let program = reference_program();
    let vmap = VignettingMap::radial(16, 9, 0.5).unwrap();
    let scene = make_scene(&SceneKind::LogGradient { low: 0.02, high: 800.0 }, 16, 9).unwrap();
    let noise = NoiseModel::new([0.0005, 0.0008, 0.0015]).unwrap();
    let scale = PackingScale::for_program(&program, vmap.min_value()).unwrap();
    let mut map = MapBuffer::new(16, 9, scale.range());
    for (i, k) in [2usize, 0, 4, 1].into_iter().enumerate() {
        let frame = render(&scene, &curve, &vmap, &noise, program.times()[k], 99, i as u64).unwrap();
        map.fuse_frame(&frame, &vmap, &curve, &program).unwrap();
    }
    let mut bytes = Vec::new();
    map.write_snapshot(&mut bytes, &scale).unwrap();
    bytes
}

pub const FROZEN_SNAPSHOT_SHA256: &str = "e34a13fa700465befb06d619ba069398c05e62e18794df0c4c4b08e4f23a40cc";
