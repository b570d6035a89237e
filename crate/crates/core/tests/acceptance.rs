//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{
    bracketed_stack, curve_rms, incremental_deviation, lag_oracle, oracle_choice, pack_roundtrips, random_case,
    reference_snapshot, utility_oracle, Sample, FROZEN_SNAPSHOT_SHA256,
};
use hdrmap::controller::{select_exposure, ControllerConfig, ControllerInput, TieBreak};
use hdrmap::harness::{run_experiment, write_outputs, ControllerKind, ExperimentConfig};
use hdrmap::radiometry::{
    fit_noise_coefficient, fit_response_curve, CrfFitOptions, ExposureProgram, NoiseModel, ResponseCurve,
    VignettingMap,
};
use hdrmap::sensorsim::{make_scene, render, CameraSim, SceneKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed < limit {
        Ok(format!("{detail}, {:.1} s", elapsed.as_secs_f64()))
    } else {
        Err(format!("{detail}, but took {:.1} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs()))
    }
}

fn noise_model_recovery() -> Outcome {
    let start = Instant::now();
    let a = [0.0005, 0.0008, 0.0015];
    let noise = NoiseModel::new(a).map_err(|e| e.to_string())?;
    let curve = ResponseCurve::linear();
    let (w, h) = (64, 16);
    let scene = make_scene(&SceneKind::LogGradient { low: 1.0, high: 1000.0 }, w, h).unwrap();
    let vmap = VignettingMap::uniform(w, h);
    let times = vec![0.001, 0.01];
    let program = ExposureProgram::new(times.clone(), &curve).unwrap();
    let mut frames = Vec::with_capacity(900 * times.len());
    for (k, &t) in times.iter().enumerate() {
        for i in 0..900 {
            frames.push(render(&scene, &curve, &vmap, &noise, t, 21, (k * 900 + i) as u64).unwrap());
        }
    }
    let fit = fit_noise_coefficient(&frames, &curve, &program, 100).map_err(|e| e.to_string())?;
    let got = fit.model.coefficients();
    let errs: Vec<f64> = (0..3).map(|c| (got[c] - a[c]).abs() / a[c]).collect();
    let detail = format!(
        "a = {:.3e}/{:.3e}/{:.3e}, rel err {:.2}%/{:.2}%/{:.2}%",
        got[0],
        got[1],
        got[2],
        100.0 * errs[0],
        100.0 * errs[1],
        100.0 * errs[2]
    );
    if errs.iter().any(|e| *e >= 0.05) {
        return Err(detail);
    }
    if got[2] <= got[0] {
        return Err(format!("{detail}; blue not above red"));
    }
    within(start.elapsed(), Duration::from_secs(30), detail)
}

fn incremental_equals_batch() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc2);
    let mut worst = 0.0f64;
    for case in 0..10_000 {
        let curve = if rng.random_bool(0.5) {
            ResponseCurve::linear()
        } else {
            ResponseCurve::gamma(rng.random_range(1.0..2.6)).unwrap()
        };
        let n_times = rng.random_range(1..=16);
        let mut times: Vec<f64> = (0..n_times).map(|_| 10f64.powf(rng.random_range(-4.0..0.5))).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let program = ExposureProgram::new(times, &curve).unwrap();
        let len = rng.random_range(1..=50);
        let samples: Vec<Sample> = (0..len)
            .map(|_| {
                let z = std::array::from_fn(|_| rng.random_range(5u8..250));
                let t = program.times()[rng.random_range(0..program.times().len())];
                let v = std::array::from_fn(|_| rng.random_range(0.3..=1.0));
                (z, t, v)
            })
            .collect();
        let a = std::array::from_fn(|_| 10f64.powf(rng.random_range(-5.0..-1.0)));
        let dev = incremental_deviation(&curve, &program, &samples, a).map_err(|e| format!("case {case}: {e}"))?;
        if dev > 1e-12 {
            return Err(format!("case {case}: relative deviation {dev:.3e}"));
        }
        worst = worst.max(dev);
    }
    Ok(format!("10000 sequences, worst relative deviation {worst:.2e}"))
}

/// Frames from the first commanded capture to the first fully complete one, inclusive.
fn frames_of_action(records: &[&hdrmap::harness::FrameRecord]) -> Option<usize> {
    let first = records.iter().find(|r| r.commanded)?.frame;
    let done = records.iter().find(|r| r.frac_complete >= 1.0)?.frame;
    Some(if done >= first { done - first + 1 } else { 0 })
}

fn controller_race() -> Outcome {
    let start = Instant::now();
    let mut errors = Vec::new();
    let mut lines = Vec::new();
    for seed in 1..=5u64 {
        let mut config = ExperimentConfig::standard_race();
        config.seed = seed;
        let out = run_experiment(&config).map_err(|e| e.to_string())?;
        let mut proposed = None;
        let mut baselines = Vec::new();
        for spec in &config.controllers {
            let name = spec.name();
            let records: Vec<_> = out.records.iter().filter(|r| r.controller == name).collect();
            let action = frames_of_action(&records);
            if spec.kind == ControllerKind::MapAware {
                // 15 fused frames: frames 0 through 14
                let err = records.get(14).map(|r| r.mean_rel_err).ok_or("run shorter than 15 frames")?;
                proposed = Some((name.clone(), action, err));
            } else {
                baselines.push((name, action));
            }
        }
        let (name, action, err) = proposed.ok_or("no map-aware controller in the race")?;
        let action = action.ok_or(format!("seed {seed}: {name} never reached 100%"))?;
        if action > 6 {
            return Err(format!("seed {seed}: {name} needed {action} frames of action"));
        }
        for (b, ba) in &baselines {
            if ba.is_some_and(|ba| ba <= action) {
                return Err(format!("seed {seed}: {b} finished in {} frames, {name} in {action}", ba.unwrap()));
            }
        }
        let baseline_actions = baselines.iter().map(|(_, a)| a.map_or("never".into(), |a| a.to_string())).collect::<Vec<_>>();
        lines.push(format!("seed {seed}: {action} vs [{}]", baseline_actions.join(",")));
        errors.push(err);
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let detail = format!(
        "{}; error after 15 frames {} (mean {:.2}%)",
        lines.join("; "),
        errors.iter().map(|e| format!("{:.2}%", 100.0 * e)).collect::<Vec<_>>().join("/"),
        100.0 * mean
    );
    for e in &errors {
        if e.is_nan() || *e >= 0.05 || (e - mean).abs() > 0.02 {
            return Err(detail);
        }
    }
    within(start.elapsed(), Duration::from_secs(60), detail)
}

fn controller_matches_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc4);
    for case in 0..100 {
        let c = random_case(&mut rng);
        let view = c.map.render();
        let input = ControllerInput::new(&view, &c.vmap, &c.program).map_err(|e| e.to_string())?;
        let totals: Vec<f64> = utility_oracle(&c.map, &c.vmap, &c.program, c.beta).iter().map(|u| u.2).collect();
        for (tie_break, larger) in [(TieBreak::Larger, true), (TieBreak::Smaller, false)] {
            let config = ControllerConfig {
                beta: c.beta,
                tie_break,
                ..Default::default()
            };
            let got = select_exposure(&input, &config).t;
            let expected = oracle_choice(c.program.times(), &totals, larger);
            if got != expected {
                return Err(format!("case {case} ({tie_break:?}): chose {got}, oracle {expected}"));
            }
        }
    }
    Ok("100 random maps, both tie-breaks".into())
}

fn packing() -> Outcome {
    pack_roundtrips(100_000, 0xacc5)?;
    let a = reference_snapshot();
    if a != reference_snapshot() {
        return Err("snapshot bytes differ between two identical fusions".into());
    }
    let digest: String = Sha256::digest(&a).iter().map(|b| format!("{b:02x}")).collect();
    if digest != FROZEN_SNAPSHOT_SHA256 {
        return Err(format!("snapshot digest {digest} differs from the frozen one"));
    }
    Ok(format!("100000 roundtrips, snapshot sha256 {}", &digest[..16]))
}

fn crf_recovery() -> Outcome {
    let truth = ResponseCurve::gamma(2.2).unwrap();
    let stack = bracketed_stack(&truth, &NoiseModel::new([2e-5; 3]).unwrap());
    let fit = fit_response_curve(&stack, CrfFitOptions::default()).map_err(|e| e.to_string())?;
    let rms: Vec<f64> = (0..3).map(|c| curve_rms(&fit.curve, &truth, c)).collect();
    let detail = format!("rms {:.2e}/{:.2e}/{:.2e}", rms[0], rms[1], rms[2]);
    if rms.iter().any(|r| *r >= 2e-2) {
        return Err(detail);
    }
    if (0..3).any(|c| fit.curve.inverse(c, 255) != 1.0) {
        return Err(format!("{detail}; g(255) != 1"));
    }
    Ok(format!("{detail}, g(255) = 1"))
}

fn lag_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc7);
    let curve = ResponseCurve::linear();
    let program = ExposureProgram::new(ExposureProgram::geometric_times(0.001, 0.128, 8).unwrap(), &curve).unwrap();
    let times = program.times().to_vec();
    let scene = make_scene(&SceneKind::LogGradient { low: 1.0, high: 100.0 }, 4, 2).unwrap();
    let mut lag_three = 0;
    for case in 0..1000 {
        let lag = if case % 2 == 0 { 3 } else { rng.random_range(0..8) };
        lag_three += usize::from(lag == 3);
        let len = rng.random_range(1..=60);
        let schedule: Vec<Vec<f64>> = (0..len)
            .map(|_| {
                let n = [0, 0, 1, 1, 2][rng.random_range(0..5)];
                (0..n).map(|_| times[rng.random_range(0..times.len())]).collect()
            })
            .collect();
        let initial = times[rng.random_range(0..times.len())];
        let mut cam = CameraSim::new(
            curve.clone(),
            VignettingMap::uniform(4, 2),
            NoiseModel::noiseless(),
            program.clone(),
            lag,
            initial,
            case,
        )
        .map_err(|e| e.to_string())?;
        let expected = lag_oracle(initial, lag, &schedule);
        for (k, cmds) in schedule.iter().enumerate() {
            let got = cam.capture(&scene).map_err(|e| e.to_string())?.exposure();
            if got != expected[k] {
                return Err(format!("case {case}, lag {lag}, capture {k}: {got} instead of {}", expected[k]));
            }
            for &t in cmds {
                cam.command_exposure(t).map_err(|e| e.to_string())?;
            }
        }
    }
    Ok(format!("1000 schedules, {lag_three} with lag 3"))
}

fn determinism() -> Outcome {
    let config = ExperimentConfig::standard_race();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut files = Vec::new();
    for dir in &dirs {
        let out = run_experiment(&config).map_err(|e| e.to_string())?;
        let written = write_outputs(&out, &config, dir.path(), false).map_err(|e| e.to_string())?;
        let mut csv: Vec<_> = written
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap()))
            .collect();
        csv.sort();
        files.push(csv);
    }
    if files[0].is_empty() {
        return Err("no CSV written".into());
    }
    if files[0] != files[1] {
        return Err("CSV outputs differ between identical runs".into());
    }
    let bytes: usize = files[0].iter().map(|(_, b)| b.len()).sum();
    Ok(format!("{} CSV files, {bytes} bytes identical", files[0].len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("noise model recovery", noise_model_recovery),
        ("incremental fusion equals batch and weighted average", incremental_equals_batch),
        ("controller race", controller_race),
        ("controller matches exhaustive oracle", controller_matches_oracle),
        ("packing roundtrips and stable snapshot", packing),
        ("response curve recovery", crf_recovery),
        ("control lag contract", lag_contract),
        ("byte-identical CSV for identical runs", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
