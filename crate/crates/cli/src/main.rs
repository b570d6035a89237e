use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use hdrmap::harness::{run_experiment, write_outputs, ExperimentConfig, Setup};
use hdrmap::io::ppm;
use hdrmap::radiometry::{
    fit_noise_coefficient, fit_response_curve, CrfFitOptions, ExposureProgram, NoiseModel, ResponseCurve,
};
use hdrmap::sensorsim::{dump_frames, CameraSim};
use hdrmap::Error;

#[derive(Parser)]
#[command(name = "hdrmap", version, about = "HDR map fusion and exposure control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Race the configured controllers and write per-frame metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        /// Also write the two-panel SVG plot.
        #[arg(long)]
        plot: bool,
    },
    /// Recover the inverse response curve from a directory of bracketed frames.
    CalibrateCrf {
        #[arg(long)]
        stack: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = CrfFitOptions::default().smoothness)]
        smoothness: f64,
        #[arg(long, default_value_t = CrfFitOptions::default().sites)]
        sites: usize,
    },
    /// Fit the shot-noise coefficients from repeated frames of a static scene.
    FitNoise {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        bins: usize,
    },
    /// Capture the configured scene at every exposure and dump the frames.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Frames per exposure time.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = matches!(e.downcast_ref::<Error>(), Some(Error::Config(_)));
            ExitCode::from(if config { 1 } else { 2 })
        }
    }
}

fn load_config(path: &PathBuf) -> anyhow::Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run {
            config,
            out_dir,
            seed,
            frames,
            beta,
            plot,
        } => {
            let mut config = load_config(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(frames) = frames {
                config.frames = frames;
            }
            if let Some(beta) = beta {
                config.control.beta = beta;
            }
            config.validate()?;
            let output = run_experiment(&config)?;
            let written = write_outputs(&output, &config, &out_dir, plot)
                .with_context(|| format!("writing results to {}", out_dir.display()))?;
            for run in &output.runs {
                let last = output
                    .records
                    .iter()
                    .rfind(|r| r.controller == run.controller)
                    .expect("every run records frames");
                println!(
                    "{:<22} complete {:6.2}%  mean rel err {}",
                    run.controller,
                    100.0 * last.frac_complete,
                    if last.mean_rel_err.is_nan() {
                        "n/a".to_string()
                    } else {
                        format!("{:.3}%", 100.0 * last.mean_rel_err)
                    }
                );
            }
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::CalibrateCrf {
            stack,
            out,
            smoothness,
            sites,
        } => {
            let frames = ppm::load_frame_dir(&stack).with_context(|| format!("reading {}", stack.display()))?;
            if frames.is_empty() {
                bail!("no .ppm frames in {}", stack.display());
            }
            let fit = fit_response_curve(&frames, CrfFitOptions { smoothness, sites })?;
            fit.curve.save(&out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "fitted {} sites from {} frames, residual rms R {:.4} G {:.4} B {:.4}",
                fit.sites,
                frames.len(),
                fit.residual[0],
                fit.residual[1],
                fit.residual[2]
            );
        }
        Command::FitNoise {
            frames,
            curve,
            out,
            bins,
        } => {
            let curve_table =
                ResponseCurve::load(&curve).with_context(|| format!("reading {}", curve.display()))?;
            let stack = ppm::load_frame_dir(&frames).with_context(|| format!("reading {}", frames.display()))?;
            if stack.is_empty() {
                bail!("no .ppm frames in {}", frames.display());
            }
            let mut times: Vec<f64> = stack.iter().map(|f| f.exposure()).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let program = ExposureProgram::new(times, &curve_table)?;
            let fit = fit_noise_coefficient(&stack, &curve_table, &program, bins)?;
            std::fs::write(&out, fit.model.to_text()).with_context(|| format!("writing {}", out.display()))?;
            let a = fit.model.coefficients();
            println!("a = R {:.6e} G {:.6e} B {:.6e}", a[0], a[1], a[2]);
            if fit.degenerate.iter().any(|d| *d) {
                eprintln!("warning: degenerate fit on channels {:?}", fit.degenerate);
            }
        }
        Command::Simulate {
            config,
            out_dir,
            repeat,
            seed,
        } => {
            let config = load_config(&config)?;
            let setup = Setup::from_config(&config)?;
            let mut camera = CameraSim::new(
                setup.curve.clone(),
                setup.vmap.clone(),
                NoiseModel::new(setup.noise.coefficients())?,
                setup.program.clone(),
                0,
                setup.initial_exposure,
                seed.unwrap_or(config.seed),
            )?;
            let mut frames = Vec::new();
            for &t in setup.program.times() {
                camera.command_exposure(t)?;
                for _ in 0..repeat {
                    frames.push(camera.capture(&setup.scene)?);
                }
            }
            dump_frames(&out_dir, &frames).with_context(|| format!("writing {}", out_dir.display()))?;
            println!("wrote {} frames to {}", frames.len(), out_dir.display());
        }
    }
    Ok(())
}
