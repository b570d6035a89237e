use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::frame::LdrFrame;

use super::response::{ResponseCurve, LEVELS};

#[derive(Debug, Clone, Copy)]
pub struct CrfFitOptions {
    /// Weight of the second-difference smoothness penalty.
    pub smoothness: f64,
    /// Approximate number of pixel sites sampled on a uniform grid.
    pub sites: usize,
}

impl Default for CrfFitOptions {
    fn default() -> Self {
        Self {
            smoothness: 50.0,
            sites: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CrfFit {
    pub curve: ResponseCurve,
    /// RMS residual of the weighted least-squares system, per channel.
    pub residual: [f64; 3],
    pub sites: usize,
}

const MIN_SITES: usize = 50;

fn hat(z: usize) -> f64 {
    if z <= 127 {
        z as f64
    } else {
        (255 - z) as f64
    }
}

fn grid_sites(width: usize, height: usize, target: usize) -> Vec<usize> {
    let step = (((width * height) as f64 / target.max(1) as f64).sqrt().floor() as usize).max(1);
    let mut sites = Vec::new();
    let mut y = step / 2;
    while y < height {
        let mut x = step / 2;
        while x < width {
            sites.push(y * width + x);
            x += step;
        }
        y += step;
    }
    sites
}

/// Recovers the inverse response from a bracketed stack of a static scene.
///
/// Per channel, solves the log-domain least-squares system
/// `w(z_ij)·[ln g(z_ij) - ln E_i] = w(z_ij)·ln t_j` with hat weighting, a
/// second-difference smoothness penalty and the gauge `ln g(128) = 0`. The fitted
/// log exposures represent the interior of each quantization bin; bin edges are
/// taken as the geometric mean of neighbouring levels, which matches the floor
/// semantics of the forward response. The result is made monotone and normalized
/// so that `g(255) = 1`.
pub fn fit_response_curve(stack: &[LdrFrame], options: CrfFitOptions) -> Result<CrfFit> {
    let Some(first) = stack.first() else {
        return Err(Error::Calibration("empty stack".into()));
    };
    let dims = first.dims();
    if let Some(bad) = stack.iter().find(|f| f.dims() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: bad.dims(),
        });
    }
    let mut times: Vec<u64> = stack.iter().map(|f| f.exposure().to_bits()).collect();
    times.sort_unstable();
    times.dedup();
    if times.len() < 2 {
        return Err(Error::Calibration(
            "need at least two distinct exposure times".into(),
        ));
    }

    let grid = grid_sites(dims.0, dims.1, options.sites);
    let mut tables = [[0.0; LEVELS]; 3];
    let mut residual = [0.0; 3];
    let mut used_sites = usize::MAX;
    for c in 0..3 {
        // sites with no usable sample would leave ln E_i unconstrained
        let sites: Vec<usize> = grid
            .iter()
            .copied()
            .filter(|&s| stack.iter().any(|f| hat(f.pixels()[s][c] as usize) > 0.0))
            .collect();
        if sites.len() < MIN_SITES {
            return Err(Error::Calibration(format!(
                "channel {c}: {} usable sites, need {MIN_SITES}",
                sites.len()
            )));
        }
        used_sites = used_sites.min(sites.len());
        let (log_g, rms) = solve_channel(stack, &sites, c, options.smoothness)?;
        residual[c] = rms;
        tables[c] = edges_from_centres(&log_g);
    }

    let curve = ResponseCurve::from_tables(tables)?;
    Ok(CrfFit {
        curve,
        residual,
        sites: used_sites,
    })
}

/// Solves one channel through the normal equations. Every site exposure `ln E_i`
/// only couples to the levels observed at that site, so it is eliminated in closed
/// form (Schur complement) and only a `LEVELS x LEVELS` system is decomposed.
fn solve_channel(stack: &[LdrFrame], sites: &[usize], c: usize, smoothness: f64) -> Result<([f64; LEVELS], f64)> {
    let mut normal = DMatrix::<f64>::zeros(LEVELS, LEVELS);
    let mut rhs = DVector::<f64>::zeros(LEVELS);

    // gauge ln g(128) = 0; its weight only conditions the system
    let gauge = 128.0;
    normal[(LEVELS / 2, LEVELS / 2)] += gauge * gauge;
    for z in 1..LEVELS - 1 {
        let w = smoothness * hat(z);
        let k = [(z - 1, w), (z, -2.0 * w), (z + 1, w)];
        for (i, a) in k {
            for (j, b) in k {
                normal[(i, j)] += a * b;
            }
        }
    }

    let mut per_site = Vec::with_capacity(sites.len());
    let mut coupling = [0.0; LEVELS];
    for &s in sites {
        // rows w·(x_z - e_i) = w·ln t
        coupling.fill(0.0);
        let (mut d, mut r_e) = (0.0, 0.0);
        for frame in stack {
            let z = frame.pixels()[s][c] as usize;
            let w2 = hat(z).powi(2);
            let lt = frame.exposure().ln();
            normal[(z, z)] += w2;
            rhs[z] += w2 * lt;
            coupling[z] -= w2;
            d += w2;
            r_e -= w2 * lt;
        }
        let touched: Vec<(usize, f64)> = coupling
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(z, b)| (z, *b))
            .collect();
        for &(i, bi) in &touched {
            for &(j, bj) in &touched {
                normal[(i, j)] -= bi * bj / d;
            }
            rhs[i] -= bi * r_e / d;
        }
        per_site.push((touched, d, r_e));
    }

    let svd = normal.svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = s_max * 1e-12;
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    if rank < LEVELS {
        return Err(Error::Calibration(format!(
            "channel {c}: rank-deficient system (rank {rank} of {LEVELS} levels)"
        )));
    }
    let x = svd
        .solve(&rhs, tol)
        .map_err(|e| Error::Calibration(e.to_string()))?;

    // back-substitute the site exposures and measure the weighted residual
    let mut sum_sq = (gauge * x[LEVELS / 2]).powi(2);
    let mut rows = 1usize;
    for z in 1..LEVELS - 1 {
        let w = smoothness * hat(z);
        sum_sq += (w * (x[z - 1] - 2.0 * x[z] + x[z + 1])).powi(2);
        rows += 1;
    }
    for (&s, (touched, d, r_e)) in sites.iter().zip(&per_site) {
        let e = (r_e - touched.iter().map(|(z, b)| b * x[*z]).sum::<f64>()) / d;
        for frame in stack {
            let z = frame.pixels()[s][c] as usize;
            let w = hat(z);
            sum_sq += (w * (x[z] - e - frame.exposure().ln())).powi(2);
            rows += 1;
        }
    }
    let rms = (sum_sq / rows as f64).sqrt();

    let mut log_g = [0.0; LEVELS];
    log_g.copy_from_slice(x.as_slice());
    Ok((log_g, rms))
}

fn edges_from_centres(log_g: &[f64; LEVELS]) -> [f64; LEVELS] {
    let mut g = [0.0; LEVELS];
    for z in 1..LEVELS {
        g[z] = (0.5 * (log_g[z - 1] + log_g[z])).exp();
    }
    g[0] = (2.0 * g[1] - g[2]).max(0.0);
    let top = g[LEVELS - 1];
    let mut running = 0.0f64;
    for v in g.iter_mut() {
        running = running.max(*v / top);
        *v = running.min(1.0);
    }
    g[LEVELS - 1] = 1.0;
    g
}
