//! `check-operator` subcommand: compare the closed-form directional
//! derivative against forward finite differences at seeded random points.

use std::path::Path;

use immunokinetics_core::{eval_dq, fd_directional, AbstractPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::load_scenario;
use crate::CliError;

const PAIRS: usize = 20;
const SLOPE_BAND: (f64, f64) = (0.9, 1.1);

pub fn run(config_path: &Path, seed: u64) -> Result<(), CliError> {
    let scenario = load_scenario(config_path)?;
    let grid = &scenario.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let random_point = |offset: f64, rng: &mut ChaCha8Rng| {
        let x3: Vec<f64> = grid
            .centers()
            .iter()
            .map(|&z: &f64| offset + rng.gen_range(0.0..0.6) * ((0.3 * z).sin().abs() + 0.2))
            .collect();
        AbstractPoint::new(
            offset + rng.gen_range(0.2..2.0),
            offset + rng.gen_range(0.2..2.0),
            x3,
        )
    };

    let hs: Vec<f64> = (2..=6).map(|e| 10f64.powi(-e)).collect();
    let mut slopes = Vec::with_capacity(PAIRS);
    for _ in 0..PAIRS {
        let x = random_point(0.3, &mut rng);
        let mut w = random_point(0.0, &mut rng);
        w.x1 -= 0.35;
        for v in &mut w.x3 {
            *v -= 0.25;
        }
        let dq = eval_dq(&x, &w, &scenario.params, &scenario.birth, &scenario.kernel, grid)
            .map_err(CliError::from_core_config)?;
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| {
                fd_directional(
                    &x,
                    &w,
                    h,
                    &scenario.params,
                    &scenario.birth,
                    &scenario.kernel,
                    grid,
                )
                .map(|fd| fd.axpy(-1.0, &dq).norm(grid))
            })
            .collect::<Result<_, _>>()
            .map_err(CliError::from_core_config)?;
        slopes.push(fit_log_slope(&hs, &errs));
    }

    let (lo, hi) = slopes
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &s| (a.min(s), b.max(s)));
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    println!("pairs={PAIRS} seed={seed}");
    println!("slope_mean={mean:.4}");
    println!("slope_min={lo:.4}");
    println!("slope_max={hi:.4}");
    if lo < SLOPE_BAND.0 || hi > SLOPE_BAND.1 {
        return Err(CliError::identity(format!(
            "finite-difference slope outside [{}, {}]: range [{lo:.4}, {hi:.4}]",
            SLOPE_BAND.0, SLOPE_BAND.1
        )));
    }
    Ok(())
}

fn fit_log_slope(hs: &[f64], errs: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let mx = hs.iter().map(|h| h.ln()).sum::<f64>() / n;
    let my = errs.iter().map(|e| e.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (h, e) in hs.iter().zip(errs) {
        let dx = h.ln() - mx;
        num += dx * (e.ln() - my);
        den += dx * dx;
    }
    num / den
}
