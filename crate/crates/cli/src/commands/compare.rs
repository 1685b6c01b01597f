//! `compare` subcommand: run a model pair and check the identity that
//! connects them, writing `comparison.csv` and `report.txt`.

use std::path::Path;

use immunokinetics_core::{
    mol_rhs, simulate, sirs_dde_simulate, sis_dde_simulate, steady_recovery_profile,
    transit_time, CharacteristicInputs, ImmunityGrid, InitialDensity, ModelTag, MolRates,
    MolState, PiecewiseCubic, SimulationConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::simulate::pde_config;
use crate::config::{load_scenario, Scenario};
use crate::output::{ensure_dir, fmt, write_atomic};
use crate::{thread_budget, CliError, PairArg};

/// Documented tolerance per pair.
const LAG_FLUX_REL_TOL: f64 = 0.01;
const L1_RATIO_MIN: f64 = 1.8;
const TRAJECTORY_REL_TOL: f64 = 0.01;
const RHS_IDENTITY_TOL: f64 = 1e-12;

pub fn run(config_path: &Path, pair: PairArg, out_dir: &Path) -> Result<(), CliError> {
    let scenario = load_scenario(config_path)?;
    ensure_dir(out_dir)?;
    match pair {
        PairArg::M1VsSirsDde => lagged_flux_identity(&scenario, out_dir),
        PairArg::M2VsOracle => oracle_refinement(&scenario, out_dir),
        PairArg::M2VsSisDde => normalized_trajectories(&scenario, out_dir),
        PairArg::MolTheta0VsM2 => chain_lumping_identity(&scenario, out_dir),
    }
}

/// Run two jobs, concurrently when the thread budget allows.
fn join2<A, B>(
    a: impl FnOnce() -> A + Send,
    b: impl FnOnce() -> B + Send,
) -> (A, B)
where
    A: Send,
    B: Send,
{
    if thread_budget() >= 2 {
        std::thread::scope(|scope| {
            let ha = scope.spawn(a);
            let rb = b();
            (ha.join().expect("comparison worker panicked"), rb)
        })
    } else {
        (a(), b())
    }
}

/// No-boost structured model vs the constant-delay SIRS system: the
/// immunity-loss flux must equal the lagged discounted incidence.
fn lagged_flux_identity(scenario: &Scenario, out_dir: &Path) -> Result<(), CliError> {
    if scenario.kernel.has_any_boost() {
        return Err(CliError::config(
            "pair m1-vs-sirs-dde assumes no boosting: set kernel c_max = c0 = 0",
        ));
    }
    let (z_min, z_max) = scenario.decay.domain();
    let tau =
        transit_time(&scenario.decay, z_min, z_max).map_err(CliError::from_core_config)?;
    if scenario.t_end <= tau {
        return Err(CliError::config(format!(
            "run.t_end = {} must exceed the delay tau = {tau}",
            scenario.t_end
        )));
    }
    let psi_cells = immunokinetics_core::sample_initial_density(
        &scenario.psi,
        &scenario.params,
        &scenario.decay,
        &scenario.grid,
    )
    .map_err(CliError::from_core_config)?;
    let r0 = scenario.grid.integrate(&psi_cells);

    let cfg = pde_config(scenario, ModelTag::M1);
    let dde_dt = tau / 400.0;
    let (pde, dde) = join2(
        || simulate(&cfg).map_err(CliError::from_core_run),
        || {
            sirs_dde_simulate(
                &scenario.params,
                &scenario.birth,
                tau,
                scenario.s0,
                scenario.i0,
                r0,
                scenario.t_end,
                dde_dt,
            )
            .map_err(CliError::from_core_run)
        },
    );
    let (pde, dde) = (pde?, dde?);

    let i_dde = PiecewiseCubic::from_samples(&dde.t, &dde.i);
    let survival = (-scenario.params.d * tau).exp();
    let lambda_max = pde.lambda.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let window_end = (3.0 * tau).min(scenario.t_end);

    let mut csv = String::from("t,lambda_pde,lagged_incidence_dde,deviation\n");
    let mut worst = (0.0f64, 0.0f64, 0.0f64); // (deviation, t, lambda)
    for k in 0..pde.len() {
        let t = pde.t[k];
        if t <= tau || t > window_end {
            continue;
        }
        let expect = scenario.params.gamma * i_dde.eval(t - tau).unwrap_or(f64::NAN) * survival;
        let dev = (pde.lambda[k] - expect).abs();
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt(t),
            fmt(pde.lambda[k]),
            fmt(expect),
            fmt(dev)
        ));
        if dev > worst.0 {
            worst = (dev, t, pde.lambda[k]);
        }
    }
    write_atomic(&out_dir.join("comparison.csv"), &csv)?;

    let rel = worst.0 / lambda_max;
    let verdict = if rel < LAG_FLUX_REL_TOL { "PASS" } else { "FAIL" };
    let report = format!(
        "pair: m1-vs-sirs-dde\n\
         identity: Lambda(t) = gamma * I(t - tau) * exp(-d*tau) on (tau, 3*tau]\n\
         tau = {tau}\n\
         window = ({tau}, {window_end}]\n\
         max |deviation| = {} at t = {}\n\
         max |Lambda| = {}\n\
         max relative discrepancy = {rel:e} (tolerance {LAG_FLUX_REL_TOL})\n\
         verdict: {verdict}\n",
        worst.0, worst.1, lambda_max
    );
    write_atomic(&out_dir.join("report.txt"), &report)?;
    println!("max relative discrepancy {rel:e} (tolerance {LAG_FLUX_REL_TOL})");
    if rel >= LAG_FLUX_REL_TOL {
        return Err(CliError::identity(format!(
            "identity violated: worst deviation {} at t = {} (Lambda = {})",
            worst.0, worst.1, worst.2
        )));
    }
    Ok(())
}

/// Boost-to-maximum model against its characteristic solution over a
/// grid-refinement sweep; first-order convergence halves the L1 error.
fn oracle_refinement(scenario: &Scenario, out_dir: &Path) -> Result<(), CliError> {
    let psi_fn = scenario.psi_function();
    let base_cells = scenario.grid.n_cells();
    let mut rows = Vec::new();
    for level in 0..3 {
        let cells = base_cells << level;
        let grid = ImmunityGrid::uniform(scenario.params.z_min, scenario.params.z_max, cells)
            .map_err(CliError::from_core_config)?;
        let cfg = SimulationConfig {
            grid,
            output_stride: 1,
            ..pde_config(scenario, ModelTag::M2)
        };
        let traj = simulate(&cfg).map_err(CliError::from_core_run)?;
        let inputs = CharacteristicInputs::from_trajectory(
            &traj,
            &scenario.params,
            &scenario.decay,
            psi_fn.as_ref(),
        );
        let grid = traj.grid.as_ref().unwrap();
        let r_fv = traj.density.last().unwrap();
        let t_end = *traj.t.last().unwrap();
        let mut l1 = 0.0;
        for (i, &z) in grid.centers().iter().enumerate() {
            let exact = exact_or_err(t_end, z, &inputs)?;
            l1 += (r_fv[i] - exact).abs() * grid.widths()[i];
        }
        rows.push((cells, l1));
    }
    if rows[0].1 < 1e-13 {
        return Err(CliError::config(
            "oracle comparison needs a nonzero initial density or infective seed",
        ));
    }

    let mut csv = String::from("cells,l1_error,ratio\n");
    let mut ratios = Vec::new();
    for (k, (cells, l1)) in rows.iter().enumerate() {
        let ratio = if k == 0 {
            String::new()
        } else {
            let r = rows[k - 1].1 / l1;
            ratios.push(r);
            fmt(r)
        };
        csv.push_str(&format!("{cells},{},{ratio}\n", fmt(*l1)));
    }
    write_atomic(&out_dir.join("comparison.csv"), &csv)?;

    let min_ratio = ratios.iter().copied().fold(f64::MAX, f64::min);
    let verdict = if min_ratio >= L1_RATIO_MIN { "PASS" } else { "FAIL" };
    let report = format!(
        "pair: m2-vs-oracle\n\
         identity: finite-volume density converges to the characteristic solution\n\
         grids: {} / {} / {} cells\n\
         L1 errors: {} / {} / {}\n\
         refinement ratios: {:?} (minimum allowed {L1_RATIO_MIN})\n\
         verdict: {verdict}\n",
        rows[0].0, rows[1].0, rows[2].0, rows[0].1, rows[1].1, rows[2].1, ratios
    );
    write_atomic(&out_dir.join("report.txt"), &report)?;
    println!("L1 refinement ratios {ratios:?} (minimum allowed {L1_RATIO_MIN})");
    if min_ratio < L1_RATIO_MIN {
        return Err(CliError::identity(format!(
            "identity violated: refinement ratio {min_ratio:.3} below {L1_RATIO_MIN}"
        )));
    }
    Ok(())
}

fn exact_or_err(
    t: f64,
    z: f64,
    inputs: &CharacteristicInputs<'_, f64>,
) -> Result<f64, CliError> {
    immunokinetics_core::exact_r_m2(t, z, inputs).map_err(CliError::from_core_config)
}

/// Boost-to-maximum model vs the delayed SIS system on a normalized
/// population. Both sides are rebuilt from a consistent constant
/// pre-history with the scenario's `i0`; `s0` and `psi` are derived.
fn normalized_trajectories(scenario: &Scenario, out_dir: &Path) -> Result<(), CliError> {
    let p = scenario.params;
    if p.d_i != 0.0 {
        return Err(CliError::config(
            "pair m2-vs-sis-dde requires d_I = 0 (no disease-induced death)",
        ));
    }
    let b1 = scenario.birth.eval(1.0);
    if (b1 - p.d).abs() > 1e-9 * p.d {
        return Err(CliError::config(format!(
            "pair m2-vs-sis-dde runs on a unit population: need b(1) = d, got b(1) = {b1}, d = {}",
            p.d
        )));
    }
    let i0 = scenario.i0;
    if !(i0 > 0.0 && i0 < 1.0) {
        return Err(CliError::config("initial.i0 must lie in (0, 1)"));
    }
    let (z_min, z_max) = scenario.decay.domain();
    let tau =
        transit_time(&scenario.decay, z_min, z_max).map_err(CliError::from_core_config)?;

    // Constant pre-history (S, I) = (s0, i0): closed-form immune mass and
    // boundary inflow, then the matching exponential density profile.
    let hazard = p.d + p.boost_contact_multiplier * p.beta * i0;
    let c = (1.0 - (-hazard * tau).exp()) / hazard;
    let scale = p.boost_contact_multiplier * p.beta;
    let r0 = p.gamma * i0 * c / (1.0 - scale * i0 * c);
    let b0 = p.gamma * i0 + scale * i0 * r0;
    let psi_cells = steady_recovery_profile(b0, hazard, &scenario.decay, &scenario.grid)
        .map_err(CliError::from_core_config)?;
    let r0_grid = scenario.grid.integrate(&psi_cells);
    let s0 = 1.0 - i0 - r0_grid;
    if s0 <= 0.0 {
        return Err(CliError::config(format!(
            "derived s0 = {s0} is not positive; lower initial.i0"
        )));
    }

    let cfg = SimulationConfig {
        s0,
        psi: InitialDensity::CellAverages(psi_cells),
        ..pde_config(scenario, ModelTag::M2)
    };
    let dde_dt = tau / 400.0;
    let (pde, dde) = join2(
        || simulate(&cfg).map_err(CliError::from_core_run),
        || {
            sis_dde_simulate(&p, tau, s0, i0, scenario.t_end, dde_dt)
                .map_err(CliError::from_core_run)
        },
    );
    let (pde, dde) = (pde?, dde?);

    let s_dde = PiecewiseCubic::from_samples(&dde.t, &dde.s);
    let i_dde = PiecewiseCubic::from_samples(&dde.t, &dde.i);
    let s_scale = pde.s.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let i_scale = pde.i.iter().fold(0.0f64, |a, &b| a.max(b.abs()));

    let mut csv = String::from("t,s_pde,s_dde,i_pde,i_dde\n");
    let mut worst = (0.0f64, 0.0f64, ""); // (relative deviation, t, component)
    for k in 0..pde.len() {
        let t = pde.t[k];
        let sv = s_dde.eval(t).unwrap_or(f64::NAN);
        let iv = i_dde.eval(t).unwrap_or(f64::NAN);
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(t),
            fmt(pde.s[k]),
            fmt(sv),
            fmt(pde.i[k]),
            fmt(iv)
        ));
        let ds = (pde.s[k] - sv).abs() / s_scale;
        let di = (pde.i[k] - iv).abs() / i_scale;
        if ds > worst.0 {
            worst = (ds, t, "S");
        }
        if di > worst.0 {
            worst = (di, t, "I");
        }
    }
    write_atomic(&out_dir.join("comparison.csv"), &csv)?;

    let verdict = if worst.0 < TRAJECTORY_REL_TOL { "PASS" } else { "FAIL" };
    let report = format!(
        "pair: m2-vs-sis-dde\n\
         identity: normalized boost-to-maximum trajectories match the delayed SIS system\n\
         tau = {tau}\n\
         derived initial state: s0 = {s0}, i0 = {i0}, R0 = {r0_grid}\n\
         max relative distance = {:e} ({} component at t = {})\n\
         tolerance = {TRAJECTORY_REL_TOL}\n\
         verdict: {verdict}\n",
        worst.0, worst.2, worst.1
    );
    write_atomic(&out_dir.join("report.txt"), &report)?;
    println!(
        "max relative distance {:e} (tolerance {TRAJECTORY_REL_TOL})",
        worst.0
    );
    if worst.0 >= TRAJECTORY_REL_TOL {
        return Err(CliError::identity(format!(
            "identity violated: {} component deviates by {:e} at t = {}",
            worst.2, worst.0, worst.1
        )));
    }
    Ok(())
}

/// With θ = 0 the reduced chain routes every boost from the critical
/// class to the top class; its right-hand side must match the lumped
/// boundary form exactly on random states.
fn chain_lumping_identity(scenario: &Scenario, out_dir: &Path) -> Result<(), CliError> {
    let p = scenario.params;
    let rates = MolRates::from_decay(&scenario.decay, 0.0).map_err(CliError::from_core_config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d3_a55e55);
    let mut csv = String::from("sample,max_component_gap\n");
    let mut worst = (0.0f64, 0usize);
    for sample in 0..200 {
        let st = MolState {
            s: rng.gen_range(1.0..1000.0),
            i: rng.gen_range(0.0..500.0),
            r_f: rng.gen_range(0.0..300.0),
            r_w: rng.gen_range(0.0..300.0),
            r_c: rng.gen_range(0.0..300.0),
        };
        let d = mol_rhs(&st, &rates, &p, &scenario.birth).map_err(CliError::from_core_run)?;
        let n = st.total();
        let boost = p.boost_contact_multiplier * p.beta * st.i / n;
        let infection = p.beta * st.s * st.i / n;
        let lumped = MolState {
            s: scenario.birth.eval(n) - infection - p.d * st.s + rates.sigma_c * st.r_c,
            i: infection - p.infective_exit_rate() * st.i,
            r_f: p.gamma * st.i - (rates.mu_f + p.d) * st.r_f + boost * (st.r_c + st.r_w),
            r_w: rates.mu_f * st.r_f - (rates.nu_w + p.d) * st.r_w - boost * st.r_w,
            r_c: rates.nu_w * st.r_w - (rates.sigma_c + p.d) * st.r_c - boost * st.r_c,
        };
        let scale = [st.s, st.i, st.r_f, st.r_w, st.r_c]
            .iter()
            .fold(1.0f64, |a, &v| a.max(v.abs()));
        let gap = [
            d.s - lumped.s,
            d.i - lumped.i,
            d.r_f - lumped.r_f,
            d.r_w - lumped.r_w,
            d.r_c - lumped.r_c,
        ]
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()))
            / scale;
        csv.push_str(&format!("{sample},{}\n", fmt(gap)));
        if gap > worst.0 {
            worst = (gap, sample);
        }
    }
    write_atomic(&out_dir.join("comparison.csv"), &csv)?;

    let verdict = if worst.0 <= RHS_IDENTITY_TOL { "PASS" } else { "FAIL" };
    let report = format!(
        "pair: mol-theta0-vs-m2\n\
         identity: theta = 0 chain equals the lumped boundary routing\n\
         samples: 200 random states\n\
         max relative component gap = {:e} at sample {}\n\
         tolerance = {RHS_IDENTITY_TOL:e}\n\
         verdict: {verdict}\n",
        worst.0, worst.1
    );
    write_atomic(&out_dir.join("report.txt"), &report)?;
    println!("max component gap {:e} (tolerance {RHS_IDENTITY_TOL:e})", worst.0);
    if worst.0 > RHS_IDENTITY_TOL {
        return Err(CliError::identity(format!(
            "identity violated: component gap {:e} at sample {}",
            worst.0, worst.1
        )));
    }
    Ok(())
}
