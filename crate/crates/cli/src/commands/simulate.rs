//! `simulate` subcommand: run one of the five models.

use std::path::Path;

use immunokinetics_core as core;
use immunokinetics_core::{
    mol_simulate, sample_initial_density, simulate, sirs_dde_simulate, sis_dde_simulate,
    transit_time, ImmunityGrid, ModelTag, MolRates, MolState, SimulationConfig, TimeStep,
    Trajectory,
};

use crate::config::{load_scenario, Scenario};
use crate::output::{ensure_dir, write_density, write_timeseries};
use crate::{CliError, ModelArg};

pub fn run(
    config_path: &Path,
    model: ModelArg,
    out_dir: &Path,
    dt_override: Option<f64>,
    grid_cells: Option<usize>,
    t_end_override: Option<f64>,
) -> Result<(), CliError> {
    let mut scenario = load_scenario(config_path)?;
    if let Some(dt) = dt_override {
        if !(dt > 0.0) {
            return Err(CliError::config("--dt must be positive"));
        }
        scenario.dt = TimeStep::Fixed(dt);
    }
    if let Some(t_end) = t_end_override {
        if !(t_end > 0.0) {
            return Err(CliError::config("--t-end must be positive"));
        }
        scenario.t_end = t_end;
    }
    match (grid_cells, model) {
        (Some(cells), ModelArg::M1 | ModelArg::M2) => {
            scenario.grid = ImmunityGrid::uniform(scenario.params.z_min, scenario.params.z_max, cells)
                .map_err(CliError::from_core_config)?;
        }
        (Some(_), _) => {
            eprintln!(
                "warning: --grid-cells has no effect on the {} model, ignoring",
                model_tag(model).as_str()
            );
        }
        (None, _) => {}
    }

    ensure_dir(out_dir)?;
    let traj = run_model(&scenario, model)?;
    write_timeseries(out_dir, &traj)?;
    if traj.model.is_pde() {
        write_density(out_dir, &traj)?;
    }
    eprintln!(
        "wrote {} samples to {}",
        traj.len(),
        out_dir.join("timeseries.csv").display()
    );
    Ok(())
}

fn model_tag(model: ModelArg) -> ModelTag {
    match model {
        ModelArg::M1 => ModelTag::M1,
        ModelArg::M2 => ModelTag::M2,
        ModelArg::Mol => ModelTag::Mol,
        ModelArg::SirsDde => ModelTag::SirsDde,
        ModelArg::SisDde => ModelTag::SisDde,
    }
}

pub fn run_model(scenario: &Scenario, model: ModelArg) -> Result<Trajectory<f64>, CliError> {
    match model {
        ModelArg::M1 | ModelArg::M2 => {
            let cfg = pde_config(scenario, model_tag(model));
            simulate(&cfg).map_err(CliError::from_core_run)
        }
        ModelArg::Mol => run_mol(scenario),
        ModelArg::SirsDde => run_sirs(scenario),
        ModelArg::SisDde => run_sis(scenario),
    }
}

pub fn pde_config(scenario: &Scenario, tag: ModelTag) -> SimulationConfig<f64> {
    SimulationConfig {
        params: scenario.params,
        birth: scenario.birth.clone(),
        decay: scenario.decay,
        kernel: scenario.kernel.clone(),
        grid: scenario.grid.clone(),
        dt: scenario.dt,
        t_end: scenario.t_end,
        s0: scenario.s0,
        i0: scenario.i0,
        psi: scenario.psi.clone(),
        model: tag,
        output_stride: scenario.output_stride,
    }
}

fn initial_density_cells(scenario: &Scenario) -> Result<Vec<f64>, CliError> {
    sample_initial_density(&scenario.psi, &scenario.params, &scenario.decay, &scenario.grid)
        .map_err(CliError::from_core_config)
}

fn run_mol(scenario: &Scenario) -> Result<Trajectory<f64>, CliError> {
    let theta = scenario.theta.ok_or_else(|| {
        CliError::config("the mol model needs kernel.theta (boost split probability)")
    })?;
    let rates =
        MolRates::from_decay(&scenario.decay, theta).map_err(CliError::from_core_config)?;
    // Split the initial density over the three chain compartments: the
    // grid thirds from critical (bottom) to fully immune (top).
    let cells = initial_density_cells(scenario)?;
    let grid = &scenario.grid;
    let (z_min, z_max) = scenario.decay.domain();
    let h = (z_max - z_min) / 3.0;
    let (mut r_c, mut r_w, mut r_f) = (0.0, 0.0, 0.0);
    for (i, &z) in grid.centers().iter().enumerate() {
        let mass = cells[i] * grid.widths()[i];
        if z < z_min + h {
            r_c += mass;
        } else if z < z_min + 2.0 * h {
            r_w += mass;
        } else {
            r_f += mass;
        }
    }
    let initial = MolState {
        s: scenario.s0,
        i: scenario.i0,
        r_f,
        r_w,
        r_c,
    };
    let dt = reduced_dt(scenario, 0.05);
    mol_simulate(
        &initial,
        &rates,
        &scenario.params,
        &scenario.birth,
        scenario.t_end,
        dt,
    )
    .map_err(CliError::from_core_run)
}

fn reduced_dt(scenario: &Scenario, default: f64) -> f64 {
    match scenario.dt {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Auto => default,
    }
}

/// The delay of both reduced systems is the transit time of the immunity
/// interval; the step must divide it exactly.
fn delay_and_dt(scenario: &Scenario) -> Result<(f64, f64), CliError> {
    let (z_min, z_max) = scenario.decay.domain();
    let tau =
        transit_time(&scenario.decay, z_min, z_max).map_err(CliError::from_core_config)?;
    let dt = match scenario.dt {
        TimeStep::Fixed(dt) => {
            let k = (tau / dt).round();
            if k < 1.0 || (tau / dt - k).abs() > 1e-9 * k {
                return Err(CliError::config(format!(
                    "run.dt = {dt} does not divide the delay tau = {tau} exactly"
                )));
            }
            dt
        }
        TimeStep::Auto => tau / 400.0,
    };
    Ok((tau, dt))
}

fn run_sirs(scenario: &Scenario) -> Result<Trajectory<f64>, CliError> {
    let (tau, dt) = delay_and_dt(scenario)?;
    let cells = initial_density_cells(scenario)?;
    let r0 = scenario.grid.integrate(&cells);
    sirs_dde_simulate(
        &scenario.params,
        &scenario.birth,
        tau,
        scenario.s0,
        scenario.i0,
        r0,
        scenario.t_end,
        dt,
    )
    .map_err(CliError::from_core_run)
}

fn run_sis(scenario: &Scenario) -> Result<Trajectory<f64>, CliError> {
    if scenario.params.d_i != 0.0 {
        return Err(CliError::config(
            "the sis-dde model requires d_I = 0 (no disease-induced death)",
        ));
    }
    let (tau, dt) = delay_and_dt(scenario)?;
    if scenario.s0 + scenario.i0 > 1.0 + 1e-9 {
        return Err(CliError::config(
            "the sis-dde model runs on a unit population: need s0 + i0 <= 1",
        ));
    }
    if !matches!(scenario.psi, core::InitialDensity::Zero) {
        eprintln!(
            "warning: the sis-dde model derives R = 1 - S - I; initial.psi is ignored"
        );
    }
    sis_dde_simulate(
        &scenario.params,
        tau,
        scenario.s0,
        scenario.i0,
        scenario.t_end,
        dt,
    )
    .map_err(CliError::from_core_run)
}
