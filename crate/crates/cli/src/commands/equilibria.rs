//! `equilibria` subcommand: threshold analysis of the disease-free state.

use std::path::Path;

use immunokinetics_core::dfe_report;

use crate::config::load_scenario;
use crate::output::fmt;
use crate::CliError;

pub fn run(config_path: &Path) -> Result<(), CliError> {
    let scenario = load_scenario(config_path)?;
    let report =
        dfe_report(&scenario.params, &scenario.birth).map_err(CliError::from_core_config)?;

    println!("disease-free equilibrium");
    println!("  N*              {:.6}", report.n_star);
    println!("  S*              {:.6}", report.s_star);
    println!("  R0              {:.6}", report.r0);
    println!("  R0~             {:.6}", report.r0_tilde);
    println!("  classification  {}", report.classification.as_str());
    println!("  growth rate     {:.6}", report.growth_rate);
    println!();
    println!("n_star={}", fmt(report.n_star));
    println!("s_star={}", fmt(report.s_star));
    println!("r0={}", fmt(report.r0));
    println!("r0_tilde={}", fmt(report.r0_tilde));
    println!("classification={}", report.classification.as_str());
    println!("growth_rate={}", fmt(report.growth_rate));
    Ok(())
}
