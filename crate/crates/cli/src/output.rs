//! CSV and report emission. Files are written to a temporary sibling and
//! renamed into place; numbers carry 17 significant digits so that
//! double-precision values round-trip exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use immunokinetics_core::Trajectory;

use crate::CliError;

/// 17 significant digits, exponent form.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp: PathBuf = path.with_extension("tmp");
    let io_err = |e: std::io::Error| CliError::io(format!("{}: {e}", path.display()));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(contents.as_bytes()).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

/// `timeseries.csv` with the fixed schema `t,S,I,R,N,Lambda,B`; the flux
/// columns stay empty for the unstructured models.
pub fn write_timeseries(dir: &Path, traj: &Trajectory<f64>) -> Result<(), CliError> {
    let mut out = String::from("t,S,I,R,N,Lambda,B\n");
    let has_flux = !traj.lambda.is_empty();
    for k in 0..traj.len() {
        let (lambda, b) = if has_flux {
            (fmt(traj.lambda[k]), fmt(traj.b_inflow[k]))
        } else {
            (String::new(), String::new())
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt(traj.t[k]),
            fmt(traj.s[k]),
            fmt(traj.i[k]),
            fmt(traj.r[k]),
            fmt(traj.n[k]),
            lambda,
            b
        ));
    }
    write_atomic(&dir.join("timeseries.csv"), &out)
}

/// `density.csv` with schema `t,z,r`: one row per sample time and cell.
pub fn write_density(dir: &Path, traj: &Trajectory<f64>) -> Result<(), CliError> {
    let grid = traj
        .grid
        .as_ref()
        .ok_or_else(|| CliError::config("density output needs a structured model"))?;
    let mut out = String::from("t,z,r\n");
    for (k, density) in traj.density.iter().enumerate() {
        let t = fmt(traj.t[k]);
        for (i, &z) in grid.centers().iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", t, fmt(z), fmt(density[i])));
        }
    }
    write_atomic(&dir.join("density.csv"), &out)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))
}
