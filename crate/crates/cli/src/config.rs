//! Scenario files: TOML with one section per model ingredient. Unknown
//! keys are rejected and the assembled model is validated on load.

use std::path::Path;

use immunokinetics_core as core;
use immunokinetics_core::{
    validate_model, BirthFunction, BoostingKernel, DecayFunction, ImmunityGrid, InitialDensity,
    LevelFunction, ModelParameters, P0Family,
};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub parameters: ParametersSection,
    pub birth: BirthSection,
    pub decay: DecaySection,
    pub kernel: KernelSection,
    pub grid: GridSection,
    pub initial: InitialSection,
    pub run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametersSection {
    pub beta: f64,
    pub gamma: f64,
    pub d: f64,
    #[serde(rename = "d_I")]
    pub d_i: f64,
    pub z_min: f64,
    pub z_max: f64,
    #[serde(default = "one")]
    pub boost_contact_multiplier: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", deny_unknown_fields, rename_all = "snake_case")]
pub enum BirthSection {
    BevertonHolt {
        rho: f64,
        #[serde(rename = "K")]
        k: f64,
    },
    Tabulated {
        samples: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", deny_unknown_fields, rename_all = "snake_case")]
pub enum DecaySection {
    Constant { g0: f64 },
    Affine { a: f64, c: f64 },
    Power { a: f64, q: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub c_max: LevelSpec,
    pub c0: LevelSpec,
    pub p0: P0Spec,
    /// Boost-split probability of the reduced chain (mol model only).
    pub theta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", deny_unknown_fields, rename_all = "snake_case")]
pub enum LevelSpec {
    Constant { value: f64 },
    Linear { at_min: f64, at_max: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", deny_unknown_fields, rename_all = "snake_case")]
pub enum P0Spec {
    Uniform,
    TruncatedExponential { rate: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_cells: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub s0: f64,
    pub i0: f64,
    pub psi: PsiSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", deny_unknown_fields, rename_all = "snake_case")]
pub enum PsiSpec {
    Zero,
    Constant { value: f64 },
    Gaussian { center: f64, width: f64, mass: f64 },
    SteadyRecovery { i0: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub dt: DtSpec,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Fixed(f64),
    Keyword(String),
}

/// Scenario resolved into core types.
pub struct Scenario {
    pub params: ModelParameters<f64>,
    pub birth: BirthFunction<f64>,
    pub decay: DecayFunction<f64>,
    pub kernel: BoostingKernel<f64>,
    pub grid: ImmunityGrid<f64>,
    pub s0: f64,
    pub i0: f64,
    pub psi: InitialDensity<f64>,
    pub theta: Option<f64>,
    pub dt: core::TimeStep<f64>,
    pub t_end: f64,
    pub output_stride: usize,
}

impl Scenario {
    /// Pointwise form of the initial density, for the characteristic
    /// oracle (which needs ψ as a function, not cell averages).
    pub fn psi_function(&self) -> Box<dyn Fn(f64) -> f64 + '_> {
        match self.psi {
            InitialDensity::Zero => Box::new(|_z| 0.0),
            InitialDensity::Constant(v) => Box::new(move |_z| v),
            InitialDensity::Gaussian {
                center,
                width,
                mass,
            } => Box::new(move |z| {
                let u = (z - center) / width;
                mass / (width * (2.0 * std::f64::consts::PI).sqrt()) * (-u * u / 2.0).exp()
            }),
            InitialDensity::SteadyRecovery { i0 } => {
                let gamma = self.params.gamma;
                let d = self.params.d;
                let decay = self.decay;
                Box::new(move |z| {
                    let age = core::decay::emission_elapsed(z, &decay).unwrap_or(f64::NAN);
                    gamma * i0 * (-d * age).exp() / decay.eval(z)
                })
            }
            InitialDensity::CellAverages(_) => {
                unreachable!("scenario files do not carry raw cell averages")
            }
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    let file: ScenarioFile =
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    resolve(file)
}

fn resolve(file: ScenarioFile) -> Result<Scenario, CliError> {
    let p = &file.parameters;
    let params = ModelParameters {
        beta: p.beta,
        gamma: p.gamma,
        d: p.d,
        d_i: p.d_i,
        z_min: p.z_min,
        z_max: p.z_max,
        boost_contact_multiplier: p.boost_contact_multiplier,
    };

    let birth = match file.birth {
        BirthSection::BevertonHolt { rho, k } => BirthFunction::beverton_holt(rho, k),
        BirthSection::Tabulated { samples } => BirthFunction::tabulated(samples),
    }
    .map_err(CliError::from_core_config)?;

    let decay = match file.decay {
        DecaySection::Constant { g0 } => DecayFunction::constant(g0, p.z_min, p.z_max),
        DecaySection::Affine { a, c } => DecayFunction::affine(a, c, p.z_min, p.z_max),
        DecaySection::Power { a, q } => DecayFunction::power(a, q, p.z_min, p.z_max),
    }
    .map_err(CliError::from_core_config)?;

    let level = |spec: &LevelSpec| match *spec {
        LevelSpec::Constant { value } => LevelFunction::Constant(value),
        LevelSpec::Linear { at_min, at_max } => LevelFunction::Linear { at_min, at_max },
    };
    let p0 = match file.kernel.p0 {
        P0Spec::Uniform => P0Family::Uniform,
        P0Spec::TruncatedExponential { rate } => P0Family::TruncatedExponential { rate },
    };
    let kernel = BoostingKernel::new(
        level(&file.kernel.c_max),
        level(&file.kernel.c0),
        p0,
        p.z_min,
        p.z_max,
    )
    .map_err(CliError::from_core_config)?;

    if let Some(theta) = file.kernel.theta {
        if !(0.0..=1.0).contains(&theta) {
            return Err(CliError::config("kernel.theta must lie in [0, 1]"));
        }
    }

    let grid = ImmunityGrid::uniform(p.z_min, p.z_max, file.grid.n_cells)
        .map_err(CliError::from_core_config)?;

    let report =
        validate_model(&params, &birth, &decay, &kernel).map_err(CliError::from_core_config)?;
    if !report.is_valid() {
        let mut msg = String::from("model violates its admissibility conditions:");
        for failure in report.failures() {
            msg.push_str(&format!("\n  - {}: {}", failure.name, failure.detail));
            if let Some(w) = failure.witness {
                msg.push_str(&format!(" (witness {w})"));
            }
        }
        return Err(CliError::config(msg));
    }

    let psi = match file.initial.psi {
        PsiSpec::Zero => InitialDensity::Zero,
        PsiSpec::Constant { value } => InitialDensity::Constant(value),
        PsiSpec::Gaussian {
            center,
            width,
            mass,
        } => InitialDensity::Gaussian {
            center,
            width,
            mass,
        },
        PsiSpec::SteadyRecovery { i0 } => InitialDensity::SteadyRecovery { i0 },
    };

    let dt = match file.run.dt {
        DtSpec::Fixed(v) => {
            if !(v > 0.0) {
                return Err(CliError::config("run.dt must be positive"));
            }
            core::TimeStep::Fixed(v)
        }
        DtSpec::Keyword(s) if s == "auto" => core::TimeStep::Auto,
        DtSpec::Keyword(s) => {
            return Err(CliError::config(format!(
                "run.dt must be a number or \"auto\", got \"{s}\""
            )));
        }
    };
    if !(file.run.t_end > 0.0) {
        return Err(CliError::config("run.t_end must be positive"));
    }
    if file.initial.s0 < 0.0 || file.initial.i0 < 0.0 {
        return Err(CliError::config("initial.s0 and initial.i0 must be >= 0"));
    }

    Ok(Scenario {
        params,
        birth,
        decay,
        kernel,
        grid,
        s0: file.initial.s0,
        i0: file.initial.i0,
        psi,
        theta: file.kernel.theta,
        dt,
        t_end: file.run.t_end,
        output_stride: file.run.output_stride.max(1),
    })
}
