//! Reproducible run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::flow::{Family, FlowSpec, Integrator};
use crate::surface::{make_perturbed_sphere, make_random_sphere, make_sphere, Mode, RadialGraph};
use crate::verify::Tolerances;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Sphere,
    Perturbed,
    Random,
}

/// Initial surface. `freq` is the perturbation frequency for `perturbed` and
/// the number of modes for `random`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub r0: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(default = "default_freq")]
    pub freq: u32,
}

fn default_freq() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub family: Family,
    pub m: usize,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    pub t_max: f64,
    #[serde(default = "default_stop")]
    pub stop_grad_sq: f64,
    /// Defaults to `t_max / 200`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<f64>,
}

fn default_integrator() -> Integrator {
    Integrator::Rk4
}

fn default_cfl() -> f64 {
    0.5
}

fn default_stop() -> f64 {
    1e-10
}

impl FlowConfig {
    pub fn spec(&self) -> FlowSpec {
        FlowSpec {
            family: self.family,
            m: self.m,
            integrator: self.integrator,
            cfl_safety: self.cfl_safety,
            t_max: self.t_max,
            stop_grad_sq: self.stop_grad_sq,
            record_every: self.record_every.unwrap_or(self.t_max / 200.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(rename = "grid_N")]
    pub grid_n: usize,
    pub initial: InitialConfig,
    pub flow: FlowConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_mode() -> Mode {
    Mode::Axisymmetric
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n = {} must be at least 2", self.n)));
        }
        let init = &self.initial;
        if !(init.r0 > 0.0) || !init.r0.is_finite() {
            return Err(Error::Config(format!("initial.r0 = {} must be positive", init.r0)));
        }
        if !init.eps.is_finite() || init.eps.abs() >= init.r0 {
            return Err(Error::Config(format!("initial.eps = {} must satisfy |eps| < r0", init.eps)));
        }
        if init.kind == InitialKind::Random {
            if self.mode != Mode::Axisymmetric {
                return Err(Error::Config("random initial data is axisymmetric only".into()));
            }
            if init.freq == 0 {
                return Err(Error::Config("random initial data needs freq >= 1 modes".into()));
            }
        }
        let tol = &self.tolerances;
        if !(tol.eq_tol >= 0.0 && tol.viol_tol >= 0.0) {
            return Err(Error::Config("tolerances must be nonnegative".into()));
        }
        self.flow.spec().validate(self.n)
    }

    /// Build the initial surface; geometric validation errors surface here.
    pub fn initial_graph(&self) -> Result<RadialGraph> {
        let init = &self.initial;
        match init.kind {
            InitialKind::Sphere => make_sphere(self.n, self.mode, self.grid_n, init.r0),
            InitialKind::Perturbed => {
                make_perturbed_sphere(self.n, self.mode, self.grid_n, init.r0, init.eps, init.freq)
            }
            InitialKind::Random => make_random_sphere(
                self.n,
                self.grid_n,
                init.r0,
                init.eps,
                init.freq as usize,
                self.seed,
            ),
        }
    }
}
