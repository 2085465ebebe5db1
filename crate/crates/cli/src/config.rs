//! JSON run configuration: model descriptor, weight descriptor, numerics.
//!
//! Unknown keys are rejected everywhere so a typo cannot silently fall back
//! to a default.

use serde::Deserialize;

use drawdown_occupation::{Error, LevyModel, Result, WeightFunction};

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDescriptor {
    Brownian { mu: f64, sigma: f64 },
    CramerLundbergExp { mu: f64, lambda: f64, beta: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaDescriptor {
    Constant {
        q: f64,
    },
    OneStep {
        q: f64,
        p: f64,
        a: f64,
    },
    Step {
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_mesh")]
    pub mesh: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
}

fn default_mesh() -> f64 {
    1e-3
}

fn default_x_max() -> f64 {
    5.0
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            mesh: default_mesh(),
            x_max: default_x_max(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelDescriptor,
    pub omega: OmegaDescriptor,
    #[serde(default)]
    pub numerics: Numerics,
}

impl RunConfig {
    /// Validated model; constructor invariants mirror the descriptors.
    pub fn model(&self) -> Result<LevyModel> {
        match self.model {
            ModelDescriptor::Brownian { mu, sigma } => LevyModel::brownian(mu, sigma),
            ModelDescriptor::CramerLundbergExp { mu, lambda, beta } => {
                LevyModel::cramer_lundberg(mu, lambda, beta)
            }
        }
    }

    /// Validated weight function.
    pub fn weight(&self) -> Result<WeightFunction> {
        match &self.omega {
            OmegaDescriptor::Constant { q } => WeightFunction::constant(*q),
            OmegaDescriptor::OneStep { q, p, a } => WeightFunction::one_step(*q, *p, *a),
            OmegaDescriptor::Step {
                breakpoints,
                levels,
            } => WeightFunction::general_step(breakpoints.clone(), levels.clone()),
        }
    }

    /// The constant rate for the `scale` command, which evaluates classical
    /// scale functions of a single `(model, q)` pair.
    pub fn constant_q(&self) -> Result<f64> {
        match &self.omega {
            OmegaDescriptor::Constant { q } => Ok(*q),
            _ => Err(Error::domain(
                "the scale command needs a constant omega descriptor carrying q",
            )),
        }
    }
}

pub fn load(path: &str) -> std::result::Result<RunConfig, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    serde_json::from_str(&text).map_err(|e| format!("cannot parse config {path}: {e}"))
}
