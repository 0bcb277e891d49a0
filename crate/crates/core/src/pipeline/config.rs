use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{BaselineBlade, BoundFractions, DesignSpace};
use crate::hydro::{OperatingPoint, SurrogateConstants};
use crate::kle::{latent_bounds, EigenForm};
use crate::sampling::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Full study protocol.
    Paper,
    /// Reduced sample counts and generations for quick runs.
    Desk,
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            _ => Err(Error::InvalidInput(format!("unknown profile `{s}` (expected paper or desk)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub psi: usize,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub epsilon: f64,
    pub kappa: f64,
    /// Moment-block scale; `None` derives it from the geometric variance.
    pub beta: Option<f64>,
    pub form: EigenForm,
    /// Modes kept in the subspace file and in the quality curves.
    pub stored_modes: usize,
    /// Leading modes exported as deformation meshes.
    pub mode_exports: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityConfig {
    pub samples: usize,
    pub runs: usize,
    pub kappas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrustConfig {
    /// `None` uses the evaluator's own baseline `K_T`.
    pub reference: Option<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSizing {
    /// `None` applies `10 · m · 3` (reduced spaces only).
    pub population: Option<usize>,
    pub generations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub full: RunSizing,
    pub ssdr: RunSizing,
    pub kle: RunSizing,
    pub crossover_rate: f64,
    pub crossover_index: f64,
    pub mutation_rate: Option<f64>,
    pub mutation_index: f64,
}

/// Everything a run depends on. Stored in the run directory on first use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub profile: Profile,
    pub seed: u64,
    /// Station table; `None` uses the bundled E779A fixture.
    pub baseline: Option<PathBuf>,
    /// Design-space JSON; `None` derives the box from `bounds`.
    pub design_space: Option<PathBuf>,
    pub bounds: BoundFractions,
    pub sampling: SamplingConfig,
    pub reduction: ReductionConfig,
    pub validity: ValidityConfig,
    pub operating_point: OperatingPoint,
    pub surrogate: SurrogateConstants,
    pub thrust: ThrustConfig,
    pub optimizer: OptimizerConfig,
}

impl StudyConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let (psi, validity_samples, runs, gens_full, gens_reduced) = match profile {
            Profile::Paper => (10_000, 5_000_000, 5, 40, 30),
            Profile::Desk => (1000, 100_000, 3, 20, 20),
        };
        Self {
            profile,
            seed: 1,
            baseline: None,
            design_space: None,
            bounds: BoundFractions::default(),
            sampling: SamplingConfig { psi, scheme: Scheme::MonteCarloUniform },
            reduction: ReductionConfig {
                epsilon: 0.95,
                kappa: 3.0,
                beta: None,
                form: EigenForm::Auto,
                stored_modes: 40,
                mode_exports: 5,
            },
            validity: ValidityConfig { samples: validity_samples, runs, kappas: vec![1.0, 2.0, 3.0] },
            operating_point: OperatingPoint::default(),
            surrogate: SurrogateConstants::default(),
            thrust: ThrustConfig { reference: None, tolerance: 0.015 },
            optimizer: OptimizerConfig {
                full: RunSizing { population: Some(800), generations: gens_full },
                ssdr: RunSizing { population: Some(150), generations: gens_reduced },
                kle: RunSizing { population: Some(180), generations: gens_reduced },
                crossover_rate: 0.9,
                crossover_index: 15.0,
                mutation_rate: None,
                mutation_index: 20.0,
            },
        }
    }

    /// Profile defaults overlaid with a (possibly partial) JSON document.
    /// A `profile` key in the document picks the base profile unless `profile` is given.
    pub fn from_json(text: &str, profile: Option<Profile>) -> Result<Self> {
        let overlay: Value = serde_json::from_str(text)?;
        let profile = match (profile, overlay.get("profile")) {
            (Some(p), _) => p,
            (None, Some(v)) => serde_json::from_value(v.clone())?,
            (None, None) => Profile::Paper,
        };
        let mut base = serde_json::to_value(Self::for_profile(profile))?;
        merge(&mut base, overlay);
        base["profile"] = serde_json::to_value(profile)?;
        let cfg: Self = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.sampling.psi < 2 {
            return bad(format!("psi must be at least 2, got {}", self.sampling.psi));
        }
        let r = &self.reduction;
        if !(r.epsilon > 0.0 && r.epsilon <= 1.0) {
            return bad(format!("epsilon must lie in (0, 1], got {}", r.epsilon));
        }
        latent_bounds(&[], r.kappa)?;
        for &k in &self.validity.kappas {
            latent_bounds(&[], k)?;
        }
        if r.beta.is_some_and(|b| !(b >= 0.0)) {
            return bad("beta must be non-negative".into());
        }
        if self.validity.samples < 1000 || self.validity.runs < 2 {
            return bad("validity needs at least 1000 samples and 2 runs".into());
        }
        self.operating_point.validate()?;
        if !(self.thrust.tolerance > 0.0 && self.thrust.tolerance < 1.0) {
            return bad(format!("thrust tolerance must lie in (0, 1), got {}", self.thrust.tolerance));
        }
        if self.optimizer.full.population.is_none() {
            return bad("the full-space run needs an explicit population".into());
        }
        Ok(())
    }

    pub fn baseline(&self) -> Result<BaselineBlade> {
        match &self.baseline {
            Some(p) => BaselineBlade::load(p),
            None => Ok(BaselineBlade::e779a()),
        }
    }

    pub fn design_space(&self, base: &BaselineBlade) -> Result<DesignSpace> {
        match &self.design_space {
            Some(p) => DesignSpace::from_json(&std::fs::read_to_string(p)?),
            None => DesignSpace::default_for(base, self.bounds),
        }
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
