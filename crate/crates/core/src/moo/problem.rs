use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{apply_design_vector, BaselineBlade, BladeSurface, DesignSpace};
use crate::hydro::{Evaluator, HydroResult};
use crate::kle::ModalSubspace;
use crate::quality::is_valid_fast;
use crate::sampling::Bounds;

/// What happened to one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Outcome {
    /// Rejected by the geometric validity gate; the evaluator was not called.
    Invalid,
    /// The evaluator returned an error.
    Failed {
        message: String,
    },
    Evaluated(HydroResult),
}

/// A bounded decision space with a scoring function.
pub trait Problem: Sync {
    fn bounds(&self) -> &Bounds;
    fn evaluate(&self, x: &[f64]) -> Outcome;
}

/// Where decision vectors live.
#[derive(Debug, Clone, Copy)]
pub enum SearchSpace<'a> {
    /// The 40 design parameters `t`.
    Full { base: &'a BaselineBlade, space: &'a DesignSpace },
    /// Latent coordinates `v` of the active modes, inside `±√(κλ)`.
    Latent(&'a ModalSubspace),
}

impl SearchSpace<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            SearchSpace::Full { .. } => "full",
            SearchSpace::Latent(s) if s.map.dim() > s.map.geometry_dim() => "ssdr",
            SearchSpace::Latent(_) => "kle",
        }
    }

    pub fn bounds(&self) -> Result<Bounds> {
        match self {
            SearchSpace::Full { space, .. } => Bounds::new(space.lower(), space.upper()),
            SearchSpace::Latent(s) => {
                let (lo, hi) = s.bounds().into_iter().unzip();
                Bounds::new(lo, hi)
            }
        }
    }

    pub fn surface(&self, x: &[f64]) -> Result<BladeSurface> {
        match self {
            SearchSpace::Full { base, space } => apply_design_vector(base, space, x),
            SearchSpace::Latent(s) => s.reconstruct(x),
        }
    }

    /// Decision-variable column prefix for exports.
    pub fn variable_prefix(&self) -> &'static str {
        match self {
            SearchSpace::Full { .. } => "t",
            SearchSpace::Latent(_) => "v",
        }
    }
}

/// Blade design problem: decode, gate on validity, evaluate.
pub struct BladeProblem<'a> {
    pub space: SearchSpace<'a>,
    pub evaluator: &'a dyn Evaluator,
    bounds: Bounds,
}

impl<'a> BladeProblem<'a> {
    pub fn new(space: SearchSpace<'a>, evaluator: &'a dyn Evaluator) -> Result<Self> {
        let bounds = space.bounds()?;
        if bounds.dim() == 0 {
            return Err(Error::InvalidInput("search space has no dimensions".into()));
        }
        Ok(Self { space, evaluator, bounds })
    }
}

impl Problem for BladeProblem<'_> {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Outcome {
        let surface = match self.space.surface(x) {
            Ok(s) if is_valid_fast(&s) => s,
            _ => return Outcome::Invalid,
        };
        match self.evaluator.evaluate(&surface) {
            Ok(r) => Outcome::Evaluated(r),
            Err(e) => Outcome::Failed { message: e.to_string() },
        }
    }
}
