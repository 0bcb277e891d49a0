use serde::{Deserialize, Serialize};

use super::baseline::BaselineBlade;
use super::bspline::BSplineBasis;
use crate::error::{Error, Result};

/// The four radial distributions carried by the design vector, in block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Pitch ratio `P/D`.
    Pitch,
    /// Chord ratio `c/D`.
    Chord,
    /// Maximum camber ratio `f_max/c` of the a=0.8 mean line.
    MaxCamber,
    /// Amplitude (in units of `f/c`) of the fore/aft camber shape.
    SectionalCamber,
}

impl Distribution {
    pub const ALL: [Distribution; 4] =
        [Distribution::Pitch, Distribution::Chord, Distribution::MaxCamber, Distribution::SectionalCamber];
}

#[derive(Debug, Clone)]
pub struct DistributionBlock {
    pub distribution: Distribution,
    pub basis: BSplineBasis,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Bounded design space `T`: additive B-spline perturbations of the four
/// baseline distributions, one block of control points per distribution.
#[derive(Debug, Clone)]
pub struct DesignSpace {
    hub_ratio: f64,
    blocks: Vec<DistributionBlock>,
}

#[derive(Serialize, Deserialize)]
struct BlockFile {
    distribution: Distribution,
    control_points: usize,
    degree: usize,
    knots: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DesignSpaceFile {
    hub_ratio: f64,
    blocks: Vec<BlockFile>,
}

/// Relative bound half-widths used to derive the default box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundFractions {
    pub pitch: f64,
    pub chord: f64,
    /// Applied to the largest baseline `f_max/c` for both camber blocks.
    pub camber: f64,
}

impl Default for BoundFractions {
    fn default() -> Self {
        Self { pitch: 0.10, chord: 0.10, camber: 0.30 }
    }
}

impl DesignSpace {
    pub fn new(hub_ratio: f64, blocks: Vec<DistributionBlock>) -> Result<Self> {
        let mut seen = Vec::new();
        for b in &blocks {
            if seen.contains(&b.distribution) {
                return Err(Error::InvalidInput(format!("{:?} appears twice", b.distribution)));
            }
            seen.push(b.distribution);
            let n = b.basis.n_ctrl();
            if b.lower.len() != n || b.upper.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: b.lower.len().min(b.upper.len()) });
            }
            if b.lower.iter().zip(&b.upper).any(|(l, u)| !(l < u)) {
                return Err(Error::InvalidInput(format!(
                    "{:?}: every lower bound must be below its upper bound",
                    b.distribution
                )));
            }
            let (lo, hi) = b.basis.domain();
            if (lo - hub_ratio).abs() > 1e-12 || (hi - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("{:?}: knots must span [hub_ratio, 1]", b.distribution)));
            }
        }
        Ok(Self { hub_ratio, blocks })
    }

    /// Four cubic distributions with ten control points each on clamped
    /// uniform knots, bounded by `fractions` of the baseline.
    pub fn default_for(base: &BaselineBlade, fractions: BoundFractions) -> Result<Self> {
        let hub = base.hub_ratio();
        let max_camber = (0..=1000)
            .map(|k| {
                let r = hub + (1.0 - hub) * k as f64 / 1000.0;
                base.distribution(Distribution::MaxCamber, r).abs()
            })
            .fold(0.0, f64::max);
        let blocks = Distribution::ALL
            .iter()
            .map(|&d| {
                let basis = BSplineBasis::clamped_uniform(10, 3, hub, 1.0)?;
                let half: Vec<f64> = (0..basis.n_ctrl())
                    .map(|i| match d {
                        Distribution::Pitch => fractions.pitch * base.distribution(d, basis.greville(i)).abs(),
                        Distribution::Chord => fractions.chord * base.distribution(d, basis.greville(i)).abs(),
                        Distribution::MaxCamber | Distribution::SectionalCamber => fractions.camber * max_camber,
                    })
                    .collect();
                Ok(DistributionBlock { distribution: d, lower: half.iter().map(|h| -h).collect(), upper: half, basis })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(hub, blocks)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DesignSpaceFile = serde_json::from_str(text)?;
        let blocks = file
            .blocks
            .into_iter()
            .map(|b| {
                let basis = BSplineBasis::new(b.degree, b.knots)?;
                if basis.n_ctrl() != b.control_points {
                    return Err(Error::InvalidInput(format!(
                        "{:?}: knot vector implies {} control points, not {}",
                        b.distribution,
                        basis.n_ctrl(),
                        b.control_points
                    )));
                }
                Ok(DistributionBlock { distribution: b.distribution, basis, lower: b.lower, upper: b.upper })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.hub_ratio, blocks)
    }

    pub fn to_json(&self) -> String {
        let file = DesignSpaceFile {
            hub_ratio: self.hub_ratio,
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockFile {
                    distribution: b.distribution,
                    control_points: b.basis.n_ctrl(),
                    degree: b.basis.degree(),
                    knots: b.basis.knots().to_vec(),
                    lower: b.lower.clone(),
                    upper: b.upper.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("design space serialises")
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.basis.n_ctrl()).sum()
    }

    pub fn hub_ratio(&self) -> f64 {
        self.hub_ratio
    }

    pub fn blocks(&self) -> &[DistributionBlock] {
        &self.blocks
    }

    pub fn lower(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.lower.iter().copied()).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.upper.iter().copied()).collect()
    }

    /// Index range of `which` inside the design vector, if it is designed.
    pub fn block_range(&self, which: Distribution) -> Option<std::ops::Range<usize>> {
        let mut start = 0;
        for b in &self.blocks {
            let n = b.basis.n_ctrl();
            if b.distribution == which {
                return Some(start..start + n);
            }
            start += n;
        }
        None
    }

    /// B-spline perturbation of `which` at `r` (zero when not designed).
    pub fn perturbation(&self, which: Distribution, t: &[f64], r: f64) -> f64 {
        let mut start = 0;
        for b in &self.blocks {
            let n = b.basis.n_ctrl();
            if b.distribution == which {
                return b.basis.eval(&t[start..start + n], r);
            }
            start += n;
        }
        0.0
    }
}

/// Baseline distribution plus its B-spline perturbation at `r` (in r/R).
pub fn eval_distribution(
    base: &BaselineBlade,
    space: &DesignSpace,
    which: Distribution,
    t: &[f64],
    r: f64,
) -> Result<f64> {
    let lo = space.hub_ratio();
    if !(r >= lo - 1e-12 && r <= 1.0 + 1e-12) {
        return Err(Error::RadiusOutOfRange { r, lo, hi: 1.0 });
    }
    if t.len() != space.dim() {
        return Err(Error::LengthMismatch { expected: space.dim(), got: t.len() });
    }
    let r = r.clamp(lo, 1.0);
    Ok(base.distribution(which, r) + space.perturbation(which, t, r))
}
