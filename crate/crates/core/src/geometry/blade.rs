use std::f64::consts::{FRAC_PI_2, PI};

use super::baseline::BaselineBlade;
use super::design_space::{DesignSpace, Distribution};
use super::profile::SectionProfile;
use super::vec3::{cross, norm, sub, V3};
use crate::error::{Error, Result};

/// Chordwise node count: pressure-side trailing edge (0) → leading edge
/// ([`LEADING_EDGE`]) → suction-side trailing edge (50).
pub const CHORDWISE: usize = 51;
/// Radial node count, hub (0) → tip (25).
pub const RADIAL: usize = 26;
pub const NODES: usize = CHORDWISE * RADIAL;
pub const LEADING_EDGE: usize = 25;

/// Floor applied to node weights attached only to degenerate quads.
const AREA_FLOOR: f64 = 1e-14;

/// Structured 51×26 single-blade grid in metres.
///
/// Nodes are stored row-major as `[chordwise][radial]`, i.e. node `(i, j)` sits
/// at `i * RADIAL + j`. Coordinates: `x` along the shaft (positive forward),
/// `z` along the blade generator line, `y` completing a right-handed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BladeSurface {
    points: Vec<V3>,
    node_weights: Vec<f64>,
    degenerate_quads: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeWeights {
    pub weights: Vec<f64>,
    /// `(i, j)` of quads whose area fell below the degeneracy floor.
    pub degenerate: Vec<(usize, usize)>,
}

impl BladeSurface {
    pub fn from_points(points: Vec<V3>) -> Result<Self> {
        if points.len() != NODES {
            return Err(Error::LengthMismatch { expected: NODES, got: points.len() });
        }
        let NodeWeights { weights, degenerate } = mesh_node_weights(&points);
        Ok(Self { points, node_weights: weights, degenerate_quads: degenerate })
    }

    /// Rebuild from the blocked layout `[x_0..x_E, y_0..y_E, z_0..z_E]`.
    pub fn from_blocked(coords: &[f64]) -> Result<Self> {
        if coords.len() != 3 * NODES {
            return Err(Error::LengthMismatch { expected: 3 * NODES, got: coords.len() });
        }
        let points = (0..NODES).map(|k| [coords[k], coords[NODES + k], coords[2 * NODES + k]]).collect();
        Self::from_points(points)
    }

    pub fn to_blocked(&self) -> Vec<f64> {
        let mut out = vec![0.0; 3 * NODES];
        for (k, p) in self.points.iter().enumerate() {
            out[k] = p[0];
            out[NODES + k] = p[1];
            out[2 * NODES + k] = p[2];
        }
        out
    }

    #[inline]
    pub fn index(i: usize, j: usize) -> usize {
        i * RADIAL + j
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> V3 {
        self.points[Self::index(i, j)]
    }

    pub fn points(&self) -> &[V3] {
        &self.points
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn degenerate_quads(&self) -> &[(usize, usize)] {
        &self.degenerate_quads
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Total surface area (sum of quad vector-area magnitudes).
    pub fn area(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..CHORDWISE - 1 {
            for j in 0..RADIAL - 1 {
                total +=
                    quad_area(self.point(i, j), self.point(i + 1, j), self.point(i + 1, j + 1), self.point(i, j + 1));
            }
        }
        total
    }

    /// Whether the `(∂/∂i) × (∂/∂j)` quad normals point out of the blade.
    pub fn ij_normals_outward(&self) -> bool {
        super::mesh::closed_blade_mesh_raw(self).signed_volume() > 0.0
    }
}

/// Vector-area magnitude of a (possibly non-planar) quad `a b c d`.
#[inline]
pub(crate) fn quad_area(a: V3, b: V3, c: V3, d: V3) -> f64 {
    0.5 * norm(cross(sub(c, a), sub(d, b)))
}

/// Dual-cell node weights: each node collects a quarter of every incident quad.
pub fn mesh_node_weights(points: &[V3]) -> NodeWeights {
    assert_eq!(points.len(), NODES, "grid must hold 51×26 nodes");
    let p = |i: usize, j: usize| points[BladeSurface::index(i, j)];
    let mut weights = vec![0.0; NODES];
    let mut degenerate = Vec::new();
    for i in 0..CHORDWISE - 1 {
        for j in 0..RADIAL - 1 {
            let area = quad_area(p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1));
            if area < AREA_FLOOR {
                degenerate.push((i, j));
            }
            let share = 0.25 * area;
            for (a, b) in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)] {
                weights[BladeSurface::index(a, b)] += share;
            }
        }
    }
    for w in &mut weights {
        if *w < AREA_FLOOR {
            *w = AREA_FLOOR;
        }
    }
    NodeWeights { weights, degenerate }
}

/// Radial node positions in r/R, clustered towards the tip.
pub fn radial_stations(hub_ratio: f64) -> [f64; RADIAL] {
    let mut out = [0.0; RADIAL];
    for (j, r) in out.iter_mut().enumerate() {
        *r = hub_ratio + (1.0 - hub_ratio) * (FRAC_PI_2 * j as f64 / (RADIAL - 1) as f64).sin();
    }
    out[RADIAL - 1] = 1.0;
    out
}

/// Chordwise position (0 = leading edge, 1 = trailing edge) and side of node `i`:
/// `-1` on the pressure side, `+1` on the suction side, `0` at the leading edge.
pub fn chordwise_station(i: usize) -> (f64, f64) {
    let half = LEADING_EDGE;
    let (k, side) = match i.cmp(&half) {
        std::cmp::Ordering::Less => (i, -1.0),
        std::cmp::Ordering::Equal => (half, 0.0),
        std::cmp::Ordering::Greater => (CHORDWISE - 1 - i, 1.0),
    };
    let x = if k == half {
        0.0
    } else if k == 0 {
        1.0
    } else {
        0.5 * (1.0 + (PI * k as f64 / half as f64).cos())
    };
    (x, side)
}

/// Local section parameters at one radial node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SectionParams {
    pub radius: f64,
    pub chord: f64,
    pub pitch: f64,
    pub max_camber: f64,
    pub fore_aft_camber: f64,
    pub thickness: f64,
    pub skew_rad: f64,
    pub rake: f64,
}

/// Place one chordwise node of a section on its pitch helix.
///
/// The section is laid out in the developed cylinder plane (arc length `u`
/// along the rotation direction, axial `x` forward) with the chord inclined at
/// the geometric pitch angle, then wrapped back onto the cylinder of radius `r`.
pub(crate) fn wrap_section_point(s: &SectionParams, profile: &SectionProfile, i: usize) -> V3 {
    let (xc, side) = chordwise_station(i);
    let phi = (s.pitch / (2.0 * PI * s.radius)).atan();
    let (sin_phi, cos_phi) = phi.sin_cos();
    let offset = s.chord
        * (s.max_camber * profile.camber(xc)
            + s.fore_aft_camber * SectionProfile::sectional_camber(xc)
            + side * s.thickness * profile.thickness(xc));
    let along = s.chord * (0.5 - xc);
    let u = s.radius * s.skew_rad + along * cos_phi - offset * sin_phi;
    let x = -s.rake + along * sin_phi + offset * cos_phi;
    let theta = u / s.radius;
    [x, s.radius * theta.sin(), s.radius * theta.cos()]
}

/// Build the blade grid for design vector `t`.
pub fn apply_design_vector(base: &BaselineBlade, space: &DesignSpace, t: &[f64]) -> Result<BladeSurface> {
    if t.len() != space.dim() {
        return Err(Error::LengthMismatch { expected: space.dim(), got: t.len() });
    }
    let d = base.diameter();
    let radii = radial_stations(base.hub_ratio());
    let mut points = vec![[0.0; 3]; NODES];
    for (j, &rr) in radii.iter().enumerate() {
        let value = |which| base.distribution(which, rr) + space.perturbation(which, t, rr);
        let params = SectionParams {
            radius: rr * 0.5 * d,
            chord: value(Distribution::Chord) * d,
            pitch: value(Distribution::Pitch) * d,
            max_camber: value(Distribution::MaxCamber),
            fore_aft_camber: value(Distribution::SectionalCamber),
            thickness: base.thickness_over_c(rr),
            skew_rad: -base.skew_deg(rr).to_radians(),
            rake: base.rake_over_d(rr) * d,
        };
        for i in 0..CHORDWISE {
            points[BladeSurface::index(i, j)] = wrap_section_point(&params, base.profile(), i);
        }
    }
    BladeSurface::from_points(points)
}
