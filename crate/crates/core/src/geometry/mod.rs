//! Blade geometry: baseline tables, the B-spline design space and surface grids.

mod baseline;
mod blade;
pub mod bspline;
mod design_space;
pub mod mesh;
mod profile;

pub use baseline::{BaselineBlade, Station};
pub use blade::{
    apply_design_vector, chordwise_station, mesh_node_weights, radial_stations, BladeSurface, NodeWeights, CHORDWISE,
    LEADING_EDGE, NODES, RADIAL,
};
pub use design_space::{eval_distribution, BoundFractions, DesignSpace, Distribution, DistributionBlock};
pub use mesh::{closed_blade_mesh, TriMesh};
pub use profile::SectionProfile;

/// Euclidean 3-vector helpers shared across the geometry code.
pub(crate) mod vec3 {
    pub type V3 = [f64; 3];

    #[inline]
    pub fn sub(a: V3, b: V3) -> V3 {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    #[inline]
    pub fn add(a: V3, b: V3) -> V3 {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    #[inline]
    pub fn scale(a: V3, s: f64) -> V3 {
        [a[0] * s, a[1] * s, a[2] * s]
    }

    #[inline]
    pub fn cross(a: V3, b: V3) -> V3 {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }

    #[inline]
    pub fn dot(a: V3, b: V3) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    #[inline]
    pub fn norm(a: V3) -> f64 {
        dot(a, a).sqrt()
    }
}
