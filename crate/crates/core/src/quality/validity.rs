//! Geometric validity checks for blade grids.

use serde::{Deserialize, Serialize};

use crate::geometry::mesh::closed_blade_mesh;
use crate::geometry::vec3::{cross, dot, norm, sub, V3};
use crate::geometry::{BladeSurface, TriMesh, CHORDWISE, LEADING_EDGE, RADIAL};

/// Thickness may dip this far below zero (as a fraction of chord) before a
/// section counts as crossed.
pub const THICKNESS_TOLERANCE: f64 = 1e-6;
/// Quads smaller than this (m²) are collapsed.
pub const MIN_QUAD_AREA: f64 = 1e-12;
/// Chordwise nodes bracketing mid-chord on each side.
pub const MID_CHORD: [usize; 4] = [12, 13, 37, 38];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    SectionCrossing,
    QuadIntegrity,
    RadialFold,
    SelfIntersection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub check: Check,
    /// Radial station index.
    pub station: usize,
    /// Chordwise node (or quad) index; for self-intersections the first triangle.
    pub chordwise: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub failures: Vec<Failure>,
    pub checks_run: Vec<Check>,
}

/// Run the fast checks, plus the exact triangle-intersection audit when `exact`.
pub fn validity_check(surface: &BladeSurface, exact: bool) -> ValidityReport {
    let mut failures = Vec::new();
    let mut checks_run = vec![Check::SectionCrossing, Check::QuadIntegrity, Check::RadialFold];
    section_crossing(surface, &mut failures, false);
    quad_integrity(surface, &mut failures, false);
    radial_fold(surface, &mut failures, false);
    if exact {
        checks_run.push(Check::SelfIntersection);
        self_intersection(&closed_blade_mesh(surface), &mut failures);
    }
    ValidityReport { valid: failures.is_empty(), failures, checks_run }
}

/// Fast checks only, stopping at the first failure.
pub fn is_valid_fast(surface: &BladeSurface) -> bool {
    let mut f = Vec::new();
    section_crossing(surface, &mut f, true);
    if f.is_empty() {
        quad_integrity(surface, &mut f, true);
    }
    if f.is_empty() {
        radial_fold(surface, &mut f, true);
    }
    f.is_empty()
}

fn developed(p: V3, mean_radius: f64) -> [f64; 2] {
    [mean_radius * p[1].atan2(p[2]), p[0]]
}

fn section_crossing(s: &BladeSurface, out: &mut Vec<Failure>, first_only: bool) {
    for j in 0..RADIAL {
        let mean_radius =
            (0..CHORDWISE).map(|i| s.point(i, j)).map(|p| (p[1] * p[1] + p[2] * p[2]).sqrt()).sum::<f64>()
                / CHORDWISE as f64;
        let at = |i: usize| developed(s.point(i, j), mean_radius);
        let (te, le) = (at(0), at(LEADING_EDGE));
        let chord_vec = [le[0] - te[0], le[1] - te[1]];
        let chord = chord_vec[0].hypot(chord_vec[1]);
        if !(chord > 0.0) {
            out.push(Failure { check: Check::SectionCrossing, station: j, chordwise: LEADING_EDGE, magnitude: 1.0 });
            if first_only {
                return;
            }
            continue;
        }
        let normal = [-chord_vec[1] / chord, chord_vec[0] / chord];
        for i in 1..LEADING_EDGE {
            let (p, q) = (at(i), at(CHORDWISE - 1 - i));
            let thickness = (q[0] - p[0]) * normal[0] + (q[1] - p[1]) * normal[1];
            if thickness < -THICKNESS_TOLERANCE * chord {
                out.push(Failure {
                    check: Check::SectionCrossing,
                    station: j,
                    chordwise: i,
                    magnitude: -thickness / chord,
                });
                if first_only {
                    return;
                }
            }
        }
    }
}

/// Twice the vector area of quad `(i, j)`.
fn quad_normal(s: &BladeSurface, i: usize, j: usize) -> V3 {
    cross(sub(s.point(i + 1, j + 1), s.point(i, j)), sub(s.point(i, j + 1), s.point(i + 1, j)))
}

fn quad_integrity(s: &BladeSurface, out: &mut Vec<Failure>, first_only: bool) {
    for i in 0..CHORDWISE - 1 {
        let mut prev: Option<V3> = None;
        for j in 0..RADIAL - 1 {
            let n = quad_normal(s, i, j);
            let area = 0.5 * norm(n);
            if area < MIN_QUAD_AREA {
                out.push(Failure { check: Check::QuadIntegrity, station: j, chordwise: i, magnitude: area });
                if first_only {
                    return;
                }
            } else if let Some(p) = prev {
                let c = dot(p, n);
                if c < 0.0 {
                    out.push(Failure {
                        check: Check::QuadIntegrity,
                        station: j,
                        chordwise: i,
                        magnitude: -c / (norm(p) * norm(n)),
                    });
                    if first_only {
                        return;
                    }
                }
            }
            prev = (area >= MIN_QUAD_AREA).then_some(n);
        }
    }
}

fn radial_fold(s: &BladeSurface, out: &mut Vec<Failure>, first_only: bool) {
    let radius = |i: usize, j: usize| {
        let p = s.point(i, j);
        (p[1] * p[1] + p[2] * p[2]).sqrt()
    };
    for j in 0..RADIAL - 1 {
        let below = MID_CHORD.iter().map(|&i| radius(i, j)).fold(f64::NEG_INFINITY, f64::max);
        let above = MID_CHORD.iter().map(|&i| radius(i, j + 1)).fold(f64::INFINITY, f64::min);
        if below >= above {
            out.push(Failure {
                check: Check::RadialFold,
                station: j,
                chordwise: MID_CHORD[0],
                magnitude: below - above,
            });
            if first_only {
                return;
            }
        }
    }
}

#[derive(Clone, Copy)]
struct Aabb {
    lo: V3,
    hi: V3,
}

impl Aabb {
    fn of(pts: &[V3]) -> Self {
        let mut b = Aabb { lo: [f64::INFINITY; 3], hi: [f64::NEG_INFINITY; 3] };
        for p in pts {
            for k in 0..3 {
                b.lo[k] = b.lo[k].min(p[k]);
                b.hi[k] = b.hi[k].max(p[k]);
            }
        }
        b
    }

    fn union(a: Self, b: Self) -> Self {
        let mut o = a;
        for k in 0..3 {
            o.lo[k] = a.lo[k].min(b.lo[k]);
            o.hi[k] = a.hi[k].max(b.hi[k]);
        }
        o
    }

    fn overlaps(&self, o: &Self) -> bool {
        (0..3).all(|k| self.lo[k] <= o.hi[k] && o.lo[k] <= self.hi[k])
    }
}

enum Node {
    Leaf(Aabb, Vec<usize>),
    Inner(Aabb, Box<Node>, Box<Node>),
}

impl Node {
    fn bbox(&self) -> &Aabb {
        match self {
            Node::Leaf(b, _) | Node::Inner(b, ..) => b,
        }
    }

    fn build(items: &mut [(usize, Aabb, V3)]) -> Node {
        let bbox = items.iter().map(|x| x.1).reduce(Aabb::union).expect("non-empty");
        if items.len() <= 4 {
            return Node::Leaf(bbox, items.iter().map(|x| x.0).collect());
        }
        let ext = sub(bbox.hi, bbox.lo);
        let axis = (0..3).max_by(|&a, &b| ext[a].total_cmp(&ext[b])).expect("3 axes");
        items.sort_by(|a, b| a.2[axis].total_cmp(&b.2[axis]).then(a.0.cmp(&b.0)));
        let mid = items.len() / 2;
        let (l, r) = items.split_at_mut(mid);
        Node::Inner(bbox, Box::new(Node::build(l)), Box::new(Node::build(r)))
    }

    fn query(&self, b: &Aabb, out: &mut Vec<usize>) {
        if !self.bbox().overlaps(b) {
            return;
        }
        match self {
            Node::Leaf(_, ids) => out.extend_from_slice(ids),
            Node::Inner(_, l, r) => {
                l.query(b, out);
                r.query(b, out);
            }
        }
    }
}

/// Segment `p→q` crosses the interior of triangle `t` (Möller–Trumbore).
fn segment_hits_triangle(p: V3, q: V3, t: [V3; 3]) -> bool {
    let dir = sub(q, p);
    let e1 = sub(t[1], t[0]);
    let e2 = sub(t[2], t[0]);
    let h = cross(dir, e2);
    let det = dot(e1, h);
    let scale = norm(e1) * norm(e2) * norm(dir);
    if det.abs() <= 1e-14 * scale {
        return false;
    }
    let inv = 1.0 / det;
    let s = sub(p, t[0]);
    let u = inv * dot(s, h);
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let qv = cross(s, e1);
    let v = inv * dot(dir, qv);
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    let along = inv * dot(e2, qv);
    (0.0..=1.0).contains(&along)
}

fn triangles_intersect(a: [V3; 3], b: [V3; 3]) -> bool {
    (0..3).any(|k| segment_hits_triangle(a[k], a[(k + 1) % 3], b))
        || (0..3).any(|k| segment_hits_triangle(b[k], b[(k + 1) % 3], a))
}

/// Pairs of triangles that share no vertex yet intersect.
pub fn intersecting_pairs(mesh: &TriMesh) -> Vec<(usize, usize)> {
    if mesh.triangles.is_empty() {
        return Vec::new();
    }
    let tri = |t: usize| mesh.triangles[t].map(|k| mesh.vertices[k]);
    let mut items: Vec<(usize, Aabb, V3)> = (0..mesh.triangles.len())
        .map(|t| {
            let p = tri(t);
            let c = [
                (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                (p[0][1] + p[1][1] + p[2][1]) / 3.0,
                (p[0][2] + p[1][2] + p[2][2]) / 3.0,
            ];
            (t, Aabb::of(&p), c)
        })
        .collect();
    let boxes: Vec<Aabb> = items.iter().map(|x| x.1).collect();
    let root = Node::build(&mut items);
    let mut pairs = Vec::new();
    let mut cand = Vec::new();
    for t in 0..mesh.triangles.len() {
        cand.clear();
        root.query(&boxes[t], &mut cand);
        cand.sort_unstable();
        let vt = mesh.triangles[t];
        for &u in cand.iter().filter(|&&u| u > t) {
            let vu = mesh.triangles[u];
            if vt.iter().any(|a| vu.contains(a)) {
                continue;
            }
            if triangles_intersect(tri(t), tri(u)) {
                pairs.push((t, u));
            }
        }
    }
    pairs
}

fn self_intersection(mesh: &TriMesh, out: &mut Vec<Failure>) {
    // side triangles come first, two per quad in (j, i) order
    let per_station = 2 * (CHORDWISE - 1);
    for (t, _) in intersecting_pairs(mesh) {
        out.push(Failure {
            check: Check::SelfIntersection,
            station: (t / per_station).min(RADIAL - 1),
            chordwise: t % per_station / 2,
            magnitude: 1.0,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::{cuboid, icosphere};
    use crate::geometry::{apply_design_vector, BaselineBlade, DesignSpace};

    fn baseline() -> BladeSurface {
        let base = BaselineBlade::e779a();
        let space = DesignSpace::default_for(&base, Default::default()).unwrap();
        apply_design_vector(&base, &space, &[0.0; 40]).unwrap()
    }

    #[test]
    fn baseline_is_valid_including_exact_audit() {
        let r = validity_check(&baseline(), true);
        assert!(r.valid, "{:?}", &r.failures[..r.failures.len().min(5)]);
        assert_eq!(r.checks_run.len(), 4);
        assert!(is_valid_fast(&baseline()));
    }

    #[test]
    fn crossed_section_reported_at_its_station() {
        let s = baseline();
        let mut pts = s.points().to_vec();
        let j = 9;
        // push the pressure side through the suction side around mid-chord
        for i in 10..16 {
            let (p, q) = (BladeSurface::index(i, j), BladeSurface::index(CHORDWISE - 1 - i, j));
            let d = sub(pts[q], pts[p]);
            pts[p] = [pts[p][0] + 2.0 * d[0], pts[p][1] + 2.0 * d[1], pts[p][2] + 2.0 * d[2]];
        }
        let r = validity_check(&BladeSurface::from_points(pts).unwrap(), false);
        assert!(!r.valid);
        let f = r.failures.iter().find(|f| f.check == Check::SectionCrossing).unwrap();
        assert_eq!(f.station, j);
    }

    #[test]
    fn swapped_nodes_flip_a_quad() {
        let s = baseline();
        let mut pts = s.points().to_vec();
        pts.swap(BladeSurface::index(30, 12), BladeSurface::index(31, 12));
        let r = validity_check(&BladeSurface::from_points(pts).unwrap(), false);
        assert!(r.failures.iter().any(|f| f.check == Check::QuadIntegrity));
    }

    #[test]
    fn radial_fold_detected() {
        let s = baseline();
        let mut pts = s.points().to_vec();
        for &i in &MID_CHORD {
            let (a, b) = (BladeSurface::index(i, 5), BladeSurface::index(i, 6));
            pts.swap(a, b);
        }
        let r = validity_check(&BladeSurface::from_points(pts).unwrap(), false);
        assert!(r.failures.iter().any(|f| f.check == Check::RadialFold && f.station == 5));
    }

    #[test]
    fn intersection_oracle_on_primitives() {
        let a = cuboid([0.0; 3], [1.0; 3]);
        assert!(intersecting_pairs(&a).is_empty());
        assert!(intersecting_pairs(&icosphere(1.0, 2)).is_empty());
        let overlapping = a.union(&cuboid([0.5, 0.5, 0.5], [1.5, 1.5, 1.5]));
        assert!(!intersecting_pairs(&overlapping).is_empty());
        let apart = a.union(&cuboid([2.0; 3], [3.0; 3]));
        assert!(intersecting_pairs(&apart).is_empty());
    }
}
