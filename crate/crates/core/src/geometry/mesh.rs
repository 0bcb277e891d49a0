//! Triangle meshes: blade closure, primitives, and OBJ/STL exchange.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::blade::{BladeSurface, CHORDWISE, LEADING_EDGE, RADIAL};
use super::vec3::{add, cross, dot, norm, scale, sub, V3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<V3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|k| self.vertices[k]);
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    pub fn flip(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    pub fn translated(&self, d: V3) -> Self {
        Self { vertices: self.vertices.iter().map(|&v| add(v, d)).collect(), triangles: self.triangles.clone() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { vertices: self.vertices.iter().map(|&v| scale(v, s)).collect(), triangles: self.triangles.clone() }
    }

    /// Apply a 3×3 matrix (row-major) to every vertex.
    pub fn transformed(&self, m: [[f64; 3]; 3]) -> Self {
        let vertices = self.vertices.iter().map(|v| [dot(m[0], *v), dot(m[1], *v), dot(m[2], *v)]).collect();
        Self { vertices, triangles: self.triangles.clone() }
    }

    /// Merge disjoint meshes.
    pub fn union(&self, other: &Self) -> Self {
        let off = self.vertices.len();
        let mut out = self.clone();
        out.vertices.extend_from_slice(&other.vertices);
        out.triangles.extend(other.triangles.iter().map(|t| t.map(|k| k + off)));
        out
    }

    /// Split every triangle into four through its edge midpoints.
    pub fn subdivided(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<V3>| {
            let key = (a.min(b), a.max(b));
            *mids.entry(key).or_insert_with(|| {
                vertices.push(scale(add(vertices[a], vertices[b]), 0.5));
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        Self { vertices, triangles }
    }

    /// First half-edge without an opposite partner, if any.
    pub fn open_edge(&self) -> Option<(usize, usize)> {
        let mut count: HashMap<(usize, usize), i64> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a, b)).or_default() += 1;
            }
        }
        let mut keys: Vec<_> = count.keys().copied().collect();
        keys.sort_unstable();
        keys.into_iter().find(|&(a, b)| count.get(&(b, a)).copied().unwrap_or(0) != count[&(a, b)])
    }

    pub fn bounding_box(&self) -> (V3, V3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn to_stl(&self, name: &str) -> String {
        let mut s = format!("solid {name}\n");
        for t in &self.triangles {
            let [a, b, c] = t.map(|k| self.vertices[k]);
            let n = cross(sub(b, a), sub(c, a));
            let l = norm(n);
            let n = if l > 0.0 { scale(n, 1.0 / l) } else { n };
            let _ = writeln!(s, "  facet normal {:e} {:e} {:e}", n[0], n[1], n[2]);
            s.push_str("    outer loop\n");
            for v in [a, b, c] {
                let _ = writeln!(s, "      vertex {:e} {:e} {:e}", v[0], v[1], v[2]);
            }
            s.push_str("    endloop\n  endfacet\n");
        }
        let _ = writeln!(s, "endsolid {name}");
        s
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {:e} {:e} {:e}", v[0], v[1], v[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }

    /// Read an OBJ (polygons fan-triangulated) or STL (ASCII or binary) file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "obj" => parse_obj(&String::from_utf8_lossy(&bytes)),
            "stl" => parse_stl(&bytes),
            _ => Err(Error::InvalidInput(format!("unsupported mesh format: {}", path.display()))),
        }
    }
}

pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        let parse_err = |msg: String| Error::Parse { line: k + 1, msg };
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
                if c.len() != 3 {
                    return Err(parse_err("vertex needs 3 coordinates".into()));
                }
                vertices.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        let v: i64 = first.parse().map_err(|_| parse_err(format!("bad face index `{tok}`")))?;
                        let n = vertices.len() as i64;
                        let v = if v < 0 { n + v } else { v - 1 };
                        if v < 0 || v >= n {
                            return Err(parse_err(format!("face index `{tok}` out of range")));
                        }
                        Ok(v as usize)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(parse_err("face needs at least 3 vertices".into()));
                }
                for w in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[w], idx[w + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(TriMesh { vertices, triangles })
}

pub fn parse_stl(bytes: &[u8]) -> Result<TriMesh> {
    let mut soup: Vec<[V3; 3]> = Vec::new();
    let is_binary = bytes.len() >= 84 && {
        let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        84 + 50 * n == bytes.len()
    };
    if is_binary {
        let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        let f = |o: usize| f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64;
        for t in 0..n {
            let base = 84 + 50 * t + 12;
            let v = |k: usize| [f(base + 12 * k), f(base + 12 * k + 4), f(base + 12 * k + 8)];
            soup.push([v(0), v(1), v(2)]);
        }
    } else {
        let text = String::from_utf8_lossy(bytes);
        let mut current = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            if it.next() == Some("vertex") {
                let c: Vec<f64> = it
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e: std::num::ParseFloatError| Error::Parse { line: k + 1, msg: e.to_string() })?;
                if c.len() != 3 {
                    return Err(Error::Parse { line: k + 1, msg: "vertex needs 3 coordinates".into() });
                }
                current.push([c[0], c[1], c[2]]);
                if current.len() == 3 {
                    soup.push([current[0], current[1], current[2]]);
                    current.clear();
                }
            }
        }
    }
    // weld exactly coincident vertices
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let triangles = soup
        .iter()
        .map(|tri| {
            tri.map(|v| {
                let key = v.map(|c| (c + 0.0).to_bits());
                *index.entry(key).or_insert_with(|| {
                    vertices.push(v);
                    vertices.len() - 1
                })
            })
        })
        .collect();
    Ok(TriMesh { vertices, triangles })
}

/// Triangulate quad `a b c d` along its shorter diagonal, dropping repeated corners.
fn push_quad(tris: &mut Vec<[usize; 3]>, verts: &[V3], q: [usize; 4]) {
    let mut ring: Vec<usize> = Vec::with_capacity(4);
    for &v in &q {
        if ring.last() != Some(&v) {
            ring.push(v);
        }
    }
    if ring.len() > 1 && ring[0] == ring[ring.len() - 1] {
        ring.pop();
    }
    match ring.len() {
        3 => tris.push([ring[0], ring[1], ring[2]]),
        4 => {
            let [a, b, c, d] = [ring[0], ring[1], ring[2], ring[3]];
            if norm(sub(verts[c], verts[a])) <= norm(sub(verts[d], verts[b])) {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
        }
        _ => {}
    }
}

/// Closed blade with fixed winding (side quads follow increasing i then j).
pub(crate) fn closed_blade_mesh_raw(surface: &BladeSurface) -> TriMesh {
    const RING: usize = CHORDWISE - 1; // trailing-edge node 50 welded onto node 0
    let vid = |i: usize, j: usize| j * RING + (i % RING);
    let mut vertices = vec![[0.0; 3]; RING * RADIAL];
    for j in 0..RADIAL {
        for i in 0..RING {
            vertices[vid(i, j)] = surface.point(i, j);
        }
    }
    let mut triangles = Vec::with_capacity(2 * RING * RADIAL + 4 * LEADING_EDGE);
    for j in 0..RADIAL - 1 {
        for i in 0..CHORDWISE - 1 {
            push_quad(&mut triangles, &vertices, [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    // ladder caps pairing pressure node k with suction node 50 - k
    for k in 0..LEADING_EDGE {
        let (p0, p1) = (k, k + 1);
        let (s0, s1) = (CHORDWISE - 1 - k, CHORDWISE - 2 - k);
        let root = [vid(s0, 0), vid(s1, 0), vid(p1, 0), vid(p0, 0)];
        push_quad(&mut triangles, &vertices, root);
        let t = RADIAL - 1;
        let tip = [vid(p0, t), vid(p1, t), vid(s1, t), vid(s0, t)];
        push_quad(&mut triangles, &vertices, tip);
    }
    TriMesh { vertices, triangles }
}

/// Watertight, outward-oriented closed body of one blade: the side surface
/// welded along the trailing edge, capped at root and tip by ladder strips
/// joining matching pressure and suction nodes.
pub fn closed_blade_mesh(surface: &BladeSurface) -> TriMesh {
    let mut mesh = closed_blade_mesh_raw(surface);
    if mesh.signed_volume() < 0.0 {
        mesh.flip();
    }
    mesh
}

/// OBJ export of the open grid: vertices in storage order, one quad per cell.
pub fn grid_to_obj(surface: &BladeSurface) -> String {
    let mut s = String::new();
    for p in surface.points() {
        let _ = writeln!(s, "v {:e} {:e} {:e}", p[0], p[1], p[2]);
    }
    for i in 0..CHORDWISE - 1 {
        for j in 0..RADIAL - 1 {
            let v = |a: usize, b: usize| BladeSurface::index(a, b) + 1;
            let _ = writeln!(s, "f {} {} {} {}", v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
        }
    }
    s
}

/// Axis-aligned box `[lo, hi]` with outward winding.
pub fn cuboid(lo: V3, hi: V3) -> TriMesh {
    let vertices: Vec<V3> = (0..8)
        .map(|k| {
            [
                if k & 1 == 0 { lo[0] } else { hi[0] },
                if k & 2 == 0 { lo[1] } else { hi[1] },
                if k & 4 == 0 { lo[2] } else { hi[2] },
            ]
        })
        .collect();
    let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
    let mut triangles = Vec::new();
    for q in quads {
        triangles.push([q[0], q[1], q[2]]);
        triangles.push([q[0], q[2], q[3]]);
    }
    TriMesh { vertices, triangles }
}

/// Icosahedron refined `levels` times with vertices projected onto the sphere.
pub fn icosphere(radius: f64, levels: usize) -> TriMesh {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ];
    let project = |v: V3| scale(v, radius / norm(v));
    let mut mesh = TriMesh {
        vertices: raw.iter().map(|&v| project(v)).collect(),
        triangles: vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ],
    };
    for _ in 0..levels {
        mesh = mesh.subdivided();
        for v in &mut mesh.vertices {
            *v = project(*v);
        }
    }
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_design_vector, BaselineBlade, DesignSpace};

    #[test]
    fn primitives_are_closed_and_outward() {
        let cube = cuboid([0.0; 3], [1.0; 3]);
        assert!(cube.open_edge().is_none());
        assert!((cube.signed_volume() - 1.0).abs() < 1e-15);
        let s = icosphere(1.0, 2);
        assert!(s.open_edge().is_none());
        assert!(s.signed_volume() > 0.0);
        assert!(s.subdivided().open_edge().is_none());
    }

    #[test]
    fn blade_closure_is_watertight() {
        let base = BaselineBlade::e779a();
        let space = DesignSpace::default_for(&base, Default::default()).unwrap();
        let surface = apply_design_vector(&base, &space, &vec![0.0; 40]).unwrap();
        let mesh = closed_blade_mesh(&surface);
        assert!(mesh.open_edge().is_none());
        assert!(mesh.signed_volume() > 0.0);
        assert_eq!(mesh.vertices.len(), 50 * 26);
    }

    #[test]
    fn obj_and_stl_round_trip() {
        let cube = cuboid([0.0; 3], [1.0, 2.0, 3.0]);
        let back = parse_obj(&cube.to_obj()).unwrap();
        assert_eq!(back, cube);
        let stl = parse_stl(cube.to_stl("c").as_bytes()).unwrap();
        assert_eq!(stl.triangles.len(), 12);
        assert_eq!(stl.vertices.len(), 8);
        assert!(stl.open_edge().is_none());
        assert!((stl.signed_volume() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn open_mesh_detected() {
        let mut cube = cuboid([0.0; 3], [1.0; 3]);
        cube.triangles.pop();
        assert!(cube.open_edge().is_some());
    }
}
