//! Volumetric geometric moments of closed triangle meshes.

mod oracle;

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::vec3::{cross, sub, V3};
use crate::geometry::TriMesh;

pub use oracle::brute_force_moments;

/// Which normalisation a [`MomentVector`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Raw,
    Central,
    Invariant,
}

/// Moments `M_{p,q,r}` keyed by exponent triple.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub frame: Frame,
    /// Highest order `p+q+r` present.
    pub order: usize,
    pub components: BTreeMap<[usize; 3], f64>,
    /// Per-component standard error (Monte-Carlo estimates only).
    pub std_error: Option<BTreeMap<[usize; 3], f64>>,
}

/// Exponent triples with `p+q+r == s`, lexicographic in `(p, q, r)`.
pub fn exponents_of_order(s: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity((s + 1) * (s + 2) / 2);
    for p in 0..=s {
        for q in 0..=s - p {
            out.push([p, q, s - p - q]);
        }
    }
    out
}

/// Exponent triples with `p+q+r <= s`, lexicographic in `(p, q, r)`.
pub fn exponents_up_to(s: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for p in 0..=s {
        for q in 0..=s - p {
            for r in 0..=s - p - q {
                out.push([p, q, r]);
            }
        }
    }
    out
}

impl MomentVector {
    pub fn get(&self, p: usize, q: usize, r: usize) -> Option<f64> {
        self.components.get(&[p, q, r]).copied()
    }

    fn at(&self, e: [usize; 3]) -> f64 {
        self.components.get(&e).copied().unwrap_or(0.0)
    }

    /// The third-order components in lexicographic order.
    pub fn third_order(&self) -> Result<[f64; 10]> {
        let mut out = [0.0; 10];
        for (k, e) in exponents_of_order(3).into_iter().enumerate() {
            out[k] = *self
                .components
                .get(&e)
                .ok_or_else(|| Error::InvalidInput(format!("moment {}.{}.{} missing", e[0], e[1], e[2])))?;
        }
        Ok(out)
    }

    pub fn volume(&self) -> f64 {
        self.at([0, 0, 0])
    }

    pub fn centroid(&self) -> Result<V3> {
        let m0 = self.volume();
        if !(m0 > 0.0) || self.frame != Frame::Raw {
            return Err(Error::Numerical(format!("no centroid for volume {m0} in {:?} frame", self.frame)));
        }
        Ok([self.at([1, 0, 0]) / m0, self.at([0, 1, 0]) / m0, self.at([0, 0, 1]) / m0])
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("moment vectors always serialize")
    }
}

fn key(e: &[usize; 3]) -> String {
    format!("{}.{}.{}", e[0], e[1], e[2])
}

fn parse_key(k: &str) -> Option<[usize; 3]> {
    let mut it = k.split('.').map(|s| s.parse::<usize>().ok());
    let e = [it.next()??, it.next()??, it.next()??];
    it.next().is_none().then_some(e)
}

#[derive(Serialize, Deserialize)]
struct MomentFile {
    frame: Frame,
    order: usize,
    components: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    std_error: Option<BTreeMap<String, f64>>,
}

impl Serialize for MomentVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let to_str = |m: &BTreeMap<[usize; 3], f64>| m.iter().map(|(e, v)| (key(e), *v)).collect();
        MomentFile {
            frame: self.frame,
            order: self.order,
            components: to_str(&self.components),
            std_error: self.std_error.as_ref().map(to_str),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MomentVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = MomentFile::deserialize(d)?;
        let from_str = |m: BTreeMap<String, f64>| {
            m.into_iter()
                .map(|(k, v)| {
                    parse_key(&k)
                        .map(|e| (e, v))
                        .ok_or_else(|| serde::de::Error::custom(format!("bad moment key `{k}`")))
                })
                .collect::<std::result::Result<BTreeMap<_, _>, D::Error>>()
        };
        Ok(MomentVector {
            frame: f.frame,
            order: f.order,
            components: from_str(f.components)?,
            std_error: f.std_error.map(from_str).transpose()?,
        })
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Homogeneous polynomial in barycentric coordinates, degree `n`,
/// coefficient of `l1^i l2^j l3^(n-i-j)` stored at `i*(n+1)+j`.
#[derive(Clone)]
struct BaryPoly {
    n: usize,
    c: Vec<f64>,
}

impl BaryPoly {
    fn one() -> Self {
        Self { n: 0, c: vec![1.0] }
    }

    fn times_linear(&self, l: [f64; 3]) -> Self {
        let n = self.n + 1;
        let mut c = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..=self.n {
            for j in 0..=self.n - i {
                let v = self.c[i * (self.n + 1) + j];
                if v == 0.0 {
                    continue;
                }
                c[(i + 1) * (n + 1) + j] += v * l[0];
                c[i * (n + 1) + j + 1] += v * l[1];
                c[i * (n + 1) + j] += v * l[2];
            }
        }
        Self { n, c }
    }

    /// Integral over the reference triangle `{u, v >= 0, u + v <= 1}`.
    fn integrate(&self, fact: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..=self.n {
            for j in 0..=self.n - i {
                let k = self.n - i - j;
                s += self.c[i * (self.n + 1) + j] * fact[i] * fact[j] * fact[k];
            }
        }
        s / fact[self.n + 2]
    }
}

/// Exact `∫ x^a y^b z^c` over the parametric triangle for every `a+b+c <= deg`,
/// indexed `[a][b][c]` in a flat cube of side `deg+1`.
fn triangle_monomials(tri: [V3; 3], deg: usize, fact: &[f64]) -> Vec<f64> {
    let side = deg + 1;
    let mut out = vec![0.0; side * side * side];
    let lin = |k: usize| [tri[0][k], tri[1][k], tri[2][k]];
    let (lx, ly, lz) = (lin(0), lin(1), lin(2));
    // powers built incrementally: x^a, then y^b on top, then z^c
    let mut xa = BaryPoly::one();
    for a in 0..=deg {
        let mut xb = xa.clone();
        for b in 0..=deg - a {
            let mut xc = xb.clone();
            for c in 0..=deg - a - b {
                out[(a * side + b) * side + c] = xc.integrate(fact);
                if c < deg - a - b {
                    xc = xc.times_linear(lz);
                }
            }
            if b < deg - a {
                xb = xb.times_linear(ly);
            }
        }
        if a < deg {
            xa = xa.times_linear(lx);
        }
    }
    out
}

fn check_closed(mesh: &TriMesh) -> Result<()> {
    if mesh.triangles.is_empty() {
        return Err(Error::InvalidInput("empty mesh".into()));
    }
    if let Some((a, b)) = mesh.open_edge() {
        return Err(Error::NotWatertight(a, b));
    }
    Ok(())
}

/// Raw moments up to `max_order` by per-facet closed-form integration of the
/// divergence form, averaged over the three axis choices.
pub fn surface_moments(mesh: &TriMesh, max_order: usize) -> Result<MomentVector> {
    check_closed(mesh)?;
    let mv = moments_unchecked(mesh, max_order, [0.0; 3]);
    let vol = mv.volume();
    if !(vol > 0.0) {
        return Err(Error::Orientation(vol));
    }
    Ok(mv)
}

fn moments_unchecked(mesh: &TriMesh, max_order: usize, origin: V3) -> MomentVector {
    let deg = max_order + 1;
    let side = deg + 1;
    let fact: Vec<f64> = (0..=deg + 2).map(factorial).collect();
    let exps = exponents_up_to(max_order);
    let mut acc = vec![0.0; exps.len()];
    for t in &mesh.triangles {
        let tri = t.map(|k| sub(mesh.vertices[k], origin));
        let n = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
        let ints = triangle_monomials(tri, deg, &fact);
        let at = |a: usize, b: usize, c: usize| ints[(a * side + b) * side + c];
        for (slot, &[p, q, r]) in acc.iter_mut().zip(&exps) {
            *slot += (n[0] * at(p + 1, q, r) / (p + 1) as f64
                + n[1] * at(p, q + 1, r) / (q + 1) as f64
                + n[2] * at(p, q, r + 1) / (r + 1) as f64)
                / 3.0;
        }
    }
    MomentVector {
        frame: Frame::Raw,
        order: max_order,
        components: exps.into_iter().zip(acc).collect(),
        std_error: None,
    }
}

/// Central moments `μ_{p,q,r}` from raw moments by binomial expansion about the centroid.
pub fn to_central(m: &MomentVector) -> Result<MomentVector> {
    let c = m.centroid()?;
    let mut components = BTreeMap::new();
    for &[p, q, r] in m.components.keys() {
        let mut s = 0.0;
        for i in 0..=p {
            for j in 0..=q {
                for k in 0..=r {
                    let raw = m
                        .components
                        .get(&[i, j, k])
                        .ok_or_else(|| Error::InvalidInput(format!("raw moment {i}.{j}.{k} missing")))?;
                    s += binomial(p, i)
                        * binomial(q, j)
                        * binomial(r, k)
                        * (-c[0]).powi((p - i) as i32)
                        * (-c[1]).powi((q - j) as i32)
                        * (-c[2]).powi((r - k) as i32)
                        * raw;
                }
            }
        }
        components.insert([p, q, r], s);
    }
    Ok(MomentVector { frame: Frame::Central, order: m.order, components, std_error: None })
}

/// Third-order invariants `μ_{p,q,r} / M_{0,0,0}^{1+(p+q+r)/3}`.
pub fn to_invariants(m: &MomentVector) -> Result<MomentVector> {
    let vol = m.volume();
    if !(vol > 0.0) {
        return Err(Error::Orientation(vol));
    }
    if m.order < 3 {
        return Err(Error::InvalidInput(format!("invariants need order 3 moments, got {}", m.order)));
    }
    let central = to_central(m)?;
    let components = exponents_of_order(3).into_iter().map(|e| (e, central.at(e) / vol.powf(2.0))).collect();
    Ok(MomentVector { frame: Frame::Invariant, order: 3, components, std_error: None })
}

/// Invariants computed with the mesh shifted to its centroid first, which
/// avoids the cancellation of the raw-moment route for bodies far from the origin.
pub fn mesh_invariants(mesh: &TriMesh) -> Result<[f64; 10]> {
    check_closed(mesh)?;
    let first = moments_unchecked(mesh, 1, [0.0; 3]);
    let vol = first.volume();
    if !(vol > 0.0) {
        return Err(Error::Orientation(vol));
    }
    let c = first.centroid()?;
    let shifted = moments_unchecked(mesh, 3, c);
    to_invariants(&shifted)?.third_order()
}
