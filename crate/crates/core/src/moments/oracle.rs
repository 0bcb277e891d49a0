//! Monte-Carlo moment estimates by point-in-solid sampling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_closed, exponents_up_to, Frame, MomentVector};
use crate::error::{Error, Result};
use crate::geometry::vec3::V3;
use crate::geometry::TriMesh;

const CHUNK: usize = 1 << 15;

/// Uniform (y, z) bucket grid over triangle footprints for +x ray casting.
struct RayGrid<'a> {
    mesh: &'a TriMesh,
    lo: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl<'a> RayGrid<'a> {
    fn new(mesh: &'a TriMesh, lo: V3, hi: V3) -> Self {
        let g = ((mesh.triangles.len() as f64).sqrt().ceil() as usize).clamp(1, 256);
        let dims = [g, g];
        let lo2 = [lo[1], lo[2]];
        let cell =
            [((hi[1] - lo[1]) / g as f64).max(f64::MIN_POSITIVE), ((hi[2] - lo[2]) / g as f64).max(f64::MIN_POSITIVE)];
        let mut buckets = vec![Vec::new(); g * g];
        let clamp = |v: f64, k: usize| (((v - lo2[k]) / cell[k]).floor().max(0.0) as usize).min(dims[k] - 1);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = tri.map(|k| mesh.vertices[k]);
            let (y0, y1) = (p[0][1].min(p[1][1]).min(p[2][1]), p[0][1].max(p[1][1]).max(p[2][1]));
            let (z0, z1) = (p[0][2].min(p[1][2]).min(p[2][2]), p[0][2].max(p[1][2]).max(p[2][2]));
            for a in clamp(y0, 0)..=clamp(y1, 0) {
                for b in clamp(z0, 1)..=clamp(z1, 1) {
                    buckets[a * g + b].push(t as u32);
                }
            }
        }
        Self { mesh, lo: lo2, cell, dims, buckets }
    }

    /// Odd number of crossings along +x from `p`.
    fn inside(&self, p: V3) -> bool {
        let a = ((p[1] - self.lo[0]) / self.cell[0]).floor();
        let b = ((p[2] - self.lo[1]) / self.cell[1]).floor();
        if a < 0.0 || b < 0.0 || a >= self.dims[0] as f64 || b >= self.dims[1] as f64 {
            return false;
        }
        let mut hits = 0usize;
        for &t in &self.buckets[a as usize * self.dims[1] + b as usize] {
            let [v0, v1, v2] = self.mesh.triangles[t as usize].map(|k| self.mesh.vertices[k]);
            // signed areas of the projected sub-triangles in the (y, z) plane
            let e = |u: V3, w: V3| (u[1] - p[1]) * (w[2] - p[2]) - (u[2] - p[2]) * (w[1] - p[1]);
            let (w0, w1, w2) = (e(v1, v2), e(v2, v0), e(v0, v1));
            let pos = w0 > 0.0 && w1 > 0.0 && w2 > 0.0;
            let neg = w0 < 0.0 && w1 < 0.0 && w2 < 0.0;
            if !(pos || neg) {
                continue;
            }
            let s = w0 + w1 + w2;
            let x = (w0 * v0[0] + w1 * v1[0] + w2 * v2[0]) / s;
            if x > p[0] {
                hits += 1;
            }
        }
        hits % 2 == 1
    }
}

/// Monte-Carlo raw moments up to `max_order` by rejection sampling in the
/// bounding box, with the standard error of each component.
pub fn brute_force_moments(mesh: &TriMesh, max_order: usize, samples: usize, seed: u64) -> Result<MomentVector> {
    if samples < 1000 {
        return Err(Error::InvalidInput(format!("brute-force moments need at least 1000 samples, got {samples}")));
    }
    check_closed(mesh)?;
    let (lo, hi) = mesh.bounding_box();
    let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let box_volume = ext[0] * ext[1] * ext[2];
    let grid = RayGrid::new(mesh, lo, hi);
    let exps = exponents_up_to(max_order);
    let n_chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut s1 = vec![0.0; exps.len()];
            let mut s2 = vec![0.0; exps.len()];
            for _ in 0..count {
                let p = [
                    lo[0] + ext[0] * rng.random::<f64>(),
                    lo[1] + ext[1] * rng.random::<f64>(),
                    lo[2] + ext[2] * rng.random::<f64>(),
                ];
                if !grid.inside(p) {
                    continue;
                }
                for (k, &[a, b, d]) in exps.iter().enumerate() {
                    let f = p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(d as i32);
                    s1[k] += f;
                    s2[k] += f * f;
                }
            }
            (s1, s2)
        })
        .collect();
    let n = samples as f64;
    let mut components = BTreeMap::new();
    let mut std_error = BTreeMap::new();
    for (k, e) in exps.into_iter().enumerate() {
        let s1: f64 = partial.iter().map(|(a, _)| a[k]).sum();
        let s2: f64 = partial.iter().map(|(_, b)| b[k]).sum();
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
        components.insert(e, box_volume * mean);
        std_error.insert(e, box_volume * (var / n).sqrt());
    }
    Ok(MomentVector { frame: Frame::Raw, order: max_order, components, std_error: Some(std_error) })
}
