//! Subspace quality: retained variance, reconstruction error and invalid-design rates.

mod validity;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BladeSurface, NODES};
use crate::kle::{ModalSubspace, Snapshots};

pub use crate::kle::variance_curve;
pub use validity::{intersecting_pairs, is_valid_fast, validity_check, Check, Failure, ValidityReport, MID_CHORD};

/// `m,variance_pct,mse` rows for `m = 0..=len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityCurves {
    pub variance_pct: Vec<f64>,
    pub mse: Vec<f64>,
}

impl QualityCurves {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,variance_pct,mse\n");
        for (m, mse) in self.mse.iter().enumerate() {
            let v = if m == 0 { 0.0 } else { self.variance_pct.get(m - 1).copied().unwrap_or(100.0) };
            s.push_str(&format!("{m},{v:.12e},{mse:.12e}\n"));
        }
        s
    }
}

fn geometry_matrix(s: &Snapshots, rows: &[usize]) -> Mat<f64> {
    let g = s.map.geometry_dim();
    Mat::from_fn(rows.len(), g, |k, j| s.row(rows[k])[j])
}

/// Mean over the selected snapshots of the mean squared node error (m²)
/// after projecting onto the first `m` modes, for every `m = 0..=max_m`.
///
/// Uses `‖d − W v‖² = ‖d‖² − 2 vᵀ(Wᵀd) + vᵀ(WᵀW)v` accumulated one mode at a time.
pub fn reconstruction_mse_curve(sub: &ModalSubspace, s: &Snapshots, rows: &[usize], max_m: usize) -> Result<Vec<f64>> {
    if s.dim() != sub.dim() {
        return Err(Error::LengthMismatch { expected: sub.dim(), got: s.dim() });
    }
    let k = max_m.min(sub.stored);
    let n = sub.dim();
    let g = sub.map.geometry_dim();
    let nodes = (g / 3) as f64;
    let full = Mat::from_fn(rows.len(), n, |r, j| s.row(rows[r])[j] * sub.q[j]);
    let w = Mat::from_fn(n, k, |j, i| sub.mode_vec(i)[j]);
    let v = &full * &w; // latent coordinates
    let dg = geometry_matrix(s, rows);
    let wg = Mat::from_fn(g, k, |j, i| sub.mode_vec(i)[j]);
    let p = &dg * &wg;
    let gram = wg.transpose() * &wg;
    let mut resid: Vec<f64> = (0..rows.len()).map(|r| (0..g).map(|j| dg[(r, j)].powi(2)).sum()).collect();
    let psi = rows.len().max(1) as f64;
    let mut curve = Vec::with_capacity(k + 1);
    curve.push(resid.iter().sum::<f64>() / psi / nodes);
    for m in 0..k {
        for (r, e) in resid.iter_mut().enumerate() {
            let vm = v[(r, m)];
            let cross: f64 = (0..m).map(|i| v[(r, i)] * gram[(i, m)]).sum();
            *e += -2.0 * vm * p[(r, m)] + 2.0 * vm * cross + vm * vm * gram[(m, m)];
        }
        curve.push(resid.iter().map(|e| e.max(0.0)).sum::<f64>() / psi / nodes);
    }
    Ok(curve)
}

/// Single-`m` reconstruction error by explicit encode/decode.
pub fn reconstruction_mse(sub: &ModalSubspace, s: &Snapshots, rows: &[usize], m: usize) -> Result<f64> {
    let g = sub.map.geometry_dim();
    let mut total = 0.0;
    for &r in rows {
        let d = s.row(r);
        let v = sub.encode_k(d, m)?;
        let back = sub.decode(&v)?.geometry;
        total += (0..g).map(|j| (d[j] - back[j]).powi(2)).sum::<f64>();
    }
    Ok(total / rows.len().max(1) as f64 / (g / 3) as f64)
}

/// Variance and MSE curves over the whole training set.
pub fn quality_curves(sub: &ModalSubspace, s: &Snapshots, max_m: usize) -> Result<QualityCurves> {
    let rows: Vec<usize> = (0..s.psi).collect();
    let k = max_m.min(sub.stored);
    Ok(QualityCurves {
        variance_pct: variance_curve(&sub.values)[..k].to_vec(),
        mse: reconstruction_mse_curve(sub, s, &rows, k)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFraction {
    pub run: usize,
    pub seed: u64,
    pub invalid: usize,
    pub samples: usize,
    pub invalid_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvalidStats {
    pub runs: Vec<RunFraction>,
    pub mean_pct: f64,
    pub std_pct: f64,
}

/// Seed of validity run `run`.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    seed.wrapping_add(run as u64)
}

/// Percentage of designs failing the fast validity checks when latent vectors
/// are drawn uniformly inside `±√(κλ_i)`.
pub fn invalid_fraction(sub: &ModalSubspace, psi: usize, runs: usize, kappa: f64, seed: u64) -> Result<InvalidStats> {
    if psi < 1000 {
        return Err(Error::InvalidInput(format!("validity sampling needs at least 1000 samples per run, got {psi}")));
    }
    if runs < 2 {
        return Err(Error::InvalidInput(format!("validity sampling needs at least 2 runs, got {runs}")));
    }
    if sub.map.geometry_dim() != 3 * NODES {
        return Err(Error::LengthMismatch { expected: 3 * NODES, got: sub.map.geometry_dim() });
    }
    let bounds = crate::kle::latent_bounds(&sub.values[..sub.m], kappa)?;
    let m = sub.m;
    let g = sub.map.geometry_dim();
    // geometry block of the active modes, contiguous per mode
    let modes: Vec<f64> = (0..m).flat_map(|i| sub.mode_vec(i)[..g].iter().copied()).collect();
    let mean = &sub.map.geometry_mean;
    let mut out = Vec::with_capacity(runs);
    for run in 0..runs {
        let rs = run_seed(seed, run);
        let invalid: usize = (0..psi)
            .into_par_iter()
            .map_init(
                || vec![0.0; g],
                |buf, k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(rs);
                    rng.set_stream(k as u64);
                    buf.copy_from_slice(mean);
                    for (i, &(lo, hi)) in bounds.iter().enumerate() {
                        let v = lo + (hi - lo) * rng.random::<f64>();
                        for (b, w) in buf.iter_mut().zip(&modes[i * g..(i + 1) * g]) {
                            *b += v * w;
                        }
                    }
                    let valid = BladeSurface::from_blocked(buf).map(|s| is_valid_fast(&s)).unwrap_or(false);
                    usize::from(!valid)
                },
            )
            .sum();
        out.push(RunFraction {
            run,
            seed: rs,
            invalid,
            samples: psi,
            invalid_pct: 100.0 * invalid as f64 / psi as f64,
        });
    }
    let mean_pct = out.iter().map(|r| r.invalid_pct).sum::<f64>() / runs as f64;
    let var = out.iter().map(|r| (r.invalid_pct - mean_pct).powi(2)).sum::<f64>() / (runs - 1) as f64;
    Ok(InvalidStats { runs: out, mean_pct, std_pct: var.sqrt() })
}
