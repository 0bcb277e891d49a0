//! Shape-signature snapshots and the weighted Karhunen–Loève eigenproblem.
//!
//! A signature stacks the grid deviation from the training mean (all x, then
//! all y, then all z) and, in SSDR mode, the ten third-order moment invariants
//! standardised to unit variance and scaled by `beta`. Geometry weights are the
//! mean grid's dual-cell areas, normalised to sum 1 per coordinate block; the
//! moment block carries weight 1, so `beta` alone sets its share of variance.

use std::path::Path;

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{mesh_node_weights, BladeSurface, NODES};
use crate::io;
use crate::sampling::SampleSet;

pub const N_MOMENTS: usize = 10;
pub const GEOMETRY_DIM: usize = 3 * NODES;
const MAGIC: &[u8; 5] = b"SSDR1";
/// Eigenvalues at or below this fraction of the largest are treated as zero.
pub const RELATIVE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Geometry plus moment invariants.
    Ssdr,
    /// Geometry only.
    Kle,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Ssdr => "ssdr",
            Mode::Kle => "kle",
        }
    }

    pub fn n_moments(self) -> usize {
        match self {
            Mode::Ssdr => N_MOMENTS,
            Mode::Kle => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EigenForm {
    /// Snapshot form when there are fewer snapshots than signature entries.
    #[default]
    Auto,
    /// Ψ×Ψ Gram matrix.
    Snapshot,
    /// Full dim×dim covariance.
    Direct,
}

/// Everything needed to turn a design into a signature deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureMap {
    pub mode: Mode,
    pub geometry_mean: Vec<f64>,
    pub moment_mean: Vec<f64>,
    pub moment_std: Vec<f64>,
    pub beta: f64,
}

impl SignatureMap {
    pub fn geometry_dim(&self) -> usize {
        self.geometry_mean.len()
    }

    pub fn dim(&self) -> usize {
        self.geometry_dim() + self.moment_mean.len()
    }

    fn moment_scale(&self, k: usize) -> f64 {
        if self.moment_std[k] > 0.0 {
            self.beta / self.moment_std[k]
        } else {
            0.0
        }
    }

    /// Signature deviation of a design given its blocked coordinates and invariants.
    pub fn deviation(&self, geometry: &[f64], invariants: Option<&[f64]>) -> Result<Vec<f64>> {
        if geometry.len() != self.geometry_dim() {
            return Err(Error::LengthMismatch { expected: self.geometry_dim(), got: geometry.len() });
        }
        let mut d: Vec<f64> = geometry.iter().zip(&self.geometry_mean).map(|(g, m)| g - m).collect();
        if !self.moment_mean.is_empty() {
            let inv = invariants.ok_or_else(|| Error::InvalidInput("SSDR signature needs moment invariants".into()))?;
            if inv.len() != self.moment_mean.len() {
                return Err(Error::LengthMismatch { expected: self.moment_mean.len(), got: inv.len() });
            }
            d.extend((0..inv.len()).map(|k| (inv[k] - self.moment_mean[k]) * self.moment_scale(k)));
        }
        Ok(d)
    }

    /// Undo the standardisation of a moment-block deviation.
    pub fn invariants_from_block(&self, block: &[f64]) -> Vec<f64> {
        (0..block.len())
            .map(|k| {
                let s = self.moment_scale(k);
                self.moment_mean[k] + if s > 0.0 { block[k] / s } else { 0.0 }
            })
            .collect()
    }
}

/// Ψ signature deviations (row-major) with their weights.
#[derive(Debug, Clone)]
pub struct Snapshots {
    pub psi: usize,
    pub map: SignatureMap,
    pub q: Vec<f64>,
    pub data: Vec<f64>,
    /// Q-weighted variance of the geometry block.
    pub geometry_variance: f64,
    pub training_hash: String,
}

impl Snapshots {
    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.dim();
        &self.data[k * n..(k + 1) * n]
    }

    /// Q-weighted total variance `(1/Ψ) Σ_k dₖᵀ Q dₖ`.
    pub fn total_variance(&self) -> f64 {
        weighted_variance(&self.data, &self.q, self.psi, 0..self.dim())
    }

    /// Build snapshots from raw geometry rows (Ψ × geometry_dim, blocked by
    /// coordinate) and optional invariant rows.
    ///
    /// `geometry_q` holds one weight per geometry entry. `beta = None` balances
    /// the moment block to the geometry variance.
    pub fn from_rows(
        geometry: &[f64],
        geometry_q: Vec<f64>,
        invariants: Option<&[f64]>,
        psi: usize,
        beta: Option<f64>,
        training_hash: String,
    ) -> Result<Self> {
        if psi == 0 {
            return Err(Error::InvalidInput("need at least one snapshot".into()));
        }
        let gdim = geometry_q.len();
        if geometry.len() != psi * gdim {
            return Err(Error::LengthMismatch { expected: psi * gdim, got: geometry.len() });
        }
        let mode = if invariants.is_some() { Mode::Ssdr } else { Mode::Kle };
        let nm = mode.n_moments();
        if let Some(inv) = invariants {
            if inv.len() != psi * nm {
                return Err(Error::LengthMismatch { expected: psi * nm, got: inv.len() });
            }
        }
        let geometry_mean = column_mean(geometry, psi, gdim);
        let mut data = vec![0.0; psi * (gdim + nm)];
        for k in 0..psi {
            let row = &mut data[k * (gdim + nm)..k * (gdim + nm) + gdim];
            for (j, v) in row.iter_mut().enumerate() {
                *v = geometry[k * gdim + j] - geometry_mean[j];
            }
        }
        let mut q = geometry_q;
        let geometry_variance = weighted_variance(&data, &q, psi, 0..gdim);
        let (moment_mean, moment_std, beta) = match invariants {
            None => (Vec::new(), Vec::new(), 0.0),
            Some(inv) => {
                let mean = column_mean(inv, psi, nm);
                let std: Vec<f64> = (0..nm)
                    .map(|j| {
                        let s = (0..psi).map(|k| (inv[k * nm + j] - mean[j]).powi(2)).sum::<f64>() / psi as f64;
                        s.sqrt()
                    })
                    .collect();
                let beta = beta.unwrap_or_else(|| (geometry_variance / nm as f64).sqrt());
                if !(beta >= 0.0) || !beta.is_finite() {
                    return Err(Error::InvalidInput(format!("moment weight beta must be finite and >= 0, got {beta}")));
                }
                (mean, std, beta)
            }
        };
        q.extend(std::iter::repeat_n(1.0, nm));
        let map = SignatureMap { mode, geometry_mean, moment_mean, moment_std, beta };
        if let Some(inv) = invariants {
            for k in 0..psi {
                for j in 0..nm {
                    data[k * (gdim + nm) + gdim + j] = (inv[k * nm + j] - map.moment_mean[j]) * map.moment_scale(j);
                }
            }
        }
        Ok(Self { psi, map, q, data, geometry_variance, training_hash })
    }
}

fn column_mean(rows: &[f64], psi: usize, n: usize) -> Vec<f64> {
    let mut mean = vec![0.0; n];
    for k in 0..psi {
        for (m, v) in mean.iter_mut().zip(&rows[k * n..(k + 1) * n]) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= psi as f64);
    mean
}

fn weighted_variance(data: &[f64], q: &[f64], psi: usize, cols: std::ops::Range<usize>) -> f64 {
    let n = data.len() / psi.max(1);
    let mut s = 0.0;
    for k in 0..psi {
        let row = &data[k * n..(k + 1) * n];
        s += cols.clone().map(|j| q[j] * row[j] * row[j]).sum::<f64>();
    }
    s / psi as f64
}

/// Geometry weights from the dual-cell areas of a grid, normalised to sum 1
/// within each coordinate block.
pub fn geometry_weights(mean_grid: &BladeSurface) -> Vec<f64> {
    let w = mesh_node_weights(mean_grid.points()).weights;
    let total: f64 = w.iter().sum();
    let mut q = Vec::with_capacity(3 * w.len());
    for _ in 0..3 {
        q.extend(w.iter().map(|a| a / total));
    }
    q
}

/// Evaluate every sample and assemble signature snapshots.
///
/// `invariants` is only called in SSDR mode.
pub fn assemble_snapshots<G, M>(
    samples: &SampleSet,
    geometry: G,
    invariants: M,
    mode: Mode,
    beta: Option<f64>,
) -> Result<Snapshots>
where
    G: Fn(&[f64]) -> Result<BladeSurface> + Sync,
    M: Fn(&BladeSurface) -> Result<[f64; N_MOMENTS]> + Sync,
{
    let psi = samples.rows;
    let evaluated: Vec<(Vec<f64>, Option<[f64; N_MOMENTS]>)> = (0..psi)
        .into_par_iter()
        .map(|k| {
            let surface = geometry(samples.row(k))?;
            if !surface.is_finite() {
                return Err(Error::NonFinite(k));
            }
            let inv = match mode {
                Mode::Ssdr => {
                    let inv = invariants(&surface)?;
                    if inv.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite(k));
                    }
                    Some(inv)
                }
                Mode::Kle => None,
            };
            Ok((surface.to_blocked(), inv))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(psi * GEOMETRY_DIM);
    let mut inv_rows = Vec::with_capacity(psi * mode.n_moments());
    for (g, inv) in &evaluated {
        rows.extend_from_slice(g);
        if let Some(inv) = inv {
            inv_rows.extend_from_slice(inv);
        }
    }
    drop(evaluated);
    let mean = column_mean(&rows, psi, GEOMETRY_DIM);
    let q = geometry_weights(&BladeSurface::from_blocked(&mean)?);
    let inv = (mode == Mode::Ssdr).then_some(inv_rows.as_slice());
    let training_hash = io::sha256_f64(&samples.data);
    Snapshots::from_rows(&rows, q, inv, psi, beta, training_hash)
}

/// Eigenpairs of the weighted covariance, optionally truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSubspace {
    pub map: SignatureMap,
    pub q: Vec<f64>,
    /// Retained eigenvalues, descending.
    pub values: Vec<f64>,
    /// Column-major `dim × stored` Q-orthonormal modes.
    pub modes: Vec<f64>,
    pub stored: usize,
    /// Active dimension.
    pub m: usize,
    pub epsilon: f64,
    pub kappa: f64,
    pub total_variance: f64,
    pub psi: usize,
    pub form: EigenForm,
    pub training_hash: String,
}

fn sqrt_q_scaled(s: &Snapshots) -> Mat<f64> {
    let n = s.dim();
    let sq: Vec<f64> = s.q.iter().map(|v| v.sqrt()).collect();
    Mat::from_fn(s.psi, n, |k, j| s.data[k * n + j] * sq[j])
}

/// Solve the symmetric form `Q^½ C Q^½ u = λ u` and map back `w = Q^-½ u`.
pub fn eigensolve(s: &Snapshots, form: EigenForm) -> Result<ModalSubspace> {
    if s.psi < 2 {
        return Err(Error::InvalidInput("eigensolve needs at least 2 snapshots".into()));
    }
    let n = s.dim();
    let psi = s.psi as f64;
    let form = match form {
        EigenForm::Auto if s.psi < n => EigenForm::Snapshot,
        EigenForm::Auto => EigenForm::Direct,
        f => f,
    };
    let dt = sqrt_q_scaled(s);
    let (values, u) = match form {
        EigenForm::Snapshot => {
            let gram = (&dt * dt.transpose()) * faer::Scale(1.0 / psi);
            let (all, vectors) = symmetric_eigen(gram, "Gram")?;
            let (lam, y) = descending(&all, vectors.as_ref());
            let k = lam.len();
            let ymat = Mat::from_fn(s.psi, k, |i, c| y[c * s.psi + i]);
            let mut u = dt.transpose() * &ymat;
            for c in 0..k {
                let f = 1.0 / (psi * lam[c]).sqrt();
                for i in 0..n {
                    u[(i, c)] *= f;
                }
            }
            (lam, reorthonormalise(u))
        }
        _ => {
            let b = (dt.transpose() * &dt) * faer::Scale(1.0 / psi);
            let (all, vectors) = symmetric_eigen(b, "covariance")?;
            let (lam, cols) = descending(&all, vectors.as_ref());
            let k = lam.len();
            (lam, Mat::from_fn(n, k, |i, c| cols[c * n + i]))
        }
    };
    let k = values.len();
    let inv_sq: Vec<f64> = s.q.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut modes = vec![0.0; n * k];
    for c in 0..k {
        let col = &mut modes[c * n..(c + 1) * n];
        for i in 0..n {
            col[i] = u[(i, c)] * inv_sq[i];
        }
        // first entry within a hair of the largest magnitude sets the sign, so
        // near-ties (coincident nodes) resolve the same way in both forms
        let big = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let best = col.iter().position(|v| v.abs() >= (1.0 - 1e-6) * big).unwrap_or(0);
        if col[best] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(ModalSubspace {
        map: s.map.clone(),
        q: s.q.clone(),
        values,
        modes,
        stored: k,
        m: k,
        epsilon: 1.0,
        kappa: 3.0,
        total_variance: s.total_variance(),
        psi: s.psi,
        form,
        training_hash: s.training_hash.clone(),
    })
}

/// Ascending eigenpairs of a symmetric positive semi-definite matrix.
///
/// faer's deflation thresholds are absolute, so the matrix is brought to unit
/// trace first; otherwise tiny variances lose the trace identity at ~1e-8.
fn symmetric_eigen(a: Mat<f64>, what: &str) -> Result<(Vec<f64>, Mat<f64>)> {
    let trace: f64 = (0..a.nrows()).map(|i| a[(i, i)]).sum();
    let scale = if trace > 0.0 { trace } else { 1.0 };
    let evd = (a * faer::Scale(1.0 / scale))
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("{what} eigensolve failed: {e:?}")))?;
    let values = evd.S().column_vector().iter().map(|v| v * scale).collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenvalues above the relative cutoff, largest first, with their vectors
/// (column-major, same order).
fn descending(ascending: &[f64], vectors: faer::MatRef<'_, f64>) -> (Vec<f64>, Vec<f64>) {
    let top = ascending.last().copied().unwrap_or(0.0);
    let mut lam = Vec::new();
    let mut cols = Vec::new();
    if top > 0.0 {
        for c in (0..ascending.len()).rev() {
            if ascending[c] <= RELATIVE_CUTOFF * top {
                break;
            }
            lam.push(ascending[c]);
            cols.extend((0..vectors.nrows()).map(|i| vectors[(i, c)]));
        }
    }
    (lam, cols)
}

/// Gram–Schmidt via thin QR, keeping each column's original sign.
fn reorthonormalise(u: Mat<f64>) -> Mat<f64> {
    if u.ncols() == 0 {
        return u;
    }
    let mut qm = u.qr().compute_thin_Q();
    for c in 0..u.ncols() {
        let d: f64 = (0..u.nrows()).map(|i| qm[(i, c)] * u[(i, c)]).sum();
        if d < 0.0 {
            for i in 0..u.nrows() {
                qm[(i, c)] = -qm[(i, c)];
            }
        }
    }
    qm
}

/// Smallest `m` with `Σ_{i≤m} λ_i ≥ ε Σ λ_i`.
pub fn truncation_dim(values: &[f64], epsilon: f64) -> usize {
    let total: f64 = values.iter().sum();
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        acc += v;
        if acc >= epsilon * total {
            return i + 1;
        }
    }
    values.len()
}

/// Cumulative retained variance (percent) for `m = 1..=len`.
pub fn variance_curve(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    let mut acc = 0.0;
    values
        .iter()
        .map(|v| {
            acc += v;
            if total > 0.0 {
                100.0 * acc / total
            } else {
                100.0
            }
        })
        .collect()
}

/// Symmetric latent box `±√(κλ_i)`.
pub fn latent_bounds(values: &[f64], kappa: f64) -> Result<Vec<(f64, f64)>> {
    if ![1.0, 2.0, 3.0].contains(&kappa) {
        return Err(Error::InvalidInput(format!("kappa must be 1, 2 or 3, got {kappa}")));
    }
    Ok(values.iter().map(|l| (-(kappa * l).sqrt(), (kappa * l).sqrt())).collect())
}

/// Decoded latent vector: geometry deviation plus the moment-block diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub geometry: Vec<f64>,
    pub moments: Option<Vec<f64>>,
}

impl ModalSubspace {
    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn mode_vec(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.modes[i * n..(i + 1) * n]
    }

    /// Keep the first `m` modes meeting the retention threshold.
    pub fn truncate(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        let mut out = self.clone();
        out.m = truncation_dim(&self.values, epsilon).min(self.stored);
        out.epsilon = epsilon;
        Ok(out)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        latent_bounds(&[], kappa)?;
        self.kappa = kappa;
        Ok(self)
    }

    /// Drop stored modes beyond `keep` (never below the active dimension).
    pub fn keep_modes(&mut self, keep: usize) {
        let keep = keep.max(self.m).min(self.stored);
        self.modes.truncate(keep * self.dim());
        self.stored = keep;
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        latent_bounds(&self.values[..self.m], self.kappa).expect("kappa validated on construction")
    }

    /// `v_i = dᵀ Q w_i` for the first `m` modes.
    pub fn encode(&self, d: &[f64]) -> Result<Vec<f64>> {
        self.encode_k(d, self.m)
    }

    pub fn encode_k(&self, d: &[f64], k: usize) -> Result<Vec<f64>> {
        if d.len() != self.dim() {
            return Err(Error::LengthMismatch { expected: self.dim(), got: d.len() });
        }
        let qd: Vec<f64> = d.iter().zip(&self.q).map(|(a, b)| a * b).collect();
        Ok((0..k.min(self.stored)).map(|i| self.mode_vec(i).iter().zip(&qd).map(|(w, x)| w * x).sum()).collect())
    }

    /// `Σ v_i w_i`, split into the geometry deviation and the moment diagnostic.
    pub fn decode(&self, v: &[f64]) -> Result<Decoded> {
        if v.len() > self.stored {
            return Err(Error::LengthMismatch { expected: self.stored, got: v.len() });
        }
        let n = self.dim();
        let mut full = vec![0.0; n];
        for (i, &vi) in v.iter().enumerate() {
            for (f, w) in full.iter_mut().zip(self.mode_vec(i)) {
                *f += vi * w;
            }
        }
        let g = self.map.geometry_dim();
        let moments = (n > g).then(|| full[g..].to_vec());
        full.truncate(g);
        Ok(Decoded { geometry: full, moments })
    }

    /// Mean geometry plus the decoded deviation, as blocked coordinates.
    pub fn reconstruct_blocked(&self, v: &[f64]) -> Result<Vec<f64>> {
        let d = self.decode(v)?;
        Ok(d.geometry.iter().zip(&self.map.geometry_mean).map(|(a, b)| a + b).collect())
    }

    pub fn reconstruct(&self, v: &[f64]) -> Result<BladeSurface> {
        if v.len() != self.m {
            return Err(Error::LengthMismatch { expected: self.m, got: v.len() });
        }
        BladeSurface::from_blocked(&self.reconstruct_blocked(v)?)
    }

    /// Predicted invariants for a latent vector (diagnostic only).
    pub fn predicted_invariants(&self, v: &[f64]) -> Result<Option<Vec<f64>>> {
        Ok(self.decode(v)?.moments.map(|b| self.map.invariants_from_block(&b)))
    }

    /// `max_i ‖A w_i − λ_i w_i‖_Q / λ_1` with `A w = C Q w` evaluated from the snapshots.
    pub fn eigen_residual(&self, s: &Snapshots, count: usize) -> f64 {
        let n = self.dim();
        let Some(&l1) = self.values.first() else { return 0.0 };
        let mut worst = 0.0f64;
        for i in 0..count.min(self.stored) {
            let w = self.mode_vec(i);
            let qw: Vec<f64> = w.iter().zip(&self.q).map(|(a, b)| a * b).collect();
            let mut aw = vec![0.0; n];
            for k in 0..s.psi {
                let row = s.row(k);
                let c: f64 = row.iter().zip(&qw).map(|(a, b)| a * b).sum::<f64>() / s.psi as f64;
                for (a, r) in aw.iter_mut().zip(row) {
                    *a += c * r;
                }
            }
            let res: f64 = (0..n).map(|j| self.q[j] * (aw[j] - self.values[i] * w[j]).powi(2)).sum();
            worst = worst.max(res.sqrt() / l1);
        }
        worst
    }

    /// Largest deviation of `WᵀQW` from the identity over the first `count` modes.
    pub fn orthonormality_error(&self, count: usize) -> f64 {
        let k = count.min(self.stored);
        let mut worst = 0.0f64;
        for a in 0..k {
            let qa: Vec<f64> = self.mode_vec(a).iter().zip(&self.q).map(|(x, y)| x * y).collect();
            for b in a..k {
                let d: f64 = qa.iter().zip(self.mode_vec(b)).map(|(x, y)| x * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut payload = Vec::with_capacity(8 * (self.map.geometry_dim() + self.dim() + self.modes.len()));
        payload.extend(io::f64_to_le_bytes(&self.map.geometry_mean));
        payload.extend(io::f64_to_le_bytes(&self.q));
        payload.extend(io::f64_to_le_bytes(&self.modes));
        let header = Header {
            format: "SSDR1".into(),
            mode: self.map.mode,
            dim: self.dim(),
            geometry_dim: self.map.geometry_dim(),
            n_moments: self.map.moment_mean.len(),
            psi: self.psi,
            epsilon: self.epsilon,
            kappa: self.kappa,
            m: self.m,
            beta: self.map.beta,
            moment_mean: self.map.moment_mean.clone(),
            moment_std: self.map.moment_std.clone(),
            values: self.values.clone(),
            total_variance: self.total_variance,
            stored_modes: self.stored,
            form: self.form,
            training_sha256: self.training_hash.clone(),
            payload_sha256: io::sha256_hex(&payload),
        };
        let json = serde_json::to_vec(&header)?;
        let mut bytes = Vec::with_capacity(MAGIC.len() + 8 + json.len() + payload.len());
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&json);
        bytes.extend_from_slice(&payload);
        io::write_atomic(path, &bytes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)?;
        let bad = |msg: &str| Error::InvalidInput(format!("{}: {msg}", path.display()));
        if bytes.len() < 13 || &bytes[..5] != MAGIC {
            return Err(bad("not an SSDR1 subspace file"));
        }
        let hlen = u64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(13..13 + hlen).ok_or_else(|| bad("truncated header"))?;
        let h: Header = serde_json::from_slice(body)?;
        let payload = &bytes[13 + hlen..];
        let actual = io::sha256_hex(payload);
        if actual != h.payload_sha256 {
            return Err(Error::HashMismatch { path: path.to_path_buf(), expected: h.payload_sha256, actual });
        }
        let floats = io::f64_from_le_bytes(payload)?;
        let expected = h.geometry_dim + h.dim + h.dim * h.stored_modes;
        if floats.len() != expected {
            return Err(Error::LengthMismatch { expected, got: floats.len() });
        }
        let (mean, rest) = floats.split_at(h.geometry_dim);
        let (q, modes) = rest.split_at(h.dim);
        Ok(Self {
            map: SignatureMap {
                mode: h.mode,
                geometry_mean: mean.to_vec(),
                moment_mean: h.moment_mean,
                moment_std: h.moment_std,
                beta: h.beta,
            },
            q: q.to_vec(),
            values: h.values,
            modes: modes.to_vec(),
            stored: h.stored_modes,
            m: h.m,
            epsilon: h.epsilon,
            kappa: h.kappa,
            total_variance: h.total_variance,
            psi: h.psi,
            form: h.form,
            training_hash: h.training_sha256,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    mode: Mode,
    dim: usize,
    geometry_dim: usize,
    n_moments: usize,
    psi: usize,
    epsilon: f64,
    kappa: f64,
    m: usize,
    beta: f64,
    moment_mean: Vec<f64>,
    moment_std: Vec<f64>,
    values: Vec<f64>,
    total_variance: f64,
    stored_modes: usize,
    form: EigenForm,
    training_sha256: String,
    payload_sha256: String,
}
