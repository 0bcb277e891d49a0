//! Reproducible Monte-Carlo and Latin-hypercube design samples.
//!
//! Every row (Monte-Carlo) or dimension (Latin hypercube) draws from its own
//! ChaCha8 stream keyed by the seed, so output does not depend on thread count.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Box bounds; equal lower and upper entries pin a coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch { expected: lower.len(), got: upper.len() });
        }
        if let Some(i) =
            (0..lower.len()).find(|&i| !(lower[i] <= upper[i]) || !lower[i].is_finite() || !upper[i].is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "bound {i}: [{}, {}] is not a finite interval",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn symmetric(half_width: &[f64]) -> Result<Self> {
        Self::new(half_width.iter().map(|h| -h).collect(), half_width.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.len() == self.dim() && t.iter().enumerate().all(|(i, &v)| self.lower[i] <= v && v <= self.upper[i])
    }

    fn lerp(&self, i: usize, u: f64) -> f64 {
        let v = self.lower[i] + (self.upper[i] - self.lower[i]) * u;
        v.clamp(self.lower[i], self.upper[i])
    }

    /// Hash identifying these bounds in sample sidecars.
    pub fn hash(&self) -> String {
        let mut v = self.lower.clone();
        v.extend_from_slice(&self.upper);
        io::sha256_f64(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    MonteCarloUniform,
    UniformLatinHypercube,
}

/// Row-major `rows × dim` design matrix with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub rows: usize,
    pub dim: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub bounds_hash: String,
    pub data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    rows: usize,
    dim: usize,
    seed: u64,
    scheme: Scheme,
    bounds_sha256: String,
    data_sha256: String,
}

impl SampleSet {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.rows)
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        let bytes = io::f64_to_le_bytes(&self.data);
        let sidecar = Sidecar {
            rows: self.rows,
            dim: self.dim,
            seed: self.seed,
            scheme: self.scheme,
            bounds_sha256: self.bounds_hash.clone(),
            data_sha256: io::sha256_hex(&bytes),
        };
        io::write_atomic(dir.join(format!("{stem}.bin")), &bytes)?;
        io::write_json_atomic(dir.join(format!("{stem}.json")), &sidecar)
    }

    pub fn load(dir: impl AsRef<Path>, stem: &str) -> Result<Self> {
        let dir = dir.as_ref();
        let side: Sidecar = io::read_json(dir.join(format!("{stem}.json")))?;
        let bin = dir.join(format!("{stem}.bin"));
        let bytes = std::fs::read(&bin)?;
        let actual = io::sha256_hex(&bytes);
        if actual != side.data_sha256 {
            return Err(Error::HashMismatch { path: bin, expected: side.data_sha256, actual });
        }
        let data = io::f64_from_le_bytes(&bytes)?;
        if data.len() != side.rows * side.dim {
            return Err(Error::LengthMismatch { expected: side.rows * side.dim, got: data.len() });
        }
        Ok(Self {
            rows: side.rows,
            dim: side.dim,
            seed: side.seed,
            scheme: side.scheme,
            bounds_hash: side.bounds_sha256,
            data,
        })
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Independent uniform rows.
pub fn monte_carlo_uniform(bounds: &Bounds, rows: usize, seed: u64) -> Result<SampleSet> {
    if rows == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let dim = bounds.dim();
    let mut data = vec![0.0; rows * dim];
    data.par_chunks_mut(dim.max(1)).enumerate().for_each(|(k, row)| {
        let mut rng = stream(seed, k as u64);
        for (i, v) in row.iter_mut().enumerate() {
            *v = bounds.lerp(i, rng.random::<f64>());
        }
    });
    Ok(SampleSet { rows, dim, seed, scheme: Scheme::MonteCarloUniform, bounds_hash: bounds.hash(), data })
}

/// Latin hypercube: each coordinate visits every one of `rows` equal strata once.
pub fn latin_hypercube(bounds: &Bounds, rows: usize, seed: u64) -> Result<SampleSet> {
    if rows == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let dim = bounds.dim();
    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let mut perm: Vec<usize> = (0..rows).collect();
            perm.shuffle(&mut rng);
            perm.into_iter()
                .map(|s| {
                    let jitter = rng.random::<f64>().clamp(1e-9, 1.0 - 1e-9);
                    bounds.lerp(i, (s as f64 + jitter) / rows as f64)
                })
                .collect()
        })
        .collect();
    let mut data = vec![0.0; rows * dim];
    for (i, col) in columns.iter().enumerate() {
        for (k, &v) in col.iter().enumerate() {
            data[k * dim + i] = v;
        }
    }
    Ok(SampleSet { rows, dim, seed, scheme: Scheme::UniformLatinHypercube, bounds_hash: bounds.hash(), data })
}

/// Stratum index of `v` within coordinate `i` for an `n`-row hypercube.
pub fn stratum(bounds: &Bounds, i: usize, n: usize, v: f64) -> usize {
    let u = (v - bounds.lower[i]) / (bounds.upper[i] - bounds.lower[i]);
    ((u * n as f64).floor() as usize).min(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize) -> Bounds {
        Bounds::new(vec![-1.0; n], vec![2.0; n]).unwrap()
    }

    #[test]
    fn degenerate_bounds_single_point() {
        let b = Bounds::new(vec![0.3, -2.0], vec![0.3, -2.0]).unwrap();
        let s = monte_carlo_uniform(&b, 1, 9).unwrap();
        assert_eq!(s.data, vec![0.3, -2.0]);
    }

    #[test]
    fn uniform_means_near_midpoint() {
        let b = unit(5);
        let n = 100_000;
        let s = monte_carlo_uniform(&b, n, 42).unwrap();
        let sigma = 3.0 / (12.0 * n as f64).sqrt();
        for i in 0..5 {
            let mean = s.iter_rows().map(|r| r[i]).sum::<f64>() / n as f64;
            assert!((mean - 0.5).abs() < 4.0 * sigma, "dim {i}: {mean}");
        }
        assert!(s.iter_rows().all(|r| b.contains(r)));
    }

    #[test]
    fn lhs_two_points_split_halves() {
        let b = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        let s = latin_hypercube(&b, 2, 5).unwrap();
        let mut h: Vec<usize> = s.data.iter().map(|&v| stratum(&b, 0, 2, v)).collect();
        h.sort();
        assert_eq!(h, vec![0, 1]);
    }

    #[test]
    fn lhs_strata_are_permutations() {
        for (n, d) in [(150, 5), (800, 40)] {
            let b = unit(d);
            let s = latin_hypercube(&b, n, 11).unwrap();
            for i in 0..d {
                let mut h: Vec<usize> = s.iter_rows().map(|r| stratum(&b, i, n, r[i])).collect();
                h.sort();
                assert_eq!(h, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn thread_count_independent() {
        let b = unit(7);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| monte_carlo_uniform(&b, 500, 3).unwrap());
        let c = monte_carlo_uniform(&b, 500, 3).unwrap();
        assert_eq!(a, c);
        let a = one.install(|| latin_hypercube(&b, 64, 3).unwrap());
        assert_eq!(a, latin_hypercube(&b, 64, 3).unwrap());
    }

    #[test]
    fn save_load_round_trip_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let s = latin_hypercube(&unit(3), 10, 1).unwrap();
        s.save(dir.path(), "train").unwrap();
        assert_eq!(SampleSet::load(dir.path(), "train").unwrap(), s);
        let p = dir.path().join("train.bin");
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[0] ^= 1;
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(SampleSet::load(dir.path(), "train"), Err(Error::HashMismatch { .. })));
    }

    proptest! {
        #[test]
        fn rows_within_bounds(seed in any::<u64>(), n in 1usize..50) {
            let b = Bounds::new(vec![-0.5, 0.0, 1.0], vec![0.5, 0.0, 4.0]).unwrap();
            let mc = monte_carlo_uniform(&b, n, seed).unwrap();
            let lhs = latin_hypercube(&b, n, seed).unwrap();
            prop_assert!(mc.iter_rows().all(|r| b.contains(r)));
            prop_assert!(lhs.iter_rows().all(|r| b.contains(r)));
        }
    }
}
