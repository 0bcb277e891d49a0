//! Scalar B-spline basis on a fixed knot vector.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    degree: usize,
    knots: Vec<f64>,
}

impl BSplineBasis {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::InvalidInput(format!("{} knots cannot carry a degree-{degree} spline", knots.len())));
        }
        if knots.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidInput("knot vector must be non-decreasing".into()));
        }
        let n = knots.len();
        let lo = knots[0];
        let hi = knots[n - 1];
        if knots[..=degree].iter().any(|&k| k != lo) || knots[n - degree - 1..].iter().any(|&k| k != hi) {
            return Err(Error::InvalidInput("knot vector must be clamped".into()));
        }
        if !(hi > lo) {
            return Err(Error::InvalidInput("knot vector spans an empty interval".into()));
        }
        Ok(Self { degree, knots })
    }

    /// Clamped knot vector with uniformly spaced interior knots over `[lo, hi]`.
    pub fn clamped_uniform(n_ctrl: usize, degree: usize, lo: f64, hi: f64) -> Result<Self> {
        if n_ctrl <= degree {
            return Err(Error::InvalidInput(format!("{n_ctrl} control points are too few for degree {degree}")));
        }
        let n_interior = n_ctrl - degree - 1;
        let mut knots = vec![lo; degree + 1];
        for k in 1..=n_interior {
            knots.push(lo + (hi - lo) * k as f64 / (n_interior + 1) as f64);
        }
        knots.extend(std::iter::repeat_n(hi, degree + 1));
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_ctrl(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Greville abscissa of control point `i`.
    pub fn greville(&self, i: usize) -> f64 {
        let p = self.degree;
        self.knots[i + 1..=i + p].iter().sum::<f64>() / p.max(1) as f64
    }

    fn find_span(&self, x: f64) -> usize {
        let n = self.n_ctrl();
        if x >= self.knots[n] {
            return n - 1;
        }
        if x <= self.knots[self.degree] {
            return self.degree;
        }
        // last index with knots[k] <= x, restricted to [p, n-1]
        self.knots.partition_point(|&k| k <= x) - 1
    }

    /// Non-zero basis values at `x`: returns the knot span `s` and values of
    /// `N_{s-p}, ..., N_s`.
    pub fn basis(&self, x: f64) -> (usize, Vec<f64>) {
        let p = self.degree;
        let span = self.find_span(x);
        let mut n = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = x - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            n[j] = saved;
        }
        (span, n)
    }

    /// Evaluate `sum_i ctrl[i] N_i(x)` with de Boor's algorithm.
    pub fn eval(&self, ctrl: &[f64], x: f64) -> f64 {
        debug_assert_eq!(ctrl.len(), self.n_ctrl());
        let p = self.degree;
        let k = self.find_span(x);
        let t = &self.knots;
        let mut d: Vec<f64> = (0..=p).map(|j| ctrl[j + k - p]).collect();
        for r in 1..=p {
            for j in (r..=p).rev() {
                let denom = t[j + 1 + k - r] - t[j + k - p];
                let alpha = if denom > 0.0 { (x - t[j + k - p]) / denom } else { 0.0 };
                d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
            }
        }
        d[p]
    }
}
