//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson).

#[derive(Debug, Clone)]
pub(crate) struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two entries.
    pub(crate) fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        debug_assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Self { x, y, d }
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }
}

// Three-point end condition with the shape-preserving adjustments.
fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_linear_data() {
        let p = Pchip::new(vec![0.0, 1.0, 2.5, 4.0], vec![1.0, 3.0, 6.0, 9.0]);
        for (x, y) in [(0.0, 1.0), (1.0, 3.0), (2.5, 6.0), (4.0, 9.0)] {
            assert!((p.eval(x) - y).abs() < 1e-14);
        }
        let lin = Pchip::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 6.0]);
        assert!((lin.eval(2.2) - 4.4).abs() < 1e-12);
    }

    #[test]
    fn stays_monotone() {
        let p = Pchip::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.1, 5.0, 5.1]);
        let mut prev = p.eval(0.0);
        for k in 1..=300 {
            let v = p.eval(k as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }
}
