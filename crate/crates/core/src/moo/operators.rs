//! Real-coded variation operators (bounded SBX and polynomial mutation).

use rand::Rng;

/// Simulated binary crossover, applied gene-wise with probability ½.
pub fn sbx<R: Rng>(rng: &mut R, a: &[f64], b: &[f64], lower: &[f64], upper: &[f64], eta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    for i in 0..a.len() {
        if rng.random::<f64>() > 0.5 || (a[i] - b[i]).abs() <= 1e-14 || upper[i] <= lower[i] {
            continue;
        }
        let (y1, y2) = if a[i] < b[i] { (a[i], b[i]) } else { (b[i], a[i]) };
        let (yl, yu) = (lower[i], upper[i]);
        let u = rng.random::<f64>();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (y1 - yl) / (y2 - y1));
        let bq2 = spread(1.0 + 2.0 * (yu - y2) / (y2 - y1));
        let lo = (0.5 * ((y1 + y2) - bq1 * (y2 - y1))).clamp(yl, yu);
        let hi = (0.5 * ((y1 + y2) + bq2 * (y2 - y1))).clamp(yl, yu);
        if rng.random::<f64>() < 0.5 {
            c1[i] = hi;
            c2[i] = lo;
        } else {
            c1[i] = lo;
            c2[i] = hi;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation with per-gene probability `rate`.
pub fn polynomial_mutation<R: Rng>(rng: &mut R, x: &mut [f64], lower: &[f64], upper: &[f64], rate: f64, eta: f64) {
    for i in 0..x.len() {
        if rng.random::<f64>() >= rate || upper[i] <= lower[i] {
            continue;
        }
        let (yl, yu) = (lower[i], upper[i]);
        let y = x[i];
        let d1 = (y - yl) / (yu - yl);
        let d2 = (yu - y) / (yu - yl);
        let r = rng.random::<f64>();
        let pow = 1.0 / (eta + 1.0);
        let dq = if r < 0.5 {
            let v = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1).powf(eta + 1.0);
            v.powf(pow) - 1.0
        } else {
            let v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(pow)
        };
        x[i] = (y + dq * (yu - yl)).clamp(yl, yu);
    }
}
