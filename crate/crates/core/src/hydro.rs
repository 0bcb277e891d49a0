//! Hydrodynamic evaluation: the evaluator interface and a blade-element surrogate.
//!
//! The surrogate is a stand-in for a panel-method solver. It reads sectional
//! chord, pitch angle, camber line and thickness directly from the blade grid,
//! so any decoded design can be evaluated.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BaselineBlade, BladeSurface, CHORDWISE, LEADING_EDGE, RADIAL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Advance coefficient.
    pub j: f64,
    /// Revolutions per second.
    pub n: f64,
    /// Cavitation index based on `n D`.
    pub sigma_n: f64,
    /// kg/m³.
    pub density: f64,
}

impl Default for OperatingPoint {
    fn default() -> Self {
        Self { j: 0.833, n: 36.0, sigma_n: 1.38, density: 998.0 }
    }
}

impl OperatingPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.j > 0.0 && self.n > 0.0 && self.sigma_n > 0.0 && self.density > 0.0) {
            return Err(Error::InvalidInput(format!("operating point must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroResult {
    pub k_t: f64,
    pub k_q: f64,
    pub eta: f64,
    /// Cavitating fraction of one blade's back (suction side).
    pub a_cav_back: f64,
    /// Cavitating fraction of one blade's face (pressure side).
    pub a_cav_face: f64,
    pub converged: bool,
}

/// Anything that can score a blade at a fixed operating point.
pub trait Evaluator: Sync {
    fn id(&self) -> &str;
    fn evaluate(&self, surface: &BladeSurface) -> Result<HydroResult>;
}

/// `(J / 2π) · K_T / K_Q`.
pub fn openwater_efficiency(k_t: f64, k_q: f64, j: f64) -> Result<f64> {
    if !(k_q > 0.0) {
        return Err(Error::Numerical(format!("torque coefficient {k_q} is not positive")));
    }
    Ok(j / (2.0 * PI) * k_t / k_q)
}

/// Tunable surrogate constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConstants {
    /// Multiplier on the thin-airfoil lift slope 2π.
    pub lift_slope_factor: f64,
    /// Fraction of the thin-airfoil zero-lift angle realised by the section.
    pub camber_effectiveness: f64,
    pub cd0: f64,
    /// Quadratic polar coefficient on `(C_l − cl_min_drag)²`.
    pub cd_k: f64,
    pub cl_min_drag: f64,
    /// `−Cp_min = a1 |C_l| + a2 t/c`.
    pub a1: f64,
    pub a2: f64,
    /// Face cavitation needs `C_l` below this.
    pub face_cl_threshold: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SurrogateConstants {
    fn default() -> Self {
        Self {
            lift_slope_factor: 0.7,
            camber_effectiveness: 0.5,
            cd0: 0.008,
            cd_k: 0.012,
            cl_min_drag: 0.2,
            a1: 0.9,
            a2: 2.0,
            face_cl_threshold: -0.05,
            tolerance: 1e-8,
            max_iterations: 200,
        }
    }
}

/// Section properties read off one radial station of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Section {
    pub radius: f64,
    pub chord: f64,
    /// Nose-tail line angle to the plane of rotation (rad).
    pub pitch_angle: f64,
    pub zero_lift_angle: f64,
    pub max_camber: f64,
    pub thickness: f64,
}

/// Extract developed-plane section properties at station `j`.
pub fn section_at(surface: &BladeSurface, j: usize) -> Section {
    let cyl = |i: usize| {
        let p = surface.point(i, j);
        let r = p[1].hypot(p[2]);
        (r, p[1].atan2(p[2]), p[0])
    };
    let radius = (0..CHORDWISE).map(|i| cyl(i).0).sum::<f64>() / CHORDWISE as f64;
    let dev = |i: usize| {
        let (_, th, xa) = cyl(i);
        [radius * th, xa]
    };
    let (te, le) = (dev(0), dev(LEADING_EDGE));
    let d = [le[0] - te[0], le[1] - te[1]];
    let chord = d[0].hypot(d[1]);
    let ec = [d[0] / chord, d[1] / chord];
    let en = [-ec[1], ec[0]];
    // camber line from TE (x/c = 1) to LE (x/c = 0)
    let mut xs = Vec::with_capacity(LEADING_EDGE + 1);
    let mut ys = Vec::with_capacity(LEADING_EDGE + 1);
    let mut thickness = 0.0f64;
    for i in 0..=LEADING_EDGE {
        let (p, s) = (dev(i), dev(CHORDWISE - 1 - i));
        let mid = [(p[0] + s[0]) / 2.0, (p[1] + s[1]) / 2.0];
        let rel = [mid[0] - le[0], mid[1] - le[1]];
        xs.push((-(rel[0] * ec[0] + rel[1] * ec[1]) / chord).clamp(0.0, 1.0));
        let from_te = [mid[0] - te[0], mid[1] - te[1]];
        ys.push((from_te[0] * en[0] + from_te[1] * en[1]) / chord);
        thickness = thickness.max(((s[0] - p[0]) * en[0] + (s[1] - p[1]) * en[1]) / chord);
    }
    let max_camber = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Section {
        radius,
        chord,
        pitch_angle: d[1].atan2(d[0]),
        zero_lift_angle: zero_lift_angle(&xs, &ys),
        max_camber,
        thickness,
    }
}

/// Thin-airfoil zero-lift angle of a piecewise-linear camber line,
/// `α_L0 = −(1/π) ∫₀^π (dy/dx)(cos θ − 1) dθ` with `x = (1 − cos θ)/2`.
pub fn zero_lift_angle(xs: &[f64], ys: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let theta = |x: f64| (1.0 - 2.0 * x).clamp(-1.0, 1.0).acos();
    let mut s = 0.0;
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x1 - x0 <= 1e-15 {
            continue;
        }
        let slope = (y1 - y0) / (x1 - x0);
        let (t0, t1) = (theta(x0), theta(x1));
        s += slope * ((t1.sin() - t0.sin()) - (t1 - t0));
    }
    -s / PI
}

/// Per-strip output of the surrogate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Strip {
    pub radius: f64,
    pub dr: f64,
    pub chord: f64,
    pub cl: f64,
    pub cp_min: f64,
    pub sigma_local: f64,
    pub a: f64,
    pub a_tan: f64,
    pub converged: bool,
}

/// Blade-element / momentum surrogate with Prandtl tip loss.
#[derive(Debug, Clone, PartialEq)]
pub struct BemtSurrogate {
    pub diameter: f64,
    pub blade_count: usize,
    pub op: OperatingPoint,
    pub constants: SurrogateConstants,
}

impl BemtSurrogate {
    pub const ID: &'static str = "bemt-surrogate";

    pub fn new(base: &BaselineBlade, op: OperatingPoint, constants: SurrogateConstants) -> Result<Self> {
        op.validate()?;
        Ok(Self { diameter: base.diameter(), blade_count: base.blade_count(), op, constants })
    }

    /// Full evaluation with strip detail.
    pub fn evaluate_strips(&self, surface: &BladeSurface) -> Result<(HydroResult, Vec<Strip>)> {
        if !surface.is_finite() {
            return Err(Error::NonFinite(0));
        }
        let c = &self.constants;
        let op = &self.op;
        let z = self.blade_count as f64;
        let tip = self.diameter / 2.0;
        let va = op.j * op.n * self.diameter;
        let omega = 2.0 * PI * op.n;
        let nd2 = (op.n * self.diameter).powi(2);
        let sections: Vec<Section> = (0..RADIAL).map(|j| section_at(surface, j)).collect();
        let (mut thrust, mut torque) = (0.0, 0.0);
        let (mut area, mut back, mut face) = (0.0, 0.0, 0.0);
        let mut converged = true;
        let mut strips = Vec::with_capacity(RADIAL - 1);
        for w in sections.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            let r = 0.5 * (s0.radius + s1.radius);
            let dr = s1.radius - s0.radius;
            if !(dr > 0.0) {
                return Err(Error::Numerical(format!("non-increasing station radius near r = {r:.4} m")));
            }
            let chord = 0.5 * (s0.chord + s1.chord);
            let phi = 0.5 * (s0.pitch_angle + s1.pitch_angle);
            let alpha0 = c.camber_effectiveness * 0.5 * (s0.zero_lift_angle + s1.zero_lift_angle);
            let tc = 0.5 * (s0.thickness + s1.thickness);
            let solidity = z * chord / (2.0 * PI * r);
            let lift = |beta: f64| c.lift_slope_factor * 2.0 * PI * (phi - beta - alpha0);
            let drag = |cl: f64| c.cd0 + c.cd_k * (cl - c.cl_min_drag).powi(2);
            // Momentum closure at inflow angle β: 1 + a = 1/(1 − k), 1 − a' = 1/(1 + k').
            let closure = |beta: f64| {
                let cl = lift(beta);
                let cd = drag(cl);
                let (sb, cb) = beta.sin_cos();
                let cx = cl * cb - cd * sb;
                let cy = cl * sb + cd * cb;
                let f_exp = z * (tip - r) / (2.0 * r * sb);
                let f = (2.0 / PI * (-f_exp).exp().acos()).max(1e-6);
                let k = solidity * cx / (4.0 * f * sb * sb);
                let kp = solidity * cy / (4.0 * f * sb * cb);
                (k, kp)
            };
            let residual = |beta: f64| {
                let (k, kp) = closure(beta);
                let (sb, cb) = beta.sin_cos();
                omega * r * sb * (1.0 - k) - va * cb * (1.0 + kp)
            };
            let inductions = |beta: f64| {
                let (k, kp) = closure(beta);
                (k / (1.0 - k), kp / (1.0 + kp))
            };
            // the root lies between the undisturbed inflow and the zero-lift angle
            let beta0 = va.atan2(omega * r);
            let beta_zl = (phi - alpha0).clamp(1e-6, 0.5 * PI - 1e-6);
            let (mut lo, mut hi) = if beta0 <= beta_zl { (beta0, beta_zl) } else { (beta_zl, beta0) };
            let (mut r_lo, r_hi) = (residual(lo), residual(hi));
            let mut ok = false;
            let (mut a, mut at);
            if r_lo == 0.0 || r_lo.signum() != r_hi.signum() {
                for _ in 0..c.max_iterations {
                    let mid = 0.5 * (lo + hi);
                    let r_mid = residual(mid);
                    if r_mid == 0.0 || r_mid.signum() == r_lo.signum() {
                        lo = mid;
                        r_lo = r_mid;
                    } else {
                        hi = mid;
                    }
                    let (a_lo, at_lo) = inductions(lo);
                    let (a_hi, at_hi) = inductions(hi);
                    if (a_hi - a_lo).abs().max((at_hi - at_lo).abs()) < c.tolerance {
                        ok = true;
                        break;
                    }
                }
                (a, at) = inductions(0.5 * (lo + hi));
            } else {
                (a, at) = (0.0, 0.0);
            }
            if !(a.is_finite() && at.is_finite()) {
                (a, at) = (0.0, 0.0);
                ok = false;
            }
            converged &= ok;
            let beta = (va * (1.0 + a)).atan2(omega * r * (1.0 - at));
            let cl = lift(beta);
            let cd = drag(cl);
            let (sb, cb) = beta.sin_cos();
            let w2 = (va * (1.0 + a)).powi(2) + (omega * r * (1.0 - at)).powi(2);
            let q = 0.5 * op.density * w2 * chord * dr * z;
            thrust += q * (cl * cb - cd * sb);
            torque += q * (cl * sb + cd * cb) * r;
            let cp_min = c.a1 * cl.abs() + c.a2 * tc;
            let sigma_local = op.sigma_n * nd2 / w2;
            let strip_area = chord * dr;
            area += strip_area;
            if cp_min > sigma_local {
                if cl < c.face_cl_threshold {
                    face += strip_area;
                } else {
                    back += strip_area;
                }
            }
            strips.push(Strip { radius: r, dr, chord, cl, cp_min, sigma_local, a, a_tan: at, converged: ok });
        }
        let k_t = thrust / (op.density * op.n.powi(2) * self.diameter.powi(4));
        let k_q = torque / (op.density * op.n.powi(2) * self.diameter.powi(5));
        let eta = openwater_efficiency(k_t, k_q, op.j)?;
        if ![k_t, k_q, eta].iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("surrogate produced non-finite coefficients".into()));
        }
        let result = HydroResult { k_t, k_q, eta, a_cav_back: back / area, a_cav_face: face / area, converged };
        Ok((result, strips))
    }
}

impl Evaluator for BemtSurrogate {
    fn id(&self) -> &str {
        Self::ID
    }

    fn evaluate(&self, surface: &BladeSurface) -> Result<HydroResult> {
        Ok(self.evaluate_strips(surface)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_design_vector, DesignSpace, Distribution};

    fn setup() -> (BaselineBlade, DesignSpace) {
        let base = BaselineBlade::e779a();
        let space = DesignSpace::default_for(&base, Default::default()).unwrap();
        (base, space)
    }

    #[test]
    fn efficiency_identity() {
        let kq = 0.1761 * 0.833 / (2.0 * PI * 0.6);
        assert!((openwater_efficiency(0.1761, kq, 0.833).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(openwater_efficiency(0.2, 0.03, 0.0).unwrap(), 0.0);
        let e = openwater_efficiency(0.2, 0.03, 0.8).unwrap();
        assert!((openwater_efficiency(0.4, 0.06, 0.8).unwrap() - e).abs() < 1e-15);
        assert!(openwater_efficiency(0.2, 0.0, 0.8).is_err());
    }

    #[test]
    fn flat_plate_has_no_zero_lift_angle() {
        let xs: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        assert!(zero_lift_angle(&xs, &[0.0; 21]).abs() < 1e-15);
        // parabolic camber 4f x(1-x): α_L0 = -2f
        let f = 0.03;
        let xs: Vec<f64> = (0..=2000).map(|k| 0.5 * (1.0 - (PI * k as f64 / 2000.0).cos())).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 4.0 * f * x * (1.0 - x)).collect();
        assert!((zero_lift_angle(&xs, &ys) + 2.0 * f).abs() < 1e-5);
    }

    #[test]
    fn baseline_sections_match_fixture() {
        let (base, space) = setup();
        let s = apply_design_vector(&base, &space, &[0.0; 40]).unwrap();
        for j in [3, 12, 20] {
            let sec = section_at(&s, j);
            let rr = sec.radius / base.radius();
            let chord = base.distribution(Distribution::Chord, rr) * base.diameter();
            assert!((sec.chord - chord).abs() < 0.02 * chord, "station {j}");
            let pitch = base.distribution(Distribution::Pitch, rr) * base.diameter();
            let phi = (pitch / (2.0 * PI * sec.radius)).atan();
            assert!((sec.pitch_angle - phi).abs() < 0.01, "station {j}");
            assert!((sec.thickness - base.thickness_over_c(rr)).abs() < 0.1 * base.thickness_over_c(rr));
        }
    }

    #[test]
    fn baseline_thrust_in_band_and_deterministic() {
        let (base, space) = setup();
        let s = apply_design_vector(&base, &space, &[0.0; 40]).unwrap();
        let ev = BemtSurrogate::new(&base, OperatingPoint::default(), SurrogateConstants::default()).unwrap();
        let a = ev.evaluate(&s).unwrap();
        assert!(a.converged);
        assert!((a.k_t - 0.1761).abs() <= 0.25 * 0.1761, "K_T = {}", a.k_t);
        assert!((a.eta - openwater_efficiency(a.k_t, a.k_q, 0.833).unwrap()).abs() == 0.0);
        assert_eq!(ev.evaluate(&s).unwrap(), a);
    }

    #[test]
    fn no_cavitation_at_huge_sigma_and_monotone_in_sigma() {
        let (base, space) = setup();
        let s = apply_design_vector(&base, &space, &[0.0; 40]).unwrap();
        let mut prev = f64::INFINITY;
        for sigma in [0.3, 0.8, 1.38, 3.0, 1e6] {
            let op = OperatingPoint { sigma_n: sigma, ..Default::default() };
            let r = BemtSurrogate::new(&base, op, SurrogateConstants::default()).unwrap().evaluate(&s).unwrap();
            assert!(r.a_cav_back <= prev);
            prev = r.a_cav_back;
            if sigma == 1e6 {
                assert_eq!((r.a_cav_back, r.a_cav_face), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn pitch_increase_raises_thrust() {
        let (base, space) = setup();
        let ev = BemtSurrogate::new(&base, OperatingPoint::default(), SurrogateConstants::default()).unwrap();
        let range = space.block_range(Distribution::Pitch).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for step in -4..=4 {
            let mut t = vec![0.0; 40];
            for i in range.clone() {
                t[i] = space.upper()[i] * step as f64 / 4.0;
            }
            let kt = ev.evaluate(&apply_design_vector(&base, &space, &t).unwrap()).unwrap().k_t;
            assert!(kt > prev, "step {step}: {kt}");
            prev = kt;
        }
    }
}
