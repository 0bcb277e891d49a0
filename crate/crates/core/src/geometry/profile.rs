use std::path::Path;

use crate::error::{Error, Result};
use crate::interp::Pchip;

const NACA66_A08: &str = include_str!("../../fixtures/naca66_a08.txt");

/// Peak of `x (1 - x) (1 - 2x)` on `[0, 1]`.
const FORE_AFT_PEAK: f64 = 0.096_225_044_864_937_63;

/// Chordwise thickness and camber shapes of a section family.
///
/// `thickness(x)` is the half-thickness divided by the maximum thickness
/// (peak 0.5), `camber(x)` the mean line divided by the maximum camber
/// (peak 1.0). `x` runs from the leading edge (0) to the trailing edge (1).
#[derive(Debug, Clone)]
pub struct SectionProfile {
    id: String,
    thickness: Pchip,
    camber: Pchip,
}

impl SectionProfile {
    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "naca66_a08" => Self::parse(id, NACA66_A08),
            other => {
                let path = Path::new(other);
                if path.exists() {
                    Self::parse(other, &std::fs::read_to_string(path)?)
                } else {
                    Err(Error::InvalidInput(format!("unknown section profile `{other}`")))
                }
            }
        }
    }

    pub fn naca66_a08() -> Self {
        Self::parse("naca66_a08", NACA66_A08).expect("bundled profile table parses")
    }

    pub fn parse(id: &str, text: &str) -> Result<Self> {
        let mut x = Vec::new();
        let mut t = Vec::new();
        let mut c = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: k + 1, msg: e.to_string() })?;
            if cols.len() != 3 {
                return Err(Error::Parse { line: k + 1, msg: format!("expected 3 columns, found {}", cols.len()) });
            }
            if let Some(&prev) = x.last() {
                if cols[0] <= prev {
                    return Err(Error::Parse { line: k + 1, msg: "x/c must increase".into() });
                }
            }
            x.push(cols[0]);
            t.push(cols[1]);
            c.push(cols[2]);
        }
        if x.len() < 4 || x[0] != 0.0 || x[x.len() - 1] != 1.0 {
            return Err(Error::InvalidInput("profile table must span x/c = 0 to 1 with at least 4 rows".into()));
        }
        Ok(Self { id: id.to_string(), thickness: Pchip::new(x.clone(), t), camber: Pchip::new(x, c) })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn thickness(&self, x: f64) -> f64 {
        self.thickness.eval(x)
    }

    pub fn camber(&self, x: f64) -> f64 {
        self.camber.eval(x)
    }

    /// Fore/aft camber shape carried by the sectional-camber distribution:
    /// positive values load the forward half of the section and unload the
    /// aft half; peak magnitude 1.
    pub fn sectional_camber(x: f64) -> f64 {
        x * (1.0 - x) * (1.0 - 2.0 * x) / FORE_AFT_PEAK
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_shape() {
        let p = SectionProfile::naca66_a08();
        assert_eq!(p.thickness(0.0), 0.0);
        assert_eq!(p.thickness(1.0), 0.0);
        assert!((p.thickness(0.45) - 0.5).abs() < 1e-12);
        let peak = (0..=1000).map(|k| p.camber(k as f64 / 1000.0)).fold(f64::MIN, f64::max);
        assert!((peak - 1.0).abs() < 2e-3);
    }

    #[test]
    fn fore_aft_shape_is_normalised() {
        let x0 = (3.0 - 3f64.sqrt()) / 6.0;
        assert!((SectionProfile::sectional_camber(x0) - 1.0).abs() < 1e-14);
        assert!((SectionProfile::sectional_camber(1.0 - x0) + 1.0).abs() < 1e-14);
        assert_eq!(SectionProfile::sectional_camber(0.5), 0.0);
    }

    #[test]
    fn rejects_unordered_rows() {
        let err = SectionProfile::parse("t", "0 0 0\n0.5 0.5 1\n0.4 0.3 0.5\n1 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }
}
