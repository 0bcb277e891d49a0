use std::path::Path;

use serde::Serialize;

use super::design_space::Distribution;
use super::profile::SectionProfile;
use crate::error::{Error, Result};
use crate::interp::Pchip;

const E779A: &str = include_str!("../../fixtures/e779a.txt");

/// One row of the station table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Station {
    pub r_over_r: f64,
    pub chord_over_d: f64,
    pub pitch_over_d: f64,
    pub skew_deg: f64,
    /// Axial generator-line offset, positive aft, in units of D.
    pub rake_over_d: f64,
    pub camber_over_c: f64,
    pub thickness_over_c: f64,
}

#[derive(Debug, Clone)]
struct Columns {
    chord: Pchip,
    pitch: Pchip,
    skew: Pchip,
    rake: Pchip,
    camber: Pchip,
    thickness: Pchip,
}

/// Baseline blade: radial distributions interpolated monotonically between
/// table stations.
#[derive(Debug, Clone)]
pub struct BaselineBlade {
    stations: Vec<Station>,
    diameter: f64,
    blade_count: usize,
    hub_ratio: f64,
    profile: SectionProfile,
    columns: Columns,
}

impl BaselineBlade {
    /// The bundled E779A station table.
    pub fn e779a() -> Self {
        Self::parse(E779A).expect("bundled E779A table parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parse the whitespace-separated station table.
    ///
    /// Columns: `r/R c/D P/D skew_deg rake f_max/c t_max/c`. Blade-level
    /// values come from `# key value` directives (`diameter_m`, `blade_count`,
    /// `hub_ratio`, `profile`); every other `#` line is a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut diameter = None;
        let mut blade_count = None;
        let mut hub_ratio = None;
        let mut profile_id = String::from("naca66_a08");
        let mut stations: Vec<Station> = Vec::new();

        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut it = comment.split_whitespace();
                let (Some(key), Some(value), None) = (it.next(), it.next(), it.next()) else {
                    continue;
                };
                let num =
                    || value.parse::<f64>().map_err(|e| Error::Parse { line: line_no, msg: format!("{key}: {e}") });
                match key {
                    "diameter_m" => diameter = Some(num()?),
                    "blade_count" => blade_count = Some(num()? as usize),
                    "hub_ratio" => hub_ratio = Some(num()?),
                    "profile" => profile_id = value.to_string(),
                    _ => {}
                }
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
            if cols.len() != 7 {
                return Err(Error::Parse { line: line_no, msg: format!("expected 7 columns, found {}", cols.len()) });
            }
            if cols.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse { line: line_no, msg: "non-finite value".into() });
            }
            if let Some(prev) = stations.last() {
                if cols[0] <= prev.r_over_r {
                    return Err(Error::NonMonotoneRadii(line_no));
                }
            }
            stations.push(Station {
                r_over_r: cols[0],
                chord_over_d: cols[1],
                pitch_over_d: cols[2],
                skew_deg: cols[3],
                rake_over_d: cols[4],
                camber_over_c: cols[5],
                thickness_over_c: cols[6],
            });
        }

        if stations.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "station table needs at least 4 stations, found {}",
                stations.len()
            )));
        }
        let diameter = diameter.ok_or_else(|| Error::InvalidInput("missing `# diameter_m` directive".into()))?;
        if !(diameter > 0.0) {
            return Err(Error::InvalidInput("diameter must be positive".into()));
        }
        let blade_count = blade_count.ok_or_else(|| Error::InvalidInput("missing `# blade_count` directive".into()))?;
        if blade_count == 0 {
            return Err(Error::InvalidInput("blade_count must be positive".into()));
        }
        let first = stations[0].r_over_r;
        let hub_ratio = hub_ratio.unwrap_or(first);
        if (first - hub_ratio).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "first station r/R = {first} does not sit on the hub ratio {hub_ratio}"
            )));
        }
        if (stations[stations.len() - 1].r_over_r - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("last station must be the tip, r/R = 1".into()));
        }
        if stations.iter().any(|s| !(s.chord_over_d > 0.0) || !(s.thickness_over_c >= 0.0)) {
            return Err(Error::InvalidInput("chord must be positive at every station".into()));
        }

        let profile = SectionProfile::by_id(&profile_id)?;
        let col = |f: fn(&Station) -> f64| {
            Pchip::new(stations.iter().map(|s| s.r_over_r).collect(), stations.iter().map(f).collect())
        };
        let columns = Columns {
            chord: col(|s| s.chord_over_d),
            pitch: col(|s| s.pitch_over_d),
            skew: col(|s| s.skew_deg),
            rake: col(|s| s.rake_over_d),
            camber: col(|s| s.camber_over_c),
            thickness: col(|s| s.thickness_over_c),
        };
        Ok(Self { stations, diameter, blade_count, hub_ratio, profile, columns })
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    pub fn blade_count(&self) -> usize {
        self.blade_count
    }

    pub fn hub_ratio(&self) -> f64 {
        self.hub_ratio
    }

    pub fn profile(&self) -> &SectionProfile {
        &self.profile
    }

    /// Baseline value of a designable distribution at `r/R`.
    pub fn distribution(&self, which: Distribution, r: f64) -> f64 {
        match which {
            Distribution::Pitch => self.columns.pitch.eval(r),
            Distribution::Chord => self.columns.chord.eval(r),
            Distribution::MaxCamber => self.columns.camber.eval(r),
            Distribution::SectionalCamber => 0.0,
        }
    }

    pub fn skew_deg(&self, r: f64) -> f64 {
        self.columns.skew.eval(r)
    }

    pub fn rake_over_d(&self, r: f64) -> f64 {
        self.columns.rake.eval(r)
    }

    pub fn thickness_over_c(&self, r: f64) -> f64 {
        self.columns.thickness.eval(r)
    }

    /// Expanded blade area ratio `A_E / A_0` from the interpolated chord.
    pub fn expanded_area_ratio(&self) -> f64 {
        let n = 4000;
        let h = (1.0 - self.hub_ratio) / n as f64;
        let integral: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * self.columns.chord.eval(self.hub_ratio + h * k as f64)
            })
            .sum::<f64>()
            * h;
        2.0 * self.blade_count as f64 / std::f64::consts::PI * integral
    }
}
