//! Implantation statistics: vacancy depth profiles, Poisson counts per
//! aperture and usable-device yield.
//!
//! Profiles are two-column text (depth, vacancies per ion per unit depth),
//! interpolated linearly between rows. Optional `# key = value` header
//! lines: `vacancies_per_ion`, `depth_unit` (`nm` | `angstrom`) and
//! `density_unit` (`per_nm` | `per_angstrom`). Other `#` lines are ignored.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::NM2_PER_CM2;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImplantProfile {
    pub depth_nm: Vec<f64>,
    /// Vacancies per ion per nm at each depth node.
    pub density_per_nm: Vec<f64>,
    /// Value stated in the file header, if any.
    pub stated_vacancies_per_ion: Option<f64>,
}

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

impl ImplantProfile {
    pub fn new(depth_nm: Vec<f64>, density_per_nm: Vec<f64>) -> Result<Self> {
        let p = ImplantProfile {
            depth_nm,
            density_per_nm,
            stated_vacancies_per_ion: None,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.depth_nm.len() != self.density_per_nm.len() {
            return Err(Error::Format("depth and density columns differ in length".into()));
        }
        if self.depth_nm.len() < 2 {
            return Err(Error::Format("profile needs at least two rows".into()));
        }
        if let Some(i) = self.depth_nm.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Format(format!(
                "depth not strictly increasing at row {} ({} then {})",
                i + 2,
                self.depth_nm[i],
                self.depth_nm[i + 1]
            )));
        }
        if let Some(v) = self.density_per_nm.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Format(format!("negative or invalid density {v}")));
        }
        Ok(())
    }

    pub fn parse_str(text: &str, source: &str) -> Result<Self> {
        let mut depth_scale = 1.0;
        let mut density_scale = 1.0;
        let mut stated = None;
        let mut depth = Vec::new();
        let mut density = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once('=') {
                    let value = value.trim();
                    match key.trim() {
                        "vacancies_per_ion" => {
                            stated = Some(value.parse::<f64>().map_err(|_| {
                                parse_err(source, line_no, format!("bad vacancies_per_ion value '{value}'"))
                            })?)
                        }
                        "depth_unit" => {
                            depth_scale = match value {
                                "nm" => 1.0,
                                "angstrom" => 0.1,
                                other => return Err(parse_err(source, line_no, format!("unknown depth_unit '{other}'"))),
                            }
                        }
                        "density_unit" => {
                            density_scale = match value {
                                "per_nm" => 1.0,
                                "per_angstrom" => 10.0,
                                other => {
                                    return Err(parse_err(source, line_no, format!("unknown density_unit '{other}'")))
                                }
                            }
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if fields.len() != 2 {
                return Err(parse_err(source, line_no, format!("expected 2 columns, found {}", fields.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(source, line_no, format!("not a number: '{s}'")))
            };
            depth.push(num(fields[0])?);
            density.push(num(fields[1])?);
        }
        let p = ImplantProfile {
            depth_nm: depth.into_iter().map(|z| z * depth_scale).collect(),
            density_per_nm: density.into_iter().map(|d| d * density_scale).collect(),
            stated_vacancies_per_ion: stated,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.depth_nm[0], self.depth_nm[self.depth_nm.len() - 1])
    }

    /// Vacancies per ion between two depths.
    pub fn integral(&self, z1: f64, z2: f64) -> f64 {
        let (x, y) = (&self.depth_nm, &self.density_per_nm);
        let mut total = 0.0;
        for i in 0..x.len() - 1 {
            let lo = z1.max(x[i]);
            let hi = z2.min(x[i + 1]);
            if hi <= lo {
                continue;
            }
            let at = |t: f64| y[i] + (y[i + 1] - y[i]) * (t - x[i]) / (x[i + 1] - x[i]);
            total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
        }
        total
    }

    pub fn vacancies_per_ion(&self) -> f64 {
        let (a, b) = self.support();
        self.integral(a, b)
    }
}

pub fn parse_profile(path: &Path) -> Result<ImplantProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ImplantProfile::parse_str(&text, &path.display().to_string())
}

/// Profiles shipped with the toolkit, by name.
pub const BUNDLED_PROFILES: [(&str, &str); 2] = [
    ("trilayer_30keV", include_str!("../../../fixtures/trilayer_30keV.txt")),
    ("direct_5keV", include_str!("../../../fixtures/direct_5keV.txt")),
];

pub fn bundled_profile(name: &str) -> Result<ImplantProfile> {
    let (_, text) = BUNDLED_PROFILES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::argument(format!("no bundled profile named '{name}'")))?;
    ImplantProfile::parse_str(text, name)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApertureSpec {
    pub diameter_nm: f64,
    pub dose_per_cm2: f64,
    /// Fraction of the simulated vacancies that survive as usable centres.
    pub decimation_frac: f64,
}

impl Default for ApertureSpec {
    fn default() -> Self {
        ApertureSpec {
            diameter_nm: 20.0,
            dose_per_cm2: 4.4e12,
            decimation_frac: 0.01,
        }
    }
}

impl ApertureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.diameter_nm > 0.0) {
            return Err(Error::argument("aperture diameter must be positive"));
        }
        if !(self.dose_per_cm2 > 0.0) {
            return Err(Error::argument("dose must be positive"));
        }
        if !(self.decimation_frac > 0.0 && self.decimation_frac <= 1.0) {
            return Err(Error::argument("decimation must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Ions through the aperture.
    pub fn ions(&self) -> f64 {
        let r = 0.5 * self.diameter_nm;
        self.dose_per_cm2 / NM2_PER_CM2 * std::f64::consts::PI * r * r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountEstimate {
    pub lambda: f64,
    pub warnings: Vec<String>,
}

/// Mean number of usable vacancies per aperture, optionally restricted to
/// a depth window.
pub fn expected_count(profile: &ImplantProfile, ap: &ApertureSpec, window: Option<(f64, f64)>) -> Result<CountEstimate> {
    ap.validate()?;
    let (lo, hi) = profile.support();
    let mut warnings = Vec::new();
    let vacancies = match window {
        None => profile.vacancies_per_ion(),
        Some((z1, z2)) => {
            if z2 < z1 {
                return Err(Error::argument(format!("window [{z1}, {z2}] is reversed")));
            }
            if z2 <= lo || z1 >= hi {
                warnings.push(format!("window [{z1}, {z2}] nm lies outside the profile support [{lo}, {hi}] nm"));
                0.0
            } else {
                profile.integral(z1, z2)
            }
        }
    };
    Ok(CountEstimate {
        lambda: ap.ions() * ap.decimation_frac * vacancies,
        warnings,
    })
}

pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let log_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (-lambda + k as f64 * lambda.ln() - log_fact).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub k: u64,
    pub probability: f64,
    pub expected_devices: f64,
    pub rounded_devices: u64,
}

/// Expected device counts holding `k` centres, for `k` up to the point
/// where the missing tail mass drops below [`HISTOGRAM_TAIL`].
pub const HISTOGRAM_TAIL: f64 = 1e-10;

pub fn poisson_histogram(lambda: f64, n_devices: u64) -> Result<Vec<HistogramBin>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::argument(format!("Poisson mean must be finite and non-negative, got {lambda}")));
    }
    let mut out = Vec::new();
    let mut cumulative = 0.0;
    let mut k = 0;
    loop {
        let p = poisson_pmf(k, lambda);
        cumulative += p;
        let expected = n_devices as f64 * p;
        out.push(HistogramBin {
            k,
            probability: p,
            expected_devices: expected,
            rounded_devices: expected.round() as u64,
        });
        if cumulative >= 1.0 - HISTOGRAM_TAIL && (k as f64) >= lambda {
            break;
        }
        k += 1;
    }
    Ok(out)
}

/// Fraction of the vacancy distribution between `z1` and `z2`.
pub fn depth_window_probability(profile: &ImplantProfile, z1: f64, z2: f64) -> Result<f64> {
    if z2 < z1 {
        return Err(Error::argument(format!("window [{z1}, {z2}] is reversed")));
    }
    let total = profile.vacancies_per_ion();
    if !(total > 0.0) {
        return Err(Error::domain("profile integrates to zero"));
    }
    Ok(profile.integral(z1, z2) / total)
}

/// Expected devices with exactly one centre inside the depth window.
pub fn usable_yield(lambda: f64, p_window: f64, n_devices: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_window) {
        return Err(Error::argument("window probability must lie in [0, 1]"));
    }
    Ok(n_devices as f64 * poisson_pmf(1, lambda) * p_window)
}
