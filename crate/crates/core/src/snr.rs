//! Photon-shot-noise SNR budget for optically read DEER.

use serde::{Deserialize, Serialize};

use crate::constants::photon_energy_j;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnrBudget {
    pub t0_us: f64,
    #[serde(rename = "T2_us")]
    pub t2_us: f64,
    pub p_coll_frac: f64,
    pub p_det_frac: f64,
    /// Absorption cross section over illuminated area.
    #[serde(rename = "sigma_over_A_ratio")]
    pub sigma_over_a: f64,
    #[serde(rename = "P0_W")]
    pub p0_w: f64,
    pub wavelength_nm: f64,
    /// Photoluminescence integration time per cycle.
    #[serde(rename = "T_integr_us")]
    pub t_integr_us: f64,
    /// Mean quantum yield, used unless both state yields are given.
    pub phi_mean_frac: f64,
    /// Spin contrast, used unless both state yields are given.
    #[serde(rename = "contrast_X_ratio")]
    pub contrast_x: f64,
    #[serde(rename = "phi_H_frac", default, skip_serializing_if = "Option::is_none")]
    pub phi_h: Option<f64>,
    #[serde(rename = "phi_L_frac", default, skip_serializing_if = "Option::is_none")]
    pub phi_l: Option<f64>,
    pub n_cycles_count: u64,
    #[serde(rename = "T_rep_us")]
    pub t_rep_us: f64,
    /// Spectrum points acquired, for the total experiment time.
    pub n_points_count: u64,
    /// Number of probe spins read together.
    #[serde(default = "one")]
    pub probe_count: u64,
    /// Scale SNR by √probe_count.
    #[serde(default)]
    pub ensemble: bool,
}

fn one() -> u64 {
    1
}

impl Default for SnrBudget {
    fn default() -> Self {
        SnrBudget {
            t0_us: 6.25,
            t2_us: 12.5,
            p_coll_frac: 0.5,
            p_det_frac: 0.4,
            sigma_over_a: 1.0,
            p0_w: 20e-6,
            wavelength_nm: 780.0,
            t_integr_us: 1.0,
            phi_mean_frac: 1.0,
            contrast_x: 0.02,
            phi_h: None,
            phi_l: None,
            n_cycles_count: 5000,
            t_rep_us: 200.0,
            n_points_count: 100,
            probe_count: 1,
            ensemble: false,
        }
    }
}

fn check_frac(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::argument(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// `X = (Φ_H − Φ_L)/(Φ_H + Φ_L)`.
pub fn contrast_from_yields(phi_h: f64, phi_l: f64) -> Result<f64> {
    check_frac("phi_H", phi_h)?;
    check_frac("phi_L", phi_l)?;
    if phi_h + phi_l == 0.0 {
        return Err(Error::domain("both quantum yields are zero"));
    }
    Ok((phi_h - phi_l) / (phi_h + phi_l))
}

impl SnrBudget {
    pub fn validate(&self) -> Result<()> {
        check_frac("p_coll", self.p_coll_frac)?;
        check_frac("p_det", self.p_det_frac)?;
        if !(self.sigma_over_a > 0.0 && self.sigma_over_a <= 1.0) {
            return Err(Error::argument("sigma/A must lie in (0, 1]"));
        }
        if !(self.t2_us > 0.0) {
            return Err(Error::argument("T2 must be positive"));
        }
        if !(self.p0_w > 0.0) {
            return Err(Error::argument("optical power must be positive"));
        }
        if !(self.wavelength_nm > 0.0 && self.t_integr_us > 0.0 && self.t_rep_us > 0.0) {
            return Err(Error::argument("wavelength, integration and repetition times must be positive"));
        }
        if self.t0_us < 0.0 {
            return Err(Error::argument("t0 must be non-negative"));
        }
        if !(self.phi_mean_frac > 0.0) {
            return Err(Error::argument("mean quantum yield must be positive"));
        }
        if !(-1.0..=1.0).contains(&self.contrast_x) {
            return Err(Error::argument("contrast X must lie in [-1, 1]"));
        }
        if self.phi_h.is_some() != self.phi_l.is_some() {
            return Err(Error::argument("phi_H and phi_L must be given together"));
        }
        if let (Some(h), Some(l)) = (self.phi_h, self.phi_l) {
            contrast_from_yields(h, l)?;
        }
        if self.n_cycles_count == 0 || self.probe_count == 0 {
            return Err(Error::argument("cycle and probe counts must be at least 1"));
        }
        Ok(())
    }

    pub fn phi_mean(&self) -> f64 {
        match (self.phi_h, self.phi_l) {
            (Some(h), Some(l)) => 0.5 * (h + l),
            _ => self.phi_mean_frac,
        }
    }

    pub fn contrast(&self) -> Result<f64> {
        match (self.phi_h, self.phi_l) {
            (Some(h), Some(l)) => contrast_from_yields(h, l),
            _ => Ok(self.contrast_x),
        }
    }

    /// Photons per integration window.
    pub fn photons_per_window(&self) -> f64 {
        self.p0_w * self.t_integr_us * 1e-6 / photon_energy_j(self.wavelength_nm)
    }
}

/// Shot-noise-limited optical SNR of one cycle at full dipolar contrast.
pub fn r_opt(b: &SnrBudget) -> Result<f64> {
    b.validate()?;
    let decay = (-2.0 * b.t0_us / b.t2_us).exp();
    let photons = b.p_coll_frac * b.p_det_frac * b.sigma_over_a * b.photons_per_window() * b.phi_mean();
    let mut r = decay * photons.sqrt();
    if b.ensemble {
        r *= (b.probe_count as f64).sqrt();
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Excitation {
    /// Off-resonant excitation: signal carries the spin contrast X.
    OffResonant,
    /// Spin-selective resonant excitation of the zero-phonon line.
    Resonant,
}

pub fn snr_single_shot(r_opt: f64, v: f64, contrast_x: f64, mode: Excitation) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::argument(format!("DEER signal must lie in [0, 1], got {v}")));
    }
    Ok(match mode {
        Excitation::OffResonant => r_opt * (1.0 - v) * contrast_x,
        Excitation::Resonant => r_opt * (1.0 - v),
    })
}

pub fn averaged_snr(r: f64, n_cycles: u64) -> Result<f64> {
    if n_cycles == 0 {
        return Err(Error::argument("need at least one cycle"));
    }
    Ok(r * (n_cycles as f64).sqrt())
}

/// Total acquisition time in seconds.
pub fn experiment_time_s(n_cycles: u64, t_rep_us: f64, n_points: u64) -> f64 {
    n_cycles as f64 * t_rep_us * 1e-6 * n_points as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapType {
    /// Complete bandgap: every emission direction is guided.
    Isotropic,
    /// Direction-partial gap: on average cos²θ of the emission is guided.
    Partial,
}

pub fn collection_efficiency(coupler_eff: f64, gap: GapType) -> Result<f64> {
    check_frac("coupler efficiency", coupler_eff)?;
    Ok(match gap {
        GapType::Isotropic => coupler_eff,
        GapType::Partial => 0.5 * coupler_eff,
    })
}

/// Illuminated area `(3λ/2)(λ/10)` in nm² for a wavelength in nm.
pub fn default_spot_area_nm2(wavelength_nm: f64) -> f64 {
    1.5 * wavelength_nm * 0.1 * wavelength_nm
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnrReport {
    pub r_opt: f64,
    pub r_single: f64,
    pub r_averaged: f64,
    pub t_total_s: f64,
    pub assumptions: Vec<String>,
}

pub fn snr_report(b: &SnrBudget, v: f64, mode: Excitation) -> Result<SnrReport> {
    let r0 = r_opt(b)?;
    let x = b.contrast()?;
    let single = snr_single_shot(r0, v, x, mode)?;
    let mut assumptions = vec![
        "photon shot noise only".to_string(),
        format!("probe echo decay exp(-2 t0/T2) = {:.6}", (-2.0 * b.t0_us / b.t2_us).exp()),
        format!("photon energy from wavelength {} nm", b.wavelength_nm),
    ];
    if b.ensemble {
        assumptions.push(format!("ensemble of {} probes, SNR scaled by sqrt(N)", b.probe_count));
    }
    Ok(SnrReport {
        r_opt: r0,
        r_single: single,
        r_averaged: averaged_snr(single, b.n_cycles_count)?,
        t_total_s: experiment_time_s(b.n_cycles_count, b.t_rep_us, b.n_points_count),
        assumptions,
    })
}
