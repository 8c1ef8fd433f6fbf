//! Field-swept EPR/ODMR spectra from spin Hamiltonians.
//!
//! A [`SpinSystem`] holds one electron spin with Zeeman, zero-field and
//! hyperfine terms. Resonance fields are found by sweeping the field along
//! a fixed direction and bisecting every eigenvalue gap that crosses the
//! microwave quantum; powder spectra average those line sets over a
//! deterministic hemisphere grid.

mod hamiltonian;
mod resonance;
mod spectrum;

pub use spectrum::single_crystal_spectrum;
pub use hamiltonian::{build_hamiltonian, euler_rotation, spin_operators, SpinOperators};
pub use resonance::{gradient_shifted_lines, resonance_fields, resonance_fields_in, FieldWindow, SpectrumLine};
pub use spectrum::{
    depth_resolution_angstrom, hemisphere_spiral, linewidth_from_t2, powder_spectrum, spectral_fraction, Band,
    Spectrum,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lineshape {
    #[default]
    Gaussian,
    Lorentzian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperfine {
    /// Twice the nuclear spin, `2I`.
    pub nuclear_spin_half_count: u32,
    /// Principal values of the hyperfine tensor.
    #[serde(rename = "A_MHz")]
    pub a_mhz: [f64; 3],
    /// ZYZ Euler angles of the tensor frame relative to the system frame.
    #[serde(default)]
    pub euler_deg: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSystem {
    pub label: String,
    /// Twice the electron spin, `2S`.
    pub spin_half_count: u32,
    /// Principal values of the g tensor.
    pub g_factor: [f64; 3],
    /// ZYZ Euler angles shared by the g and zero-field tensors.
    #[serde(default)]
    pub euler_deg: [f64; 3],
    #[serde(rename = "D_MHz", default)]
    pub d_mhz: f64,
    #[serde(rename = "E_MHz", default)]
    pub e_mhz: f64,
    /// Gaussian standard deviation of `D` across the ensemble.
    #[serde(rename = "D_strain_MHz", default)]
    pub d_strain_mhz: f64,
    #[serde(default)]
    pub hyperfine: Vec<Hyperfine>,
    /// Full width at half maximum of the intrinsic line.
    #[serde(rename = "linewidth_G")]
    pub linewidth_g: f64,
    #[serde(default)]
    pub lineshape: Lineshape,
}

impl SpinSystem {
    pub fn spin(&self) -> f64 {
        0.5 * self.spin_half_count as f64
    }

    pub fn g_iso(&self) -> f64 {
        self.g_factor.iter().sum::<f64>() / 3.0
    }

    /// Hilbert-space dimension of the product basis.
    pub fn dimension(&self) -> usize {
        self.hyperfine
            .iter()
            .fold(self.spin_half_count as usize + 1, |d, h| d * (h.nuclear_spin_half_count as usize + 1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.spin_half_count < 1 {
            return Err(Error::argument(format!("{}: electron spin must be at least 1/2", self.label)));
        }
        if !(self.linewidth_g > 0.0) {
            return Err(Error::argument(format!("{}: linewidth must be positive", self.label)));
        }
        if self.g_factor.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::argument(format!("{}: g principal values must be positive", self.label)));
        }
        if self.d_mhz != 0.0 && self.e_mhz.abs() > self.d_mhz.abs() / 3.0 + 1e-12 {
            return Err(Error::argument(format!("{}: |E| must not exceed |D|/3", self.label)));
        }
        if self.d_strain_mhz < 0.0 {
            return Err(Error::argument(format!("{}: D strain must be non-negative", self.label)));
        }
        if self.hyperfine.iter().any(|h| h.nuclear_spin_half_count == 0) {
            return Err(Error::argument(format!("{}: hyperfine nucleus needs I >= 1/2", self.label)));
        }
        Ok(())
    }

    /// Negatively charged silicon vacancy (V2) in 4H-SiC.
    pub fn v2() -> Self {
        SpinSystem {
            label: "V2".into(),
            spin_half_count: 3,
            g_factor: [2.0028; 3],
            euler_deg: [0.0; 3],
            d_mhz: 35.0,
            e_mhz: 0.0,
            d_strain_mhz: 0.0,
            hyperfine: Vec::new(),
            linewidth_g: 0.5,
            lineshape: Lineshape::Gaussian,
        }
    }

    /// Nitroxide spin label with ¹⁴N hyperfine.
    pub fn nitroxide() -> Self {
        SpinSystem {
            label: "nitroxide".into(),
            spin_half_count: 1,
            g_factor: [2.0089, 2.0061, 2.0027],
            euler_deg: [0.0; 3],
            d_mhz: 0.0,
            e_mhz: 0.0,
            d_strain_mhz: 0.0,
            hyperfine: vec![Hyperfine {
                nuclear_spin_half_count: 2,
                a_mhz: [14.0, 14.0, 95.0],
                euler_deg: [0.0; 3],
            }],
            linewidth_g: 3.0,
            lineshape: Lineshape::Gaussian,
        }
    }

    /// Gd(III) label: S = 7/2 with a broad distribution of zero-field splittings.
    pub fn gadolinium() -> Self {
        SpinSystem {
            label: "Gd".into(),
            spin_half_count: 7,
            g_factor: [1.992; 3],
            euler_deg: [0.0; 3],
            d_mhz: 600.0,
            e_mhz: 0.0,
            d_strain_mhz: 200.0,
            hyperfine: Vec::new(),
            linewidth_g: 10.0,
            lineshape: Lineshape::Gaussian,
        }
    }

    pub fn trityl() -> Self {
        SpinSystem {
            label: "trityl".into(),
            spin_half_count: 1,
            g_factor: [2.0026; 3],
            euler_deg: [0.0; 3],
            d_mhz: 0.0,
            e_mhz: 0.0,
            d_strain_mhz: 0.0,
            hyperfine: Vec::new(),
            linewidth_g: 1.0,
            lineshape: Lineshape::Gaussian,
        }
    }

    pub fn isotropic(label: &str, spin_half_count: u32, g: f64, linewidth_g: f64) -> Self {
        SpinSystem {
            label: label.into(),
            spin_half_count,
            g_factor: [g; 3],
            euler_deg: [0.0; 3],
            d_mhz: 0.0,
            e_mhz: 0.0,
            d_strain_mhz: 0.0,
            hyperfine: Vec::new(),
            linewidth_g,
            lineshape: Lineshape::Gaussian,
        }
    }

    pub fn defaults() -> Vec<Self> {
        vec![Self::v2(), Self::nitroxide(), Self::gadolinium(), Self::trityl()]
    }
}
