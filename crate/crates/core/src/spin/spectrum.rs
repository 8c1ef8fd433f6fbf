use rayon::prelude::*;
use serde::Serialize;

use super::resonance::{resonance_fields_in, FieldWindow, SpectrumLine};
use super::{Lineshape, SpinSystem};
use crate::constants::MU_B_OVER_H_MHZ_PER_G;
use crate::quadrature::gauss_hermite_normal;
use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub field_grid_g: Vec<f64>,
    pub intensity: Vec<f64>,
    pub systems: Vec<String>,
}

/// Quadrature nodes used for the zero-field-splitting distribution.
const STRAIN_NODES: usize = 9;
/// Lines are searched this many linewidths beyond the requested grid.
const WINDOW_MARGIN_LINEWIDTHS: f64 = 5.0;

/// `n` near-uniform directions on the upper hemisphere (z ≥ 0), equal
/// area weight each. The sequence depends on `n` only.
pub fn hemisphere_spiral(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (k as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::argument("field grid needs at least two points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::argument("field grid must be strictly increasing"));
    }
    Ok(())
}

fn line_profile(shape: Lineshape, fwhm: f64, offset: f64) -> f64 {
    match shape {
        Lineshape::Gaussian => {
            let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
            (-0.5 * (offset / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        }
        Lineshape::Lorentzian => {
            let hw = 0.5 * fwhm;
            hw / std::f64::consts::PI / (offset * offset + hw * hw)
        }
    }
}

/// Accumulate broadened lines onto `grid`.
fn broaden(grid: &[f64], lines: &[(f64, f64)], shape: Lineshape, fwhm: f64) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for &(b0, weight) in lines {
        for (o, &b) in out.iter_mut().zip(grid) {
            *o += weight * line_profile(shape, fwhm, b - b0);
        }
    }
    out
}

fn normalize_max(v: &mut [f64]) {
    let max = v.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        v.iter_mut().for_each(|x| *x /= max);
    }
}

/// Broadened single-orientation spectrum, normalized to unit maximum.
pub fn single_crystal_spectrum(sys: &SpinSystem, lines: &[SpectrumLine], grid: &[f64]) -> Result<Spectrum> {
    check_grid(grid)?;
    let pairs: Vec<(f64, f64)> = lines.iter().map(|l| (l.resonance_field_g, l.amplitude)).collect();
    let mut intensity = broaden(grid, &pairs, sys.lineshape, sys.linewidth_g);
    normalize_max(&mut intensity);
    Ok(Spectrum {
        field_grid_g: grid.to_vec(),
        intensity,
        systems: vec![sys.label.clone()],
    })
}

/// Orientation-averaged field-swept spectrum on `grid`, normalized to unit
/// maximum. A non-zero D strain is averaged with Gauss-Hermite nodes.
pub fn powder_spectrum(sys: &SpinSystem, freq_ghz: f64, grid: &[f64], n_orient: usize) -> Result<Spectrum> {
    sys.validate()?;
    check_grid(grid)?;
    if n_orient < 50 {
        return Err(Error::argument(format!("powder average needs at least 50 orientations, got {n_orient}")));
    }
    let margin = WINDOW_MARGIN_LINEWIDTHS * sys.linewidth_g;
    let window = FieldWindow {
        lo_g: (grid[0] - margin).max(1.0),
        hi_g: grid[grid.len() - 1] + margin,
        step_g: FieldWindow::default().step_g,
    };
    let d_samples: Vec<(f64, f64)> = if sys.d_strain_mhz > 0.0 {
        gauss_hermite_normal(STRAIN_NODES)
            .into_iter()
            .map(|(x, w)| (sys.d_mhz + sys.d_strain_mhz * x, w))
            .collect()
    } else {
        vec![(sys.d_mhz, 1.0)]
    };
    let dirs = hemisphere_spiral(n_orient);
    let per_orientation: Vec<Vec<(f64, f64)>> = dirs
        .par_iter()
        .map(|&dir| -> Result<Vec<(f64, f64)>> {
            let mut acc = Vec::new();
            for &(d, w) in &d_samples {
                for l in resonance_fields_in(sys, freq_ghz, dir, window, d)? {
                    acc.push((l.resonance_field_g, w * l.amplitude));
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut intensity = vec![0.0; grid.len()];
    for lines in &per_orientation {
        let part = broaden(grid, lines, sys.lineshape, sys.linewidth_g);
        intensity.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }
    normalize_max(&mut intensity);
    Ok(Spectrum {
        field_grid_g: grid.to_vec(),
        intensity,
        systems: vec![sys.label.clone()],
    })
}

/// Homogeneous linewidth in gauss for a coherence time in µs.
pub fn linewidth_from_t2(t2_us: f64, g: f64) -> Result<f64> {
    if !(t2_us > 0.0) || !(g > 0.0) {
        return Err(Error::argument("T2 and g must be positive"));
    }
    Ok(1.0 / (g * MU_B_OVER_H_MHZ_PER_G * t2_us))
}

/// Depth resolution in ångström from a linewidth (G) and gradient (G/nm).
pub fn depth_resolution_angstrom(linewidth_g: f64, gradient_g_per_nm: f64) -> Result<f64> {
    if linewidth_g < 0.0 {
        return Err(Error::argument("linewidth must be non-negative"));
    }
    if gradient_g_per_nm == 0.0 || !gradient_g_per_nm.is_finite() {
        return Err(Error::domain("zero field gradient gives no spatial encoding"));
    }
    Ok(10.0 * linewidth_g / gradient_g_per_nm.abs())
}

/// Spectral window for [`spectral_fraction`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Band {
    /// Window on the swept-field axis.
    Field { lo_g: f64, hi_g: f64 },
    /// Pump frequency window at a fixed static field, for a spectrum
    /// recorded at `spectrum_ghz`. Spins with resonance field `B_r` precess
    /// at `spectrum_ghz + gμ_B(field_g − B_r)/h` at the static field.
    Frequency {
        lo_ghz: f64,
        hi_ghz: f64,
        field_g: f64,
        spectrum_ghz: f64,
        g: f64,
    },
}

impl Band {
    fn field_interval(&self) -> (f64, f64) {
        match *self {
            Band::Field { lo_g, hi_g } => (lo_g, hi_g),
            Band::Frequency {
                lo_ghz,
                hi_ghz,
                field_g,
                spectrum_ghz,
                g,
            } => {
                let per_g = g * MU_B_OVER_H_MHZ_PER_G * 1e-3;
                let a = field_g - (hi_ghz - spectrum_ghz) / per_g;
                let b = field_g - (lo_ghz - spectrum_ghz) / per_g;
                (a.min(b), a.max(b))
            }
        }
    }
}

/// Integral of the piecewise-linear interpolant of `(x, y)` over `[a, b]`.
fn integrate_between(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() - 1 {
        let (x0, x1) = (x[i], x[i + 1]);
        let lo = a.max(x0);
        let hi = b.min(x1);
        if hi <= lo {
            continue;
        }
        let at = |t: f64| y[i] + (y[i + 1] - y[i]) * (t - x0) / (x1 - x0);
        total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    }
    total
}

/// Fraction of the spectrum's integrated intensity inside `band`.
pub fn spectral_fraction(spec: &Spectrum, band: Band) -> Result<f64> {
    check_grid(&spec.field_grid_g)?;
    let x = &spec.field_grid_g;
    let total = integrate_between(x, &spec.intensity, x[0], x[x.len() - 1]);
    if !(total > 0.0) {
        return Err(Error::domain("spectrum has zero integrated intensity"));
    }
    let (a, b) = band.field_interval();
    Ok((integrate_between(x, &spec.intensity, a, b) / total).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spiral_is_unit_and_upper() {
        for d in hemisphere_spiral(200) {
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
            assert!(d[2] >= 0.0);
        }
    }

    #[test]
    fn profiles_have_unit_area() {
        for shape in [Lineshape::Gaussian, Lineshape::Lorentzian] {
            let h = 0.01;
            let area: f64 = (-200_000..=200_000).map(|k| line_profile(shape, 2.0, k as f64 * h) * h).sum();
            let tol = if shape == Lineshape::Gaussian { 1e-9 } else { 2e-3 };
            assert!((area - 1.0).abs() < tol, "{shape:?} {area}");
        }
    }

    #[test]
    fn gaussian_fwhm() {
        let peak = line_profile(Lineshape::Gaussian, 3.0, 0.0);
        assert!((line_profile(Lineshape::Gaussian, 3.0, 1.5) / peak - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linewidth_chain() {
        assert!((linewidth_from_t2(50.0, 2.0).unwrap() * 1e3 - 7.145).abs() < 0.01);
        assert!((depth_resolution_angstrom(0.09, 0.5).unwrap() - 1.8).abs() < 1e-12);
        assert_eq!(depth_resolution_angstrom(0.0, 0.5).unwrap(), 0.0);
        assert!(matches!(depth_resolution_angstrom(0.1, 0.0), Err(Error::Domain(_))));
        assert!(linewidth_from_t2(0.0, 2.0).is_err());
    }

    #[test]
    fn fraction_windows() {
        let grid: Vec<f64> = (0..=2000).map(|k| 3000.0 + 0.1 * k as f64).collect();
        let intensity: Vec<f64> = grid.iter().map(|b| line_profile(Lineshape::Gaussian, 10.0, b - 3100.0)).collect();
        let spec = Spectrum {
            field_grid_g: grid,
            intensity,
            systems: vec!["t".into()],
        };
        let full = spectral_fraction(&spec, Band::Field { lo_g: 0.0, hi_g: 1e5 }).unwrap();
        assert!((full - 1.0).abs() < 1e-12);
        let empty = spectral_fraction(&spec, Band::Field { lo_g: 5000.0, hi_g: 6000.0 }).unwrap();
        assert_eq!(empty, 0.0);
        let half = spectral_fraction(&spec, Band::Field { lo_g: 0.0, hi_g: 3100.0 }).unwrap();
        assert!((half - 0.5).abs() < 1e-9);
    }

    #[test]
    fn frequency_band_maps_to_field() {
        let g = 2.0;
        let band = Band::Frequency {
            lo_ghz: 9.5,
            hi_ghz: 9.6,
            field_g: 3400.0,
            spectrum_ghz: 9.5,
            g,
        };
        let (a, b) = band.field_interval();
        assert!((b - 3400.0).abs() < 1e-9);
        assert!((3400.0 - a - 100.0 / (g * MU_B_OVER_H_MHZ_PER_G)).abs() < 1e-9);
    }

    #[test]
    fn zero_spectrum_is_domain_error() {
        let spec = Spectrum {
            field_grid_g: vec![1.0, 2.0],
            intensity: vec![0.0, 0.0],
            systems: vec![],
        };
        assert!(matches!(spectral_fraction(&spec, Band::Field { lo_g: 0.0, hi_g: 3.0 }), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_small_orientation_count() {
        let grid = [3300.0, 3400.0];
        assert!(powder_spectrum(&SpinSystem::trityl(), 9.369, &grid, 10).is_err());
    }
}
