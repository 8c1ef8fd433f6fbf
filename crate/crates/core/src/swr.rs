//! One-dimensional spin-wave resonance model of the stripe.
//!
//! Modes are quantized across the width (z). Each cell carries the local
//! Kittel frequency `γ·sqrt(B_int·(B_int + B_sat))` built from the static
//! internal field, and neighbouring cells are coupled by an exchange term
//! `−γ·D·d²/dz²`. The profile is mirror symmetric, so even and odd modes
//! are diagonalized separately; odd modes have zero net dynamic moment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::magnetostatics::{charge_sheet_field, StripeGeometry};
use nalgebra::{DMatrix, SymmetricEigen};

/// Boundary condition on the dynamic magnetization at `z = ±W/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Vanishing amplitude at the edges.
    Pinned,
    /// Vanishing normal derivative at the edges.
    #[default]
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwrModel {
    #[serde(skip)]
    pub geom: StripeGeometry,
    #[serde(rename = "exchange_D_G_nm2")]
    pub exchange_d_g_nm2: f64,
    pub n_grid_count: usize,
    #[serde(rename = "gyromag_MHz_per_G")]
    pub gyromag_mhz_per_g: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl Default for SwrModel {
    fn default() -> Self {
        SwrModel {
            geom: StripeGeometry::default(),
            // YIG: 2A/M_s with A = 3.7 pJ/m and 4πM_s = 1.7 kG.
            exchange_d_g_nm2: 5.4e5,
            n_grid_count: 256,
            gyromag_mhz_per_g: 2.8,
            boundary: Boundary::Free,
        }
    }
}

impl SwrModel {
    pub fn validate(&self) -> Result<()> {
        self.geom.validate()?;
        if self.n_grid_count < 64 || self.n_grid_count % 2 != 0 {
            return Err(Error::argument(format!(
                "n_grid must be an even count >= 64, got {}",
                self.n_grid_count
            )));
        }
        if !(self.exchange_d_g_nm2 > 0.0) {
            return Err(Error::argument("exchange stiffness must be positive"));
        }
        if !(self.gyromag_mhz_per_g > 0.0) {
            return Err(Error::argument("gyromagnetic ratio must be positive"));
        }
        Ok(())
    }

    fn cell_width(&self) -> f64 {
        self.geom.width_nm / self.n_grid_count as f64
    }
}

/// Static internal field across the width on the stripe mid-height (x = 0).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InternalProfile {
    pub z_nm: Vec<f64>,
    pub b_int_g: Vec<f64>,
    /// False when the internal field is non-positive somewhere, i.e. the
    /// applied field does not saturate the stripe along z.
    pub saturated: bool,
}

/// Demagnetizing factor `N_zz` at mid-height, position `z` relative to the
/// stripe centre.
pub fn demag_nzz(geom: &StripeGeometry, z_nm: f64) -> f64 {
    -charge_sheet_field(geom, 0.0, z_nm).1 / geom.b_sat_g
}

/// `B_int(z) = B0 − N_zz(z)·B_sat` on cell centres, `n_grid` cells.
pub fn internal_field_profile(geom: &StripeGeometry, b0_g: f64, n_grid: usize) -> Result<InternalProfile> {
    geom.validate()?;
    if n_grid == 0 {
        return Err(Error::argument("internal field profile needs at least one cell"));
    }
    let h = geom.width_nm / n_grid as f64;
    let z_nm: Vec<f64> = (0..n_grid)
        .map(|i| -0.5 * geom.width_nm + h * (i as f64 + 0.5))
        .collect();
    let b_int_g: Vec<f64> = z_nm
        .iter()
        .map(|&z| b0_g - demag_nzz(geom, z) * geom.b_sat_g)
        .collect();
    let saturated = b_int_g.iter().all(|&b| b > 0.0);
    Ok(InternalProfile {
        z_nm,
        b_int_g,
        saturated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Parity {
    Even,
    Odd,
}

/// Precomputed per-cell demag factors so that scanning B0 only rebuilds
/// the diagonal.
struct Operator<'a> {
    model: &'a SwrModel,
    /// `N_zz` on the positive half of the grid, ordered from the centre out.
    nzz_half: Vec<f64>,
    z_half: Vec<f64>,
}

impl<'a> Operator<'a> {
    fn new(model: &'a SwrModel) -> Result<Self> {
        model.validate()?;
        let n = model.n_grid_count;
        let h = model.cell_width();
        let z_half: Vec<f64> = (0..n / 2).map(|j| h * (j as f64 + 0.5)).collect();
        let nzz_half = z_half.iter().map(|&z| demag_nzz(&model.geom, z)).collect();
        Ok(Operator {
            model,
            nzz_half,
            z_half,
        })
    }

    fn local_freq(&self, b0_g: f64) -> Vec<f64> {
        let bs = self.model.geom.b_sat_g;
        let gamma = self.model.gyromag_mhz_per_g;
        self.nzz_half
            .iter()
            .map(|&n| {
                let b = (b0_g - n * bs).max(0.0);
                gamma * (b * (b + bs)).sqrt()
            })
            .collect()
    }

    fn matrix(&self, b0_g: f64, parity: Parity) -> DMatrix<f64> {
        let m = self.nzz_half.len();
        let h = self.model.cell_width();
        let k = self.model.gyromag_mhz_per_g * self.model.exchange_d_g_nm2 / (h * h);
        let w = self.local_freq(b0_g);
        let mut a = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            a[(j, j)] = w[j] + 2.0 * k;
            if j + 1 < m {
                a[(j, j + 1)] = -k;
                a[(j + 1, j)] = -k;
            }
        }
        // Mirror cell across z = 0.
        a[(0, 0)] += match parity {
            Parity::Even => -k,
            Parity::Odd => k,
        };
        // Ghost cell beyond the edge.
        a[(m - 1, m - 1)] += match self.model.boundary {
            Boundary::Free => -k,
            Boundary::Pinned => k,
        };
        a
    }

    /// Ascending eigenfrequencies only.
    fn frequencies(&self, b0_g: f64, parity: Parity) -> Vec<f64> {
        let mut f: Vec<f64> = self.matrix(b0_g, parity).symmetric_eigenvalues().iter().copied().collect();
        f.sort_by(f64::total_cmp);
        f
    }

    /// Half-grid mode vectors (z > 0 side), columns in ascending frequency.
    fn mode_vectors(&self, b0_g: f64, parity: Parity) -> DMatrix<f64> {
        let m = self.nzz_half.len();
        let eig = SymmetricEigen::new(self.matrix(b0_g, parity));
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])])
    }

    fn all_freqs_sorted(&self, b0_g: f64) -> Vec<f64> {
        let mut f = self.frequencies(b0_g, Parity::Even);
        f.extend(self.frequencies(b0_g, Parity::Odd));
        f.sort_by(f64::total_cmp);
        f
    }
}

/// Eigenfrequencies (GHz, ascending) of the full operator at one applied field.
pub fn mode_frequencies_ghz(model: &SwrModel, b0_g: f64) -> Result<Vec<f64>> {
    let op = Operator::new(model)?;
    Ok(op.all_freqs_sorted(b0_g).into_iter().map(|f| f * 1e-3).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SwrLine {
    /// Position of the mode in the ascending frequency ladder at resonance.
    pub mode_index: usize,
    pub resonance_field_g: f64,
    /// `|∫ψ dz|²` for unit-normalized ψ, divided by W.
    pub oscillator_strength: f64,
    pub edge_localized: bool,
    /// Fraction of `|ψ|²` within W/8 of either edge.
    pub edge_weight: f64,
}

/// Field-scan parameters for [`swr_lines`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldScan {
    #[serde(rename = "B0_min_G")]
    pub b0_min_g: f64,
    #[serde(rename = "B0_max_G")]
    pub b0_max_g: f64,
    #[serde(rename = "B0_step_G")]
    pub b0_step_g: f64,
}

impl Default for FieldScan {
    fn default() -> Self {
        FieldScan {
            b0_min_g: 1000.0,
            b0_max_g: 5000.0,
            b0_step_g: 10.0,
        }
    }
}

impl FieldScan {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.b0_min_g > 0.0 && self.b0_max_g > self.b0_min_g && self.b0_step_g > 0.0) {
            return Err(Error::argument("field scan must be a positive, increasing interval"));
        }
        let n = ((self.b0_max_g - self.b0_min_g) / self.b0_step_g).ceil() as usize;
        Ok((0..=n)
            .map(|i| (self.b0_min_g + self.b0_step_g * i as f64).min(self.b0_max_g))
            .collect())
    }
}

/// SWR lines crossing `drive_freq_ghz` inside the scan. Each crossing found
/// on the scan grid is refined by bisection to 1 mG.
pub fn swr_lines(model: &SwrModel, drive_freq_ghz: f64, scan: &FieldScan) -> Result<Vec<SwrLine>> {
    let op = Operator::new(model)?;
    let grid = scan.grid()?;
    let drive = drive_freq_ghz * 1e3;
    let mut lines = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let sets: Vec<Vec<f64>> = grid.iter().map(|&b| op.frequencies(b, parity)).collect();
        let n_modes = sets[0].len();
        for mode in 0..n_modes {
            for w in 0..grid.len() - 1 {
                let f_lo = sets[w][mode] - drive;
                let f_hi = sets[w + 1][mode] - drive;
                if f_lo > 0.0 || f_hi <= 0.0 {
                    continue;
                }
                let (mut lo, mut hi) = (grid[w], grid[w + 1]);
                while hi - lo > 1e-3 {
                    let mid = 0.5 * (lo + hi);
                    if op.frequencies(mid, parity)[mode] > drive {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let b_res = 0.5 * (lo + hi);
                lines.push(describe_line(&op, b_res, parity, mode, drive));
            }
        }
    }
    lines.sort_by(|a, b| a.resonance_field_g.total_cmp(&b.resonance_field_g));
    Ok(lines)
}

fn describe_line(op: &Operator<'_>, b_res: f64, parity: Parity, mode: usize, drive_mhz: f64) -> SwrLine {
    let vectors = op.mode_vectors(b_res, parity);
    let v = vectors.column(mode);
    let m = v.len();
    // The half-grid vector has unit norm; the full-grid mode is v/√2 on
    // each side.
    let edge_cut = 0.5 * op.model.geom.width_nm - op.model.geom.width_nm / 8.0;
    let edge_weight: f64 = (0..m)
        .filter(|&j| op.z_half[j] > edge_cut)
        .map(|j| v[j] * v[j])
        .sum();
    let oscillator_strength = match parity {
        Parity::Odd => 0.0,
        // (Σ_full ψ)² / n with ψ_full = v/√2 mirrored: (2·Σv/√2)² / (2m).
        Parity::Even => {
            let s: f64 = v.iter().sum();
            (s * s / m as f64).min(1.0)
        }
    };
    let mode_index = op
        .all_freqs_sorted(b_res)
        .iter()
        .filter(|&&f| f < drive_mhz - 1e-9)
        .count();
    SwrLine {
        mode_index,
        resonance_field_g: b_res,
        oscillator_strength,
        edge_localized: edge_weight > 0.6,
        edge_weight,
    }
}

/// One row of the dispersion map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DispersionPoint {
    pub b0_g: f64,
    pub mode: usize,
    pub freq_ghz: f64,
}

/// Lowest `n_modes` eigenfrequencies at each scan field.
pub fn dispersion_map(model: &SwrModel, scan: &FieldScan, n_modes: usize) -> Result<Vec<DispersionPoint>> {
    let op = Operator::new(model)?;
    let mut out = Vec::new();
    for b in scan.grid()? {
        for (mode, f) in op.all_freqs_sorted(b).into_iter().take(n_modes).enumerate() {
            out.push(DispersionPoint {
                b0_g: b,
                mode,
                freq_ghz: f * 1e-3,
            });
        }
    }
    Ok(out)
}

/// Closed-form uniform-mode (Kittel) field for `B(B + B_sat) = (f/γ)²`.
pub fn kittel_field_g(drive_freq_ghz: f64, b_sat_g: f64, gyromag_mhz_per_g: f64) -> f64 {
    let r = drive_freq_ghz * 1e3 / gyromag_mhz_per_g;
    0.5 * (-b_sat_g + (b_sat_g * b_sat_g + 4.0 * r * r).sqrt())
}

/// An EPR line as seen by the overlap check: centre field and full width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EprMarker {
    pub field_g: f64,
    pub linewidth_g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapReport {
    /// Distance minus half the EPR linewidth, for every (SWR, EPR) pair,
    /// row-major in SWR order.
    pub distances_g: Vec<f64>,
    pub min_distance_g: f64,
    pub pass: bool,
}

/// SWR lines are treated as zero-width since the model has no damping.
pub fn overlap_check(swr: &[SwrLine], epr: &[EprMarker]) -> Result<OverlapReport> {
    if swr.is_empty() || epr.is_empty() {
        return Err(Error::argument("overlap check needs at least one SWR and one EPR line"));
    }
    let distances_g: Vec<f64> = swr
        .iter()
        .flat_map(|s| {
            epr.iter()
                .map(move |e| (s.resonance_field_g - e.field_g).abs() - 0.5 * e.linewidth_g)
        })
        .collect();
    let min_distance_g = distances_g.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OverlapReport {
        distances_g,
        min_distance_g,
        pass: min_distance_g >= 0.0,
    })
}
