//! TM bands of a triangular lattice of circular holes by plane-wave
//! expansion, gap detection, and the design arithmetic that turns a
//! normalized gap frequency into real dimensions.
//!
//! Lengths inside the solver are in units of the lattice constant; band
//! frequencies are reported as `a/λ`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhcLattice {
    pub lattice_constant_nm: f64,
    pub hole_radius_ratio: f64,
    pub eps_background_ratio: f64,
    pub eps_hole_ratio: f64,
}

impl Default for PhcLattice {
    fn default() -> Self {
        PhcLattice {
            lattice_constant_nm: 622.2,
            hole_radius_ratio: 0.29,
            eps_background_ratio: 6.25,
            eps_hole_ratio: 1.0,
        }
    }
}

impl PhcLattice {
    pub fn validate(&self) -> Result<()> {
        if !(self.hole_radius_ratio >= 0.0 && self.hole_radius_ratio < 0.5) {
            return Err(Error::argument("hole radius ratio must lie in [0, 0.5)"));
        }
        if !(self.eps_background_ratio >= 1.0 && self.eps_hole_ratio >= 1.0) {
            return Err(Error::argument("permittivities must be at least 1"));
        }
        if !(self.lattice_constant_nm > 0.0) {
            return Err(Error::argument("lattice constant must be positive"));
        }
        Ok(())
    }

    /// Area fraction of the holes.
    pub fn fill_factor(&self) -> f64 {
        TWO_PI / SQRT3 * self.hole_radius_ratio * self.hole_radius_ratio
    }
}

/// Reciprocal basis for `a1 = (1, 0)`, `a2 = (1/2, √3/2)`.
pub fn reciprocal_basis() -> ([f64; 2], [f64; 2]) {
    ([TWO_PI, -TWO_PI / SQRT3], [0.0, 2.0 * TWO_PI / SQRT3])
}

/// Reciprocal vectors `m·b1 + n·b2` for `m, n ∈ [-half, half]`.
pub fn reciprocal_grid(half: i32) -> Vec<[f64; 2]> {
    let (b1, b2) = reciprocal_basis();
    let mut out = Vec::with_capacity(((2 * half + 1) * (2 * half + 1)) as usize);
    for m in -half..=half {
        for n in -half..=half {
            let (m, n) = (m as f64, n as f64);
            out.push([m * b1[0] + n * b2[0], m * b1[1] + n * b2[1]]);
        }
    }
    out
}

/// Fourier coefficient of the permittivity for each reciprocal vector.
pub fn epsilon_fourier(lat: &PhcLattice, g_set: &[[f64; 2]]) -> Vec<f64> {
    let f = lat.fill_factor();
    let r = lat.hole_radius_ratio;
    let contrast = lat.eps_hole_ratio - lat.eps_background_ratio;
    g_set
        .iter()
        .map(|g| {
            let gr = (g[0] * g[0] + g[1] * g[1]).sqrt() * r;
            if gr < 1e-12 {
                if g[0] == 0.0 && g[1] == 0.0 {
                    f * lat.eps_hole_ratio + (1.0 - f) * lat.eps_background_ratio
                } else {
                    contrast * f
                }
            } else {
                contrast * 2.0 * f * libm::j1(gr) / gr
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KPoint {
    pub k: [f64; 2],
    /// High-symmetry label, empty for interior points.
    pub label: String,
    /// Index of the path segment; a shared vertex belongs to both.
    pub segments: Vec<usize>,
}

pub const SEGMENT_LABELS: [&str; 3] = ["Gamma-K", "K-M", "M-Gamma"];

pub fn high_symmetry_points() -> [( &'static str, [f64; 2]); 3] {
    let (b1, b2) = reciprocal_basis();
    let k = [(b1[0] + 2.0 * b2[0]) / 3.0, (b1[1] + 2.0 * b2[1]) / 3.0];
    let m = [0.5 * b2[0], 0.5 * b2[1]];
    [("Gamma", [0.0, 0.0]), ("K", k), ("M", m)]
}

/// Γ–K–M–Γ with `per_segment` intervals on each leg.
pub fn k_path(per_segment: usize) -> Result<Vec<KPoint>> {
    if per_segment < 1 {
        return Err(Error::argument("need at least one interval per segment"));
    }
    let hs = high_symmetry_points();
    let corners = [hs[0], hs[1], hs[2], hs[0]];
    let mut out = Vec::new();
    for s in 0..3 {
        let (la, a) = corners[s];
        let (_, b) = corners[s + 1];
        for i in 0..per_segment {
            let t = i as f64 / per_segment as f64;
            let mut segments = vec![s];
            let label = if i == 0 {
                if s > 0 {
                    segments.insert(0, s - 1);
                }
                la.to_string()
            } else {
                String::new()
            };
            out.push(KPoint {
                k: [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                label,
                segments,
            });
        }
    }
    out.push(KPoint {
        k: [0.0, 0.0],
        label: "Gamma".into(),
        segments: vec![2],
    });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandDiagram {
    pub k_path: Vec<KPoint>,
    /// `bands[i][n]`: band `n` at k-point `i`, as `a/λ`.
    pub bands: Vec<Vec<f64>>,
    pub n_planewaves: usize,
}

/// Map `k` to the equivalent point closest to Γ.
fn fold_to_first_zone(k: [f64; 2]) -> [f64; 2] {
    let mut best = k;
    let mut best_len = k[0] * k[0] + k[1] * k[1];
    for g in reciprocal_grid(2) {
        let q = [k[0] - g[0], k[1] - g[1]];
        let len = q[0] * q[0] + q[1] * q[1];
        if len < best_len - 1e-12 {
            best = q;
            best_len = len;
        }
    }
    best
}

pub const MIN_PLANEWAVES: usize = 169;
pub const DEFAULT_PLANEWAVES: usize = 441;
pub const DEFAULT_BANDS: usize = 10;

/// Largest odd grid side whose square does not exceed `n_pw`.
pub fn grid_side(n_pw: usize) -> usize {
    let mut n = (n_pw as f64).sqrt().floor() as usize;
    if n % 2 == 0 {
        n -= 1;
    }
    n
}

/// TM bands along `path`, inverse-permittivity formulation.
pub fn tm_bands(lat: &PhcLattice, path: &[KPoint], n_pw: usize, n_bands: usize) -> Result<BandDiagram> {
    lat.validate()?;
    if n_pw < MIN_PLANEWAVES {
        return Err(Error::argument(format!("need at least {MIN_PLANEWAVES} plane waves, got {n_pw}")));
    }
    let side = grid_side(n_pw);
    let half = (side / 2) as i32;
    let gs = reciprocal_grid(half);
    let n = gs.len();
    if n_bands == 0 || n_bands > n {
        return Err(Error::argument(format!("band count must lie in 1..={n}")));
    }
    let (b1, b2) = reciprocal_basis();
    // ε(G_i − G_j) depends on the index difference only.
    let idx = |m: i32, nn: i32| [m as f64 * b1[0] + nn as f64 * b2[0], m as f64 * b1[1] + nn as f64 * b2[1]];
    let span = 2 * half;
    let diffs: Vec<[f64; 2]> = (-span..=span).flat_map(|m| (-span..=span).map(move |nn| idx(m, nn))).collect();
    let eps_diff = epsilon_fourier(lat, &diffs);
    let width = (2 * span + 1) as i32;
    let mn: Vec<(i32, i32)> = (-half..=half).flat_map(|m| (-half..=half).map(move |nn| (m, nn))).collect();
    let eps = DMatrix::from_fn(n, n, |i, j| {
        let dm = mn[i].0 - mn[j].0 + span;
        let dn = mn[i].1 - mn[j].1 + span;
        eps_diff[(dm * width + dn) as usize]
    });
    let inv = eps
        .try_inverse()
        .ok_or_else(|| Error::numerical("permittivity matrix is singular"))?;

    let bands = path
        .par_iter()
        .enumerate()
        .map(|(ik, kp)| -> Result<Vec<f64>> {
            let k = fold_to_first_zone(kp.k);
            let kg: Vec<f64> = gs
                .iter()
                .map(|g| ((k[0] + g[0]).powi(2) + (k[1] + g[1]).powi(2)).sqrt())
                .collect();
            let h = DMatrix::from_fn(n, n, |i, j| kg[i] * inv[(i, j)] * kg[j]);
            let h = (&h + h.transpose()) * 0.5;
            let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
            if ev.iter().any(|v| !v.is_finite()) {
                return Err(Error::numerical(format!("eigen-solver failed at k-point {ik} ({:?})", kp.k)));
            }
            ev.sort_by(f64::total_cmp);
            Ok(ev
                .into_iter()
                .take(n_bands)
                .map(|e| e.max(0.0).sqrt() / TWO_PI)
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BandDiagram {
        k_path: path.to_vec(),
        bands,
        n_planewaves: n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    /// `complete`, or the segment label for a direction-partial gap.
    pub kind: String,
    /// Index of the band below the gap (1-based).
    pub below_band: usize,
    pub lower_edge: f64,
    pub upper_edge: f64,
    pub center: f64,
    pub width: f64,
}

/// Gaps narrower than this are degeneracy artefacts.
pub const MIN_GAP_WIDTH: f64 = 1e-4;
pub const MAX_GAP_FREQUENCY: f64 = 0.8;

/// Complete gaps (whole path) or partial gaps on one named segment.
pub fn find_gaps(diag: &BandDiagram, segment: Option<&str>) -> Result<Vec<GapReport>> {
    let (rows, kind): (Vec<usize>, String) = match segment {
        None => ((0..diag.k_path.len()).collect(), "complete".into()),
        Some(name) => {
            let s = SEGMENT_LABELS
                .iter()
                .position(|l| l.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::argument(format!("unknown segment '{name}', expected one of {SEGMENT_LABELS:?}")))?;
            (
                diag.k_path
                    .iter()
                    .enumerate()
                    .filter(|(_, kp)| kp.segments.contains(&s))
                    .map(|(i, _)| i)
                    .collect(),
                SEGMENT_LABELS[s].into(),
            )
        }
    };
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let n_bands = diag.bands[0].len();
    let mut out = Vec::new();
    for b in 0..n_bands.saturating_sub(1) {
        let lower = rows.iter().map(|&i| diag.bands[i][b]).fold(f64::NEG_INFINITY, f64::max);
        let upper = rows.iter().map(|&i| diag.bands[i][b + 1]).fold(f64::INFINITY, f64::min);
        let width = upper - lower;
        let center = 0.5 * (upper + lower);
        if width > MIN_GAP_WIDTH && center < MAX_GAP_FREQUENCY {
            out.push(GapReport {
                kind: kind.clone(),
                below_band: b + 1,
                lower_edge: lower,
                upper_edge: upper,
                center,
                width,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeDesign {
    pub normalized_frequency: f64,
    pub lattice_constant_nm: f64,
    pub hole_diameter_nm: f64,
}

pub fn lattice_from_zpl(zpl_nm: f64, normalized_frequency: f64, r_over_a: f64) -> Result<LatticeDesign> {
    if !(zpl_nm > 0.0 && normalized_frequency > 0.0 && r_over_a > 0.0) {
        return Err(Error::argument("wavelength, frequency and radius ratio must be positive"));
    }
    let a = zpl_nm * normalized_frequency;
    Ok(LatticeDesign {
        normalized_frequency,
        lattice_constant_nm: a,
        hole_diameter_nm: 2.0 * r_over_a * a,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NanobeamWidth {
    pub order: u32,
    pub width_nm: f64,
    pub center_antinode: bool,
}

/// Standing-wave widths `m·λ/2`; odd orders have an antinode at the centre.
pub fn nanobeam_widths(zpl_nm: f64, max_order: u32) -> Result<Vec<NanobeamWidth>> {
    if max_order < 1 || !(zpl_nm > 0.0) {
        return Err(Error::argument("need a positive wavelength and at least one order"));
    }
    Ok((1..=max_order)
        .map(|m| NanobeamWidth {
            order: m,
            width_nm: m as f64 * zpl_nm / 2.0,
            center_antinode: m % 2 == 1,
        })
        .collect())
}

/// Narrowest width with a central antinode that is wider than `min_width_nm`.
pub fn select_nanobeam(zpl_nm: f64, max_order: u32, min_width_nm: f64) -> Result<Option<NanobeamWidth>> {
    Ok(nanobeam_widths(zpl_nm, max_order)?
        .into_iter()
        .find(|w| w.center_antinode && w.width_nm > min_width_nm))
}
