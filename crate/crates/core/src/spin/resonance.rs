use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::Serialize;

use super::hamiltonian::{hamiltonian_parts, product_operators, CMatrix, HamiltonianParts};
use super::SpinSystem;
use crate::error::{Error, Result};
use crate::magnetostatics::EffectiveShift;
use crate::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumLine {
    pub resonance_field_g: f64,
    pub amplitude: f64,
    /// Sorted level indices `(lower, upper)` at the resonance field.
    pub transition: (usize, usize),
    pub orientation: Vec3,
}

/// Swept-field window and bracketing step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldWindow {
    pub lo_g: f64,
    pub hi_g: f64,
    pub step_g: f64,
}

impl Default for FieldWindow {
    fn default() -> Self {
        FieldWindow {
            lo_g: 1.0,
            hi_g: 15_000.0,
            step_g: 1.0,
        }
    }
}

/// Transitions weaker than this are treated as forbidden.
const MIN_AMPLITUDE: f64 = 1e-6;
/// Bisection stops once the bracket is this narrow.
const FIELD_TOL_G: f64 = 1e-6;

fn normalize(v: Vec3) -> Result<Vec3> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::argument("orientation must be a non-zero vector"));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

/// Two unit vectors completing `n` to an orthonormal triad.
fn transverse_pair(n: Vec3) -> (Vec3, Vec3) {
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let cross = |a: Vec3, b: Vec3| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let e1 = cross(n, helper);
    let l = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    let e1 = [e1[0] / l, e1[1] / l, e1[2] / l];
    let e2 = cross(n, e1);
    (e1, e2)
}

struct Sweep<'a> {
    parts: &'a HamiltonianParts,
    dir: Vec3,
}

impl Sweep<'_> {
    fn hamiltonian(&self, b: f64) -> CMatrix {
        self.parts.at([b * self.dir[0], b * self.dir[1], b * self.dir[2]])
    }

    fn levels(&self, b: f64) -> Vec<f64> {
        let mut e: Vec<f64> = self.hamiltonian(b).symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Resonance lines with the field along `orientation` (system frame) for
/// the full default window [1, 15000] G.
pub fn resonance_fields(sys: &SpinSystem, freq_ghz: f64, orientation: Vec3) -> Result<Vec<SpectrumLine>> {
    resonance_fields_in(sys, freq_ghz, orientation, FieldWindow::default(), sys.d_mhz)
}

/// Resonance search restricted to `window`, with an explicit zero-field
/// splitting (used when sampling a D distribution).
pub fn resonance_fields_in(
    sys: &SpinSystem,
    freq_ghz: f64,
    orientation: Vec3,
    window: FieldWindow,
    d_mhz: f64,
) -> Result<Vec<SpectrumLine>> {
    sys.validate()?;
    if !(freq_ghz > 0.0) {
        return Err(Error::argument(format!("microwave frequency must be positive, got {freq_ghz}")));
    }
    if !(window.hi_g > window.lo_g && window.step_g > 0.0) {
        return Err(Error::argument("field window must be an increasing interval with positive step"));
    }
    let dir = normalize(orientation)?;
    let parts = hamiltonian_parts(sys, d_mhz);
    let sweep = Sweep { parts: &parts, dir };
    let quantum = freq_ghz * 1e3;
    let dim = sys.dimension();
    let ops = product_operators(sys);
    let (e1, e2) = transverse_pair(dir);
    let project = |v: Vec3| -> CMatrix {
        &ops.electron[0] * Complex64::new(v[0], 0.0)
            + &ops.electron[1] * Complex64::new(v[1], 0.0)
            + &ops.electron[2] * Complex64::new(v[2], 0.0)
    };
    let (s1, s2) = (project(e1), project(e2));

    let n_steps = ((window.hi_g - window.lo_g) / window.step_g).ceil() as usize;
    let field_at = |k: usize| (window.lo_g + window.step_g * k as f64).min(window.hi_g);
    let mut prev = sweep.levels(field_at(0));
    let mut lines = Vec::new();
    for k in 1..=n_steps {
        let b_hi = field_at(k);
        let cur = sweep.levels(b_hi);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let g0 = prev[j] - prev[i] - quantum;
                let g1 = cur[j] - cur[i] - quantum;
                if g0 == 0.0 || g0.signum() == g1.signum() {
                    continue;
                }
                let b_res = bisect(&sweep, field_at(k - 1), b_hi, i, j, quantum, g0);
                let eig = SymmetricEigen::new(sweep.hamiltonian(b_res));
                let mut order: Vec<usize> = (0..dim).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
                let vi = eig.eigenvectors.column(order[i]);
                let vj = eig.eigenvectors.column(order[j]);
                let m1 = (vi.adjoint() * &s1 * vj)[(0, 0)].norm_sqr();
                let m2 = (vi.adjoint() * &s2 * vj)[(0, 0)].norm_sqr();
                let amplitude = 0.5 * (m1 + m2);
                if amplitude >= MIN_AMPLITUDE {
                    lines.push(SpectrumLine {
                        resonance_field_g: b_res,
                        amplitude,
                        transition: (i, j),
                        orientation: dir,
                    });
                }
            }
        }
        prev = cur;
    }
    lines.sort_by(|a, b| a.resonance_field_g.total_cmp(&b.resonance_field_g));
    Ok(lines)
}

fn bisect(sweep: &Sweep<'_>, mut lo: f64, mut hi: f64, i: usize, j: usize, quantum: f64, g_lo: f64) -> f64 {
    let sign_lo = g_lo.signum();
    while hi - lo > FIELD_TOL_G {
        let mid = 0.5 * (lo + hi);
        let e = sweep.levels(mid);
        let g = e[j] - e[i] - quantum;
        if g == 0.0 {
            return mid;
        }
        if g.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Lines of a spin sitting in a local dipolar field: the swept external
/// field at resonance is lower by the local offset.
pub fn gradient_shifted_lines(
    sys: &SpinSystem,
    freq_ghz: f64,
    orientation: Vec3,
    shift: &EffectiveShift,
) -> Result<Vec<SpectrumLine>> {
    let mut lines = resonance_fields(sys, freq_ghz, orientation)?;
    for l in &mut lines {
        l.resonance_field_g -= shift.total_g;
    }
    Ok(lines)
}

/// Eigenvalue gap at a given field for a transition, used in tests to
/// verify bisection output.
#[cfg(test)]
pub(crate) fn gap_at(sys: &SpinSystem, orientation: Vec3, b: f64, transition: (usize, usize)) -> f64 {
    let parts = hamiltonian_parts(sys, sys.d_mhz);
    let sweep = Sweep {
        parts: &parts,
        dir: normalize(orientation).unwrap(),
    };
    let e = sweep.levels(b);
    e[transition.1] - e[transition.0]
}
