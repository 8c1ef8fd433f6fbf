//! ODPELDOR/DEER signals: a single probe-target pair, and a probe facing a
//! random 2D plane of target spins.
//!
//! Probe sits at the origin, the target plane is `x = dx`. For a Poisson
//! bath of areal density `C` the bath average of the pairwise product is
//! `V = exp(-C·pB·k)` with the plane kernel
//! `k(dx, td) = ∫∫ (1 − cos 2πν td) ρ dρ dφ`.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::dipolar_prefactor_mhz_nm3;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::Vec3;

pub const IN_PLANE: Vec3 = [0.0, 0.0, 1.0];
pub const PLANE_NORMAL: Vec3 = [1.0, 0.0, 0.0];

fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn unit(v: Vec3) -> Result<Vec3> {
    let n = norm(v);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::argument("B0 direction must be a non-zero vector"));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

/// Secular dipolar coupling in MHz for a separation `r` (nm).
pub fn dipolar_frequency(r: Vec3, b0_direction: Vec3, g1: f64, g2: f64) -> Result<f64> {
    let d = norm(r);
    if d == 0.0 {
        return Err(Error::domain("coincident spins have no dipolar coupling"));
    }
    let b = unit(b0_direction)?;
    let cos = (r[0] * b[0] + r[1] * b[1] + r[2] * b[2]) / d;
    Ok(dipolar_prefactor_mhz_nm3() * g1 * g2 * (1.0 - 3.0 * cos * cos) / (d * d * d))
}

/// Two-spin signal. Not clipped: a full flip at half period gives −1.
pub fn pair_signal(td_us: f64, nu_mhz: f64, pump_flip: f64) -> f64 {
    1.0 - pump_flip * (1.0 - (2.0 * std::f64::consts::PI * nu_mhz * td_us).cos())
}

/// Concentration for a mean nearest-neighbour spacing `s`, `C = 1/s²`.
pub fn concentration_from_spacing(spacing_nm: f64) -> f64 {
    1.0 / (spacing_nm * spacing_nm)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeerScenario {
    pub dx_nm: f64,
    #[serde(rename = "C2D_per_nm2")]
    pub c2d_per_nm2: f64,
    /// Probability that the pump pulse flips a target spin.
    pub pump_flip_frac: f64,
    #[serde(rename = "B0_direction_unitvec")]
    pub b0_direction: Vec3,
    pub g_probe_factor: f64,
    pub g_target_factor: f64,
    pub t0_us: f64,
    pub td_grid_us: Vec<f64>,
}

impl Default for DeerScenario {
    fn default() -> Self {
        DeerScenario {
            dx_nm: 6.0,
            c2d_per_nm2: concentration_from_spacing(7.0),
            pump_flip_frac: 0.5,
            b0_direction: IN_PLANE,
            g_probe_factor: 2.0028,
            g_target_factor: 2.0026,
            t0_us: 6.25,
            td_grid_us: (0..=50).map(|k| 0.25 * k as f64).collect(),
        }
    }
}

impl DeerScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.dx_nm > 0.0) {
            return Err(Error::argument("dx must be positive"));
        }
        if !(self.c2d_per_nm2 >= 0.0) {
            return Err(Error::argument("C2D must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.pump_flip_frac) {
            return Err(Error::argument("pump flip probability must lie in [0, 1]"));
        }
        if !(self.g_probe_factor > 0.0 && self.g_target_factor > 0.0) {
            return Err(Error::argument("g factors must be positive"));
        }
        unit(self.b0_direction)?;
        for &td in &self.td_grid_us {
            if !(td >= 0.0) {
                return Err(Error::argument(format!("negative delay {td} us")));
            }
            if td > 2.0 * self.t0_us {
                return Err(Error::argument(format!(
                    "delay {td} us exceeds 2·t0 = {} us",
                    2.0 * self.t0_us
                )));
            }
        }
        Ok(())
    }

    fn geometry(&self) -> Result<PlaneGeometry> {
        Ok(PlaneGeometry {
            dx_nm: self.dx_nm,
            b0: unit(self.b0_direction)?,
            coupling: dipolar_prefactor_mhz_nm3() * self.g_probe_factor * self.g_target_factor,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeerTrace {
    pub td_us: Vec<f64>,
    pub v: Vec<f64>,
}

/// Quadrature settings for the plane kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelQuadrature {
    pub azimuth_count: usize,
    pub radial_nodes: usize,
    pub first_shell_nm: f64,
    /// Outer/inner radius of consecutive shells.
    pub shell_ratio: f64,
    pub rel_tol: f64,
    pub max_shells: usize,
}

impl Default for KernelQuadrature {
    fn default() -> Self {
        KernelQuadrature {
            azimuth_count: 64,
            radial_nodes: 8,
            first_shell_nm: 0.1,
            shell_ratio: 1.2,
            rel_tol: 1e-6,
            max_shells: 400,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct PlaneGeometry {
    dx_nm: f64,
    b0: Vec3,
    /// Dipolar prefactor times both g factors, MHz·nm³.
    coupling: f64,
}

impl PlaneGeometry {
    fn nu(&self, rho: f64, cos_phi: f64, sin_phi: f64) -> f64 {
        let r = [self.dx_nm, rho * cos_phi, rho * sin_phi];
        let d2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
        let d = d2.sqrt();
        let c = (r[0] * self.b0[0] + r[1] * self.b0[1] + r[2] * self.b0[2]) / d;
        self.coupling * (1.0 - 3.0 * c * c) / (d2 * d)
    }
}

/// One annulus of the radial quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Shell {
    pub inner_nm: f64,
    pub outer_nm: f64,
    /// `∫∫ (1 − cos 2πν td) ρ dρ dφ` over the annulus.
    pub integral_nm2: f64,
}

impl Shell {
    pub fn area_nm2(&self) -> f64 {
        std::f64::consts::PI * (self.outer_nm * self.outer_nm - self.inner_nm * self.inner_nm)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlaneKernel {
    pub k_nm2: f64,
    pub truncation_radius_nm: f64,
    pub shells: Vec<Shell>,
}

fn plane_kernel_with(geo: &PlaneGeometry, td_us: f64, q: &KernelQuadrature) -> Result<PlaneKernel> {
    if td_us == 0.0 {
        return Ok(PlaneKernel {
            k_nm2: 0.0,
            truncation_radius_nm: 3.0 * geo.dx_nm,
            shells: Vec::new(),
        });
    }
    let gl = gauss_legendre(q.radial_nodes);
    let n_az = q.azimuth_count;
    let dphi = 2.0 * std::f64::consts::PI / n_az as f64;
    let trig: Vec<(f64, f64)> = (0..n_az).map(|j| ((j as f64 * dphi).cos(), (j as f64 * dphi).sin())).collect();
    let omega_t = 2.0 * std::f64::consts::PI * td_us;

    let mut shells = Vec::new();
    let mut total = 0.0;
    let mut inner = 0.0;
    let mut outer = q.first_shell_nm;
    for _ in 0..q.max_shells {
        let half = 0.5 * (outer - inner);
        let mid = 0.5 * (outer + inner);
        let mut integral = 0.0;
        for &(x, w) in &gl {
            let rho = mid + half * x;
            let ring: f64 = trig
                .iter()
                .map(|&(c, s)| 1.0 - (omega_t * geo.nu(rho, c, s)).cos())
                .sum::<f64>()
                * dphi;
            integral += w * half * rho * ring;
        }
        total += integral;
        shells.push(Shell {
            inner_nm: inner,
            outer_nm: outer,
            integral_nm2: integral,
        });
        if outer > 3.0 * geo.dx_nm && integral <= q.rel_tol * total {
            return Ok(PlaneKernel {
                k_nm2: total,
                truncation_radius_nm: outer,
                shells,
            });
        }
        inner = outer;
        outer *= q.shell_ratio;
    }
    let last = shells.last().map(|s| s.integral_nm2 / total).unwrap_or(f64::NAN);
    Err(Error::numerical(format!(
        "plane kernel not converged after {} shells (radius {inner:.3e} nm, last shell fraction {last:.3e}, dx {} nm, td {td_us} us)",
        q.max_shells, geo.dx_nm
    )))
}

/// Plane kernel `k(dx, td)` in nm² with the default quadrature.
pub fn plane_kernel(sc: &DeerScenario, td_us: f64) -> Result<PlaneKernel> {
    plane_kernel_with(&sc.geometry()?, td_us, &KernelQuadrature::default())
}

pub fn plane_kernel_quadrature(sc: &DeerScenario, td_us: f64, q: &KernelQuadrature) -> Result<PlaneKernel> {
    plane_kernel_with(&sc.geometry()?, td_us, q)
}

/// Bath-averaged signal of a probe facing the target plane.
pub fn plane_signal(sc: &DeerScenario, td_us: f64) -> Result<f64> {
    if !(td_us >= 0.0) {
        return Err(Error::argument("delay must be non-negative"));
    }
    if sc.c2d_per_nm2 == 0.0 || sc.pump_flip_frac == 0.0 {
        return Ok(1.0);
    }
    let k = plane_kernel(sc, td_us)?.k_nm2;
    Ok((-sc.c2d_per_nm2 * sc.pump_flip_frac * k).exp())
}

/// Shell-factorized product form: each annulus contributes the linearized
/// factor `1 − C·pB·k_shell`, where `k_shell` is its share of the kernel.
pub fn plane_signal_shell_product(sc: &DeerScenario, td_us: f64) -> Result<f64> {
    let kernel = plane_kernel(sc, td_us)?;
    let mut log_v = 0.0;
    for s in &kernel.shells {
        let factor = 1.0 - sc.c2d_per_nm2 * sc.pump_flip_frac * s.integral_nm2;
        if factor <= 0.0 {
            return Ok(0.0);
        }
        log_v += factor.ln();
    }
    Ok(log_v.exp())
}

pub fn time_trace(sc: &DeerScenario) -> Result<DeerTrace> {
    sc.validate()?;
    if sc.td_grid_us.is_empty() {
        return Err(Error::argument("delay grid is empty"));
    }
    if sc.td_grid_us.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::argument("delay grid must be sorted"));
    }
    let v = sc
        .td_grid_us
        .par_iter()
        .map(|&td| plane_signal(sc, td))
        .collect::<Result<Vec<_>>>()?;
    Ok(DeerTrace {
        td_us: sc.td_grid_us.clone(),
        v,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub v: f64,
    pub std_error: f64,
    pub disc_radius_nm: f64,
    pub mean_spin_count: f64,
}

/// Monte-Carlo bath average: Poisson number of targets uniformly placed in
/// a disc of the kernel truncation radius, exact pairwise product per
/// configuration. Configuration `i` draws from its own ChaCha stream, so
/// the estimate does not depend on the thread schedule.
pub fn mc_oracle(sc: &DeerScenario, td_us: f64, n_config: usize, n_spins_cap: usize, seed: u64) -> Result<McEstimate> {
    if n_config < 100 {
        return Err(Error::argument(format!("need at least 100 configurations, got {n_config}")));
    }
    let geo = sc.geometry()?;
    let radius = plane_kernel(sc, td_us)?.truncation_radius_nm;
    let mean_count = sc.c2d_per_nm2 * std::f64::consts::PI * radius * radius;
    let pb = sc.pump_flip_frac;
    if pb == 0.0 || mean_count == 0.0 {
        return Ok(McEstimate {
            v: 1.0,
            std_error: 0.0,
            disc_radius_nm: radius,
            mean_spin_count: mean_count,
        });
    }
    let poisson = Poisson::new(mean_count).map_err(|e| Error::argument(format!("spin count distribution: {e}")))?;
    let omega_t = 2.0 * std::f64::consts::PI * td_us;
    let samples = (0..n_config)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let n = poisson.sample(&mut rng) as usize;
            if n > n_spins_cap {
                return Err(Error::argument(format!(
                    "configuration {i} drew {n} spins, above the cap of {n_spins_cap}"
                )));
            }
            let mut prod = 1.0;
            for _ in 0..n {
                let rho = radius * rng.random::<f64>().sqrt();
                let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                let nu = geo.nu(rho, phi.cos(), phi.sin());
                prod *= 1.0 - pb * (1.0 - (omega_t * nu).cos());
            }
            Ok(prod)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate {
        v: mean,
        std_error: (var / n).sqrt(),
        disc_radius_nm: radius,
        mean_spin_count: mean_count,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitBounds {
    pub dx_min_nm: f64,
    pub dx_max_nm: f64,
    #[serde(rename = "C2D_min_per_nm2")]
    pub c2d_min_per_nm2: f64,
    #[serde(rename = "C2D_max_per_nm2")]
    pub c2d_max_per_nm2: f64,
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds {
            dx_min_nm: 2.0,
            dx_max_nm: 30.0,
            c2d_min_per_nm2: concentration_from_spacing(50.0),
            c2d_max_per_nm2: concentration_from_spacing(2.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlaneFit {
    pub dx_nm: f64,
    pub c2d_per_nm2: f64,
    /// Sum of squared residuals.
    pub residual: f64,
    /// Covariance of `(dx, C2D)` from the Jacobian at the optimum.
    pub covariance: [[f64; 2]; 2],
    pub flags: Vec<String>,
    pub iterations: usize,
}

pub const FLAG_BOUND_ACTIVE: &str = "bound-active";
pub const FLAG_ILL_CONDITIONED: &str = "ill-conditioned";

const SCAN_POINTS: usize = 24;
const LOG_DX_STEP: f64 = 1e-3;
const MAX_ITER: usize = 100;
const COND_LIMIT: f64 = 1e10;

struct FitProblem<'a> {
    trace: &'a DeerTrace,
    template: DeerScenario,
}

impl FitProblem<'_> {
    fn kernels(&self, dx: f64) -> Result<Vec<f64>> {
        let mut sc = self.template.clone();
        sc.dx_nm = dx;
        let geo = sc.geometry()?;
        self.trace
            .td_us
            .iter()
            .map(|&td| plane_kernel_with(&geo, td, &KernelQuadrature::default()).map(|k| k.k_nm2))
            .collect()
    }

    fn model(&self, k: &[f64], c: f64) -> Vec<f64> {
        k.iter().map(|k| (-c * self.template.pump_flip_frac * k).exp()).collect()
    }

    fn ssr(&self, model: &[f64]) -> f64 {
        model.iter().zip(&self.trace.v).map(|(m, d)| (m - d).powi(2)).sum()
    }

    /// Residuals and Jacobian columns with respect to `(ln dx, ln C)`.
    fn linearize(&self, dx: f64, c: f64) -> Result<(Vec<f64>, Vec<[f64; 2]>)> {
        let k = self.kernels(dx)?;
        let kp = self.kernels(dx * LOG_DX_STEP.exp())?;
        let km = self.kernels(dx * (-LOG_DX_STEP).exp())?;
        let pb = self.template.pump_flip_frac;
        let v = self.model(&k, c);
        let res = v.iter().zip(&self.trace.v).map(|(m, d)| m - d).collect();
        let jac = (0..k.len())
            .map(|i| {
                let dk = (kp[i] - km[i]) / (2.0 * LOG_DX_STEP);
                [-c * pb * dk * v[i], -c * pb * k[i] * v[i]]
            })
            .collect();
        Ok((res, jac))
    }
}

/// Least-squares estimate of `(dx, C2D)` from a trace: log-space grid scan
/// followed by Levenberg-Marquardt in `(ln dx, ln C)`.
pub fn fit_plane(trace: &DeerTrace, template: &DeerScenario, bounds: &FitBounds) -> Result<PlaneFit> {
    if trace.td_us.len() != trace.v.len() {
        return Err(Error::argument("trace columns differ in length"));
    }
    if trace.td_us.len() < 8 {
        return Err(Error::argument(format!(
            "insufficient points: need at least 8, got {}",
            trace.td_us.len()
        )));
    }
    let finite = [bounds.dx_min_nm, bounds.dx_max_nm, bounds.c2d_min_per_nm2, bounds.c2d_max_per_nm2]
        .iter()
        .all(|b| b.is_finite() && *b > 0.0);
    if !finite || bounds.dx_min_nm >= bounds.dx_max_nm || bounds.c2d_min_per_nm2 >= bounds.c2d_max_per_nm2 {
        return Err(Error::argument("fit bounds must be finite, positive and increasing"));
    }
    if !(template.pump_flip_frac > 0.0) {
        return Err(Error::argument("fit needs a positive pump flip probability"));
    }
    let problem = FitProblem {
        trace,
        template: template.clone(),
    };
    let lo = Vector2::new(bounds.dx_min_nm.ln(), bounds.c2d_min_per_nm2.ln());
    let hi = Vector2::new(bounds.dx_max_nm.ln(), bounds.c2d_max_per_nm2.ln());
    let grid = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (SCAN_POINTS - 1) as f64;

    let scan: Vec<(f64, f64, f64)> = (0..SCAN_POINTS)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, f64)> {
            let ldx = grid(lo[0], hi[0], i);
            let k = problem.kernels(ldx.exp())?;
            let mut best = (f64::INFINITY, 0.0);
            for j in 0..SCAN_POINTS {
                let lc = grid(lo[1], hi[1], j);
                let s = problem.ssr(&problem.model(&k, lc.exp()));
                if s < best.0 {
                    best = (s, lc);
                }
            }
            Ok((best.0, ldx, best.1))
        })
        .collect::<Result<_>>()?;
    let start = scan
        .iter()
        .fold((f64::INFINITY, 0.0, 0.0), |a, b| if b.0 < a.0 { *b } else { a });
    let mut p = Vector2::new(start.1, start.2);
    let mut cost = start.0;
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 0..MAX_ITER {
        iterations = it + 1;
        let (res, jac) = problem.linearize(p[0].exp(), p[1].exp())?;
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for (r, j) in res.iter().zip(&jac) {
            let jv = Vector2::new(j[0], j[1]);
            jtj += jv * jv.transpose();
            jtr += jv * *r;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let damped = jtj + Matrix2::from_diagonal(&jtj.diagonal()) * lambda + Matrix2::identity() * 1e-30;
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let trial = Vector2::new(trial[0].clamp(lo[0], hi[0]), trial[1].clamp(lo[1], hi[1]));
            let k = problem.kernels(trial[0].exp())?;
            let c = problem.ssr(&problem.model(&k, trial[1].exp()));
            if c < cost {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                let moved = (trial - p).amax();
                p = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-14 || moved < 1e-12 {
                    lambda = f64::INFINITY;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || lambda.is_infinite() {
            break;
        }
    }

    let (dx, c) = (p[0].exp(), p[1].exp());
    let (res, jac) = problem.linearize(dx, c)?;
    let mut flags = Vec::new();
    let tol = 1e-6;
    if (0..2).any(|i| (p[i] - lo[i]).abs() < tol || (hi[i] - p[i]).abs() < tol) {
        flags.push(FLAG_BOUND_ACTIVE.to_string());
    }
    // Conditioning is judged in log parameters, which are scale-free.
    let mut jtj_log = Matrix2::zeros();
    let mut jtj = Matrix2::zeros();
    for j in &jac {
        let jl = Vector2::new(j[0], j[1]);
        jtj_log += jl * jl.transpose();
        let jv = Vector2::new(j[0] / dx, j[1] / c);
        jtj += jv * jv.transpose();
    }
    let eig = jtj_log.symmetric_eigenvalues();
    let (emin, emax) = (eig.min(), eig.max());
    let flat = trace.v.iter().all(|v| (1.0 - v).abs() < 1e-12);
    let ill = flat || !(emin > 0.0) || emax / emin > COND_LIMIT;
    let dof = (res.len() as f64 - 2.0).max(1.0);
    let sigma2 = cost / dof;
    let covariance = match jtj.try_inverse() {
        Some(inv) if !ill => {
            let cov = inv * sigma2;
            [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]]
        }
        _ => [[f64::NAN; 2]; 2],
    };
    if ill {
        flags.push(FLAG_ILL_CONDITIONED.to_string());
    }
    Ok(PlaneFit {
        dx_nm: dx,
        c2d_per_nm2: c,
        residual: cost,
        covariance,
        flags,
        iterations,
    })
}
