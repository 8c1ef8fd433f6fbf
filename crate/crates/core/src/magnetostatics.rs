//! Dipolar field of a uniformly magnetized ferrimagnetic nanostripe.
//!
//! Coordinates: stripe centre at `center_nm`, `x` normal to the membrane,
//! `y` along the stripe length, `z` across the width and along the applied
//! field. The magnetization is saturated along `+z`, so the only magnetic
//! charges sit on the two faces `z = ±W/2`. For `L ≫ W` the field is the 2D
//! field of two oppositely charged strips of height `T`, which integrates to
//! closed arctan/log kernels.
//!
//! Units are gauss and nanometres throughout; `B_sat` is `4πM_s`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

/// Finite-difference step used for `∂B_z/∂x`.
pub const GRADIENT_STEP_NM: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StripeGeometry {
    /// Extent along z.
    pub width_nm: f64,
    /// Extent along x.
    pub thickness_nm: f64,
    /// Extent along y.
    pub length_um: f64,
    #[serde(rename = "B_sat_G")]
    pub b_sat_g: f64,
    #[serde(default)]
    pub center_nm: Vec3,
}

impl Default for StripeGeometry {
    fn default() -> Self {
        StripeGeometry {
            width_nm: 500.0,
            thickness_nm: 100.0,
            length_um: 100.0,
            b_sat_g: 1700.0,
            center_nm: [0.0; 3],
        }
    }
}

impl StripeGeometry {
    pub fn new(width_nm: f64, thickness_nm: f64, length_um: f64, b_sat_g: f64) -> Result<Self> {
        let geom = StripeGeometry {
            width_nm,
            thickness_nm,
            length_um,
            b_sat_g,
            center_nm: [0.0; 3],
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("width_nm", self.width_nm),
            ("thickness_nm", self.thickness_nm),
            ("length_um", self.length_um),
            ("B_sat_G", self.b_sat_g),
        ];
        for (name, v) in dims {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::argument(format!("stripe {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Conditions under which the infinite-length closed form is questionable.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.length_um * 1e3 < 10.0 * self.width_nm {
            out.push(format!(
                "stripe length {} um is below 10x the width; infinite-length field is approximate",
                self.length_um
            ));
        }
        out
    }

    fn local(&self, point: Vec3) -> (f64, f64) {
        (point[0] - self.center_nm[0], point[2] - self.center_nm[2])
    }

    /// Closed cross-section test in local (x, z).
    pub fn contains(&self, point: Vec3) -> bool {
        let (x, z) = self.local(point);
        x.abs() <= 0.5 * self.thickness_nm && z.abs() <= 0.5 * self.width_nm
    }

    pub fn with_width(&self, width_nm: f64) -> Self {
        StripeGeometry {
            width_nm,
            ..self.clone()
        }
    }

    pub fn with_b_sat(&self, b_sat_g: f64) -> Self {
        StripeGeometry {
            b_sat_g,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    pub position_nm: Vec3,
    pub b_dip_g: Vec3,
    pub grad_bz_x_g_per_nm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveShift {
    pub delta_b_first_order_g: f64,
    pub delta_b_second_order_g: f64,
    pub total_g: f64,
}

impl EffectiveShift {
    pub fn zero() -> Self {
        EffectiveShift {
            delta_b_first_order_g: 0.0,
            delta_b_second_order_g: 0.0,
            total_g: 0.0,
        }
    }
}

/// Surface-charge field (H in gauss) at local cross-section coordinates,
/// valid anywhere off the charged faces, inside the magnet included.
pub(crate) fn charge_sheet_field(geom: &StripeGeometry, x: f64, z: f64) -> (f64, f64) {
    let half_t = 0.5 * geom.thickness_nm;
    let half_w = 0.5 * geom.width_nm;
    // 2M = B_sat / 2π in Gaussian units.
    let pref = geom.b_sat_g / (2.0 * PI);
    let u_hi = x + half_t;
    let u_lo = x - half_t;
    let mut hx = 0.0;
    let mut hz = 0.0;
    for (sign, z_face) in [(1.0, half_w), (-1.0, -half_w)] {
        let d = z - z_face;
        let d2 = d * d;
        hx += sign * 0.5 * ((u_hi * u_hi + d2) / (u_lo * u_lo + d2)).ln();
        if d != 0.0 {
            let ad = d.abs();
            hz += sign * d.signum() * ((u_hi / ad).atan() - (u_lo / ad).atan());
        }
    }
    (pref * hx, pref * hz)
}

/// Dipolar field of the stripe at `point` (nm), in gauss.
pub fn stripe_field(geom: &StripeGeometry, point: Vec3) -> Result<Vec3> {
    if geom.contains(point) {
        return Err(Error::domain(format!(
            "point ({}, {}, {}) nm lies inside the stripe",
            point[0], point[1], point[2]
        )));
    }
    let (x, z) = geom.local(point);
    let (bx, bz) = charge_sheet_field(geom, x, z);
    Ok([bx, 0.0, bz])
}

fn bz_at(geom: &StripeGeometry, x: f64, z: f64) -> Result<f64> {
    Ok(stripe_field(geom, [x, geom.center_nm[1], z])?[2])
}

/// Central-difference `∂B_z/∂x` with the given step.
pub fn grad_bz_x(geom: &StripeGeometry, x: f64, z: f64, step_nm: f64) -> Result<f64> {
    let hi = bz_at(geom, x + step_nm, z)?;
    let lo = bz_at(geom, x - step_nm, z)?;
    Ok((hi - lo) / (2.0 * step_nm))
}

/// Field and gradient sampled on `n_points` evenly spaced x values in
/// `[x_min, x_max]` at fixed `z`. Both ends must sit above the stripe.
pub fn gradient_profile(
    geom: &StripeGeometry,
    x_min_nm: f64,
    x_max_nm: f64,
    n_points: usize,
    z_nm: f64,
) -> Result<Vec<FieldSample>> {
    geom.validate()?;
    if n_points == 0 || !(x_max_nm >= x_min_nm) {
        return Err(Error::argument("empty x range for gradient profile"));
    }
    let surface = geom.center_nm[0] + 0.5 * geom.thickness_nm;
    if x_min_nm - GRADIENT_STEP_NM <= surface {
        return Err(Error::argument(format!(
            "x range must lie above the stripe surface at x = {surface} nm"
        )));
    }
    let step = if n_points > 1 {
        (x_max_nm - x_min_nm) / (n_points - 1) as f64
    } else {
        0.0
    };
    (0..n_points)
        .map(|i| {
            let x = x_min_nm + step * i as f64;
            let pos = [x, geom.center_nm[1], z_nm];
            Ok(FieldSample {
                position_nm: pos,
                b_dip_g: stripe_field(geom, pos)?,
                grad_bz_x_g_per_nm: grad_bz_x(geom, x, z_nm, GRADIENT_STEP_NM)?,
            })
        })
        .collect()
}

/// Location of the largest `|∂B_z/∂x|` above the stripe on its mid-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradientOptimum {
    pub x_opt_nm: f64,
    pub g_max_g_per_nm: f64,
}

pub fn find_xopt(geom: &StripeGeometry) -> Result<GradientOptimum> {
    geom.validate()?;
    let x0 = geom.center_nm[0];
    let z0 = geom.center_nm[2];
    let surface = x0 + 0.5 * geom.thickness_nm;
    let objective = |x: f64| -> Result<f64> { Ok(grad_bz_x(geom, x, z0, GRADIENT_STEP_NM)?.abs()) };

    // Coarse 1 nm scan out to several widths, then golden-section refinement
    // inside the winning bracket.
    let start = surface + 2.0 * GRADIENT_STEP_NM;
    let span = 4.0 * (geom.width_nm + geom.thickness_nm);
    let n = span.ceil() as usize;
    let mut best = (start, objective(start)?);
    for i in 1..=n {
        let x = start + i as f64;
        let g = objective(x)?;
        if g > best.1 {
            best = (x, g);
        }
    }
    let mut lo = (best.0 - 1.0).max(start);
    let mut hi = best.0 + 1.0;
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    while hi - lo > 1e-3 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = objective(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = objective(d)?;
        }
    }
    let x_opt = 0.5 * (lo + hi);
    Ok(GradientOptimum {
        x_opt_nm: x_opt - x0,
        g_max_g_per_nm: objective(x_opt)?,
    })
}

/// Largest `|B_z(x, z) − B_z(x, 0)|` over `|z| ≤ z_half_range`, sampled at
/// 0.5 nm pitch or finer.
pub fn homogeneity_report(geom: &StripeGeometry, x_nm: f64, z_half_range_nm: f64) -> Result<f64> {
    geom.validate()?;
    if x_nm <= geom.center_nm[0] + 0.5 * geom.thickness_nm {
        return Err(Error::argument("homogeneity probe must sit above the stripe"));
    }
    if !(z_half_range_nm >= 0.0) {
        return Err(Error::argument("z half range must be non-negative"));
    }
    let z0 = geom.center_nm[2];
    let reference = bz_at(geom, x_nm, z0)?;
    let n = ((2.0 * z_half_range_nm) / 0.5).ceil().max(1.0) as usize;
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let z = z0 - z_half_range_nm + 2.0 * z_half_range_nm * i as f64 / n as f64;
        worst = worst.max((bz_at(geom, x_nm, z)? - reference).abs());
    }
    Ok(worst)
}

/// Shift of the Zeeman resonance field seen by a spin at `point` when the
/// applied field `b0_g` points along z: first order in `B_dz`, second order
/// in the transverse `B_dx`.
pub fn effective_zeeman_shift(geom: &StripeGeometry, point: Vec3, b0_g: f64) -> Result<EffectiveShift> {
    if !(b0_g > 0.0) {
        return Err(Error::argument(format!("applied field must be positive, got {b0_g}")));
    }
    let b = stripe_field(geom, point)?;
    let first = b[2];
    let second = b[0] * b[0] / (2.0 * b0_g);
    Ok(EffectiveShift {
        delta_b_first_order_g: first,
        delta_b_second_order_g: second,
        total_g: first + second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_stripe() -> StripeGeometry {
        StripeGeometry::new(500.0, 100.0, 100.0, 1700.0).unwrap()
    }

    #[test]
    fn far_field_vanishes() {
        let b = stripe_field(&reference_stripe(), [1e6, 0.0, 0.0]).unwrap();
        assert!(b.iter().map(|c| c * c).sum::<f64>().sqrt() < 1e-3);
    }

    #[test]
    fn mid_plane_has_no_transverse_field() {
        let g = reference_stripe();
        for x in [51.0, 80.0, 150.0, 400.0, -300.0] {
            let b = stripe_field(&g, [x, 0.0, 0.0]).unwrap();
            assert_eq!(b[0], 0.0);
            assert_eq!(b[1], 0.0);
        }
    }

    #[test]
    fn inside_point_is_rejected() {
        let err = stripe_field(&reference_stripe(), [0.0, 0.0, 100.0]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn gradient_profile_rejects_empty_or_buried_ranges() {
        let g = reference_stripe();
        assert!(gradient_profile(&g, 100.0, 90.0, 10, 0.0).is_err());
        assert!(gradient_profile(&g, 100.0, 200.0, 0, 0.0).is_err());
        assert!(gradient_profile(&g, 40.0, 200.0, 10, 0.0).is_err());
    }

    #[test]
    fn homogeneity_degenerate_interval() {
        assert_eq!(homogeneity_report(&reference_stripe(), 150.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn zeeman_shift_rejects_nonpositive_field() {
        assert!(effective_zeeman_shift(&reference_stripe(), [150.0, 0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn zeeman_second_order_vanishes_on_mid_plane() {
        let s = effective_zeeman_shift(&reference_stripe(), [150.0, 0.0, 0.0], 3350.0).unwrap();
        assert_eq!(s.delta_b_second_order_g, 0.0);
        assert_eq!(s.total_g, s.delta_b_first_order_g);
    }

    #[test]
    fn short_stripe_warns() {
        let g = StripeGeometry::new(500.0, 100.0, 2.0, 1700.0).unwrap();
        assert_eq!(g.warnings().len(), 1);
        assert!(reference_stripe().warnings().is_empty());
    }
}
