use proptest::prelude::*;
use sicyig_core::magnetostatics::*;

fn stripe() -> StripeGeometry {
    StripeGeometry::default()
}

/// Field of the two charged faces of a finite stripe, integrating the
/// Coulomb kernel analytically along the length and with composite
/// Simpson across the thickness.
fn sheet_oracle(g: &StripeGeometry, x: f64, y: f64, z: f64) -> [f64; 3] {
    let m = g.b_sat_g / (4.0 * std::f64::consts::PI);
    let half_l = 0.5 * g.length_um * 1e3;
    let half_t = 0.5 * g.thickness_nm;
    let n = 20_000;
    let h = g.thickness_nm / n as f64;
    let mut b = [0.0; 3];
    for (sign, zf) in [(1.0, 0.5 * g.width_nm), (-1.0, -0.5 * g.width_nm)] {
        for i in 0..=n {
            let xp = -half_t + h * i as f64;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let (dx, dz) = (x - xp, z - zf);
            let rho2 = dx * dx + dz * dz;
            // ∫ dy' / (ρ² + (y − y')²)^{3/2} over the stripe length.
            let prim = |t: f64| t / (rho2 * (rho2 + t * t).sqrt());
            let iy = prim(y + half_l) - prim(y - half_l);
            // ∫ (y − y') dy' / (...)^{3/2}.
            let prim_y = |t: f64| -1.0 / (rho2 + t * t).sqrt();
            let iyy = prim_y(y + half_l) - prim_y(y - half_l);
            let c = sign * m * w * h / 3.0;
            b[0] += c * dx * iy;
            b[1] += c * iyy;
            b[2] += c * dz * iy;
        }
    }
    b
}

#[test]
fn closed_form_matches_surface_integral() {
    let g = stripe();
    for (x, z) in [(150.0, 0.0), (80.0, 120.0), (200.0, -260.0), (400.0, 30.0), (60.0, 249.0)] {
        let got = stripe_field(&g, [x, 0.0, z]).unwrap();
        let want = sheet_oracle(&g, x, 0.0, z);
        let scale = want[0].abs().max(want[2].abs());
        for c in [0, 2] {
            assert!(
                (got[c] - want[c]).abs() < 1e-4 * scale,
                "({x}, {z}) component {c}: {} vs {}",
                got[c],
                want[c]
            );
        }
        assert!(want[1].abs() < 1e-9 * scale);
    }
}

#[test]
fn short_stripe_departs_from_infinite_limit() {
    let g = StripeGeometry::new(500.0, 100.0, 1.0, 1700.0).unwrap();
    let got = stripe_field(&g, [150.0, 0.0, 0.0]).unwrap()[2];
    let finite = sheet_oracle(&g, 150.0, 0.0, 0.0)[2];
    assert!((got - finite).abs() > 0.05 * finite.abs());
    assert!(!g.warnings().is_empty());
}

/// Net flux of B through a rectangle in the (x, z) plane, per unit length.
fn flux(g: &StripeGeometry, x0: f64, x1: f64, z0: f64, z1: f64) -> (f64, f64) {
    let n = 4000;
    let mut total = 0.0;
    let mut peak: f64 = 0.0;
    let mut edge = |a: [f64; 2], b: [f64; 2], normal: [f64; 2]| {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let h = len / n as f64;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let f = stripe_field(g, [p[0], 0.0, p[1]]).unwrap();
            peak = peak.max(f[0].hypot(f[2]));
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            total += w * h / 3.0 * (f[0] * normal[0] + f[2] * normal[1]);
        }
    };
    edge([x0, z0], [x1, z0], [0.0, -1.0]);
    edge([x1, z0], [x1, z1], [1.0, 0.0]);
    edge([x1, z1], [x0, z1], [0.0, 1.0]);
    edge([x0, z1], [x0, z0], [-1.0, 0.0]);
    (total, peak)
}

#[test]
fn field_is_divergence_free_outside_the_stripe() {
    let g = stripe();
    for (x0, x1, z0, z1) in [(60.0, 300.0, -400.0, 400.0), (55.0, 120.0, 200.0, 300.0), (-300.0, -60.0, -50.0, 80.0)] {
        let (f, peak) = flux(&g, x0, x1, z0, z1);
        let area = (x1 - x0) * (z1 - z0);
        assert!(f.abs() < 1e-6 * peak * area, "flux {f} over box ({x0},{x1})x({z0},{z1})");
    }
}

#[test]
fn far_field_falls_as_inverse_square() {
    let g = stripe();
    for x in [2000.0, 3000.0, 5000.0] {
        let near = stripe_field(&g, [x, 0.0, 0.0]).unwrap()[2];
        let far = stripe_field(&g, [2.0 * x, 0.0, 0.0]).unwrap()[2];
        assert!((far / near - 0.25).abs() < 0.05 * 0.25, "x = {x}: ratio {}", far / near);
    }
}

#[test]
fn optimum_for_reference_stripe() {
    let opt = find_xopt(&stripe()).unwrap();
    assert!((opt.x_opt_nm - 150.0).abs() <= 10.0, "{}", opt.x_opt_nm);
    assert!((opt.g_max_g_per_nm - 0.5).abs() <= 0.05, "{}", opt.g_max_g_per_nm);
    let wide = find_xopt(&stripe().with_width(800.0)).unwrap();
    assert!((wide.x_opt_nm - 230.0).abs() <= 15.0, "{}", wide.x_opt_nm);
}

#[test]
fn optimum_matches_dense_scan() {
    let g = stripe();
    let opt = find_xopt(&g).unwrap();
    let profile = gradient_profile(&g, 51.0, 600.0, 5491, 0.0).unwrap();
    let best = profile
        .iter()
        .max_by(|a, b| a.grad_bz_x_g_per_nm.abs().total_cmp(&b.grad_bz_x_g_per_nm.abs()))
        .unwrap();
    assert!((best.position_nm[0] - opt.x_opt_nm).abs() <= 0.5);
    assert!(opt.g_max_g_per_nm >= best.grad_bz_x_g_per_nm.abs() - 1e-9);
}

#[test]
fn profile_peak_near_half_gauss_per_nm() {
    let p = gradient_profile(&stripe(), 60.0, 400.0, 341, 0.0).unwrap();
    let peak = p.iter().map(|s| s.grad_bz_x_g_per_nm.abs()).fold(0.0, f64::max);
    assert!((peak - 0.5).abs() < 0.05, "{peak}");
}

#[test]
fn profile_mirror_in_z() {
    let g = stripe();
    let up = gradient_profile(&g, 60.0, 400.0, 50, 20.0).unwrap();
    let down = gradient_profile(&g, 60.0, 400.0, 50, -20.0).unwrap();
    for (a, b) in up.iter().zip(&down) {
        let (ga, gb) = (a.grad_bz_x_g_per_nm, b.grad_bz_x_g_per_nm);
        assert!((ga - gb).abs() <= 1e-12 * ga.abs().max(1e-30));
    }
}

#[test]
fn gradient_stable_under_step_halving() {
    let g = stripe();
    for x in [80.0, 150.0, 300.0] {
        let a = grad_bz_x(&g, x, 0.0, GRADIENT_STEP_NM).unwrap();
        let b = grad_bz_x(&g, x, 0.0, 0.5 * GRADIENT_STEP_NM).unwrap();
        assert!(((a - b) / b).abs() < 1e-4, "x = {x}: {a} vs {b}");
    }
}

#[test]
fn wider_stripes_trade_gradient_for_distance() {
    let widths = [400.0, 500.0, 600.0, 800.0];
    let opts: Vec<_> = widths.iter().map(|&w| find_xopt(&stripe().with_width(w)).unwrap()).collect();
    for p in opts.windows(2) {
        assert!(p[1].g_max_g_per_nm < p[0].g_max_g_per_nm);
        assert!(p[1].x_opt_nm > p[0].x_opt_nm);
    }
}

#[test]
fn doubling_saturation_doubles_gradient_only() {
    let a = find_xopt(&stripe()).unwrap();
    let b = find_xopt(&stripe().with_b_sat(3400.0)).unwrap();
    assert!((a.x_opt_nm - b.x_opt_nm).abs() < 1e-6);
    assert!((b.g_max_g_per_nm / a.g_max_g_per_nm - 2.0).abs() < 1e-9);
}

#[test]
fn homogeneity_at_and_below_optimum() {
    let g = stripe();
    let x = find_xopt(&g).unwrap().x_opt_nm;
    assert!(homogeneity_report(&g, x, 30.0).unwrap() <= 0.1);
    assert!(homogeneity_report(&g, x - 10.0, 30.0).unwrap() <= 0.3);
    assert!(homogeneity_report(&g, x, 1e-9).unwrap() < 1e-9);
}

#[test]
fn zeeman_shift_is_sum_of_field_terms() {
    let g = stripe();
    let p = [137.0, 0.0, 41.0];
    let b0 = 3350.0;
    let s = effective_zeeman_shift(&g, p, b0).unwrap();
    let f = stripe_field(&g, p).unwrap();
    assert!((s.delta_b_first_order_g - f[2]).abs() < 1e-12);
    assert!((s.delta_b_second_order_g - f[0] * f[0] / (2.0 * b0)).abs() < 1e-12);
    assert!((s.total_g - (f[2] + f[0] * f[0] / (2.0 * b0))).abs() < 1e-12);
}

#[test]
fn zeeman_shift_flat_across_window_at_optimum() {
    let g = stripe();
    let x = find_xopt(&g).unwrap().x_opt_nm;
    let totals: Vec<f64> = (-30..=30)
        .map(|z| effective_zeeman_shift(&g, [x, 0.0, z as f64], 3350.0).unwrap().total_g)
        .collect();
    let lo = totals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo <= 0.1, "{}", hi - lo);
}

#[test]
fn shifts_differ_by_gradient_times_depth() {
    let g = stripe();
    let x = find_xopt(&g).unwrap().x_opt_nm;
    let a = effective_zeeman_shift(&g, [x - 5.0, 0.0, 0.0], 3350.0).unwrap().total_g;
    let b = effective_zeeman_shift(&g, [x + 5.0, 0.0, 0.0], 3350.0).unwrap().total_g;
    let grad = grad_bz_x(&g, x, 0.0, GRADIENT_STEP_NM).unwrap();
    assert!(((a - b).abs() - 10.0 * grad.abs()).abs() < 0.01 * 10.0 * grad.abs());
}

fn outside_point() -> impl Strategy<Value = (f64, f64)> {
    (-800.0..800.0f64, -800.0..800.0f64).prop_filter("outside", |(x, z)| x.abs() > 51.0 || z.abs() > 251.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mirror_symmetry((x, z) in outside_point()) {
        let g = stripe();
        let a = stripe_field(&g, [x, 0.0, z]).unwrap();
        let b = stripe_field(&g, [x, 0.0, -z]).unwrap();
        let s = a[0].abs().max(a[2].abs()).max(1e-12);
        prop_assert!((a[2] - b[2]).abs() <= 1e-12 * s);
        prop_assert!((a[0] + b[0]).abs() <= 1e-12 * s);
    }

    #[test]
    fn linear_in_saturation((x, z) in outside_point(), k in 0.1..10.0f64) {
        let g = stripe();
        let a = stripe_field(&g, [x, 0.0, z]).unwrap();
        let b = stripe_field(&g.with_b_sat(1700.0 * k), [x, 0.0, z]).unwrap();
        for c in 0..3 {
            prop_assert!((b[c] - k * a[c]).abs() <= 1e-12 * (k * a[c]).abs().max(1e-12));
        }
    }

    #[test]
    fn translation_moves_field((x, z) in outside_point(), cx in -100.0..100.0f64, cz in -100.0..100.0f64) {
        let g = stripe();
        let moved = StripeGeometry { center_nm: [cx, 0.0, cz], ..g.clone() };
        let a = stripe_field(&g, [x, 0.0, z]).unwrap();
        let b = stripe_field(&moved, [x + cx, 5.0, z + cz]).unwrap();
        for c in 0..3 {
            prop_assert!((a[c] - b[c]).abs() <= 1e-9 * a[c].abs().max(1.0));
        }
    }
}
