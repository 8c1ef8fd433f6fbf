use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use sicyig_core::magnetostatics::StripeGeometry;
use sicyig_core::swr::*;

/// Full-width finite-difference operator assembled directly from the
/// internal-field profile, without the mirror reduction.
fn full_grid_frequencies(model: &SwrModel, b0: f64) -> Vec<f64> {
    let n = model.n_grid_count;
    let p = internal_field_profile(&model.geom, b0, n).unwrap();
    let h = model.geom.width_nm / n as f64;
    let gamma = model.gyromag_mhz_per_g;
    let k = gamma * model.exchange_d_g_nm2 / (h * h);
    let bs = model.geom.b_sat_g;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let b = p.b_int_g[i].max(0.0);
        a[(i, i)] = gamma * (b * (b + bs)).sqrt() + 2.0 * k;
        if i + 1 < n {
            a[(i, i + 1)] = -k;
            a[(i + 1, i)] = -k;
        }
    }
    let ghost = match model.boundary {
        Boundary::Free => -k,
        Boundary::Pinned => k,
    };
    a[(0, 0)] += ghost;
    a[(n - 1, n - 1)] += ghost;
    let mut f: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().map(|x| x * 1e-3).collect();
    f.sort_by(f64::total_cmp);
    f
}

#[test]
fn parity_split_matches_full_operator() {
    for boundary in [Boundary::Free, Boundary::Pinned] {
        let m = SwrModel {
            n_grid_count: 128,
            boundary,
            ..SwrModel::default()
        };
        for b0 in [2500.0, 3300.0] {
            let got = mode_frequencies_ghz(&m, b0).unwrap();
            let want = full_grid_frequencies(&m, b0);
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9 * w.abs(), "{boundary:?} {b0}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn kittel_root_solves_the_quadratic() {
    let b = kittel_field_g(9.7, 1700.0, 2.8);
    let f = 2.8 * (b * (b + 1700.0)).sqrt();
    assert!((f - 9700.0).abs() < 1e-9);
    // Independent root of B² + 1700·B − (9700/2.8)² = 0.
    let c = (9700.0f64 / 2.8).powi(2);
    let root = (-1700.0 + (1700.0f64 * 1700.0 + 4.0 * c).sqrt()) / 2.0;
    assert!((b - root).abs() < 1e-9);
    assert!((b - 2717.0).abs() < 1.0, "{b}");
}

#[test]
fn thin_film_without_exchange_tops_out_at_kittel() {
    let geom = StripeGeometry::new(10_000.0, 100.0, 1000.0, 1700.0).unwrap();
    let m = SwrModel {
        geom,
        exchange_d_g_nm2: 1e-6,
        ..SwrModel::default()
    };
    let b0 = 3000.0;
    let top = *mode_frequencies_ghz(&m, b0).unwrap().last().unwrap();
    let kittel = 2.8e-3 * (b0 * (b0 + 1700.0)).sqrt();
    assert!((top - kittel).abs() < 0.01 * kittel, "{top} vs {kittel}");
}

#[test]
fn highest_field_line_is_a_weak_edge_mode() {
    let m = SwrModel::default();
    let lines = swr_lines(&m, 9.7, &FieldScan::default()).unwrap();
    assert!(lines.len() >= 2);
    let top = lines.last().unwrap();
    assert!(top.edge_localized, "edge weight {}", top.edge_weight);
    let strongest = lines
        .iter()
        .map(|l| l.oscillator_strength)
        .fold(0.0, f64::max);
    assert!(top.oscillator_strength < strongest);
}

#[test]
fn strengths_are_normalized() {
    let lines = swr_lines(&SwrModel::default(), 9.7, &FieldScan::default()).unwrap();
    for l in &lines {
        assert!((0.0..=1.0).contains(&l.oscillator_strength));
        assert!((0.0..=1.0 + 1e-12).contains(&l.edge_weight));
    }
}

#[test]
fn refining_the_grid_moves_lines_less_than_a_gauss() {
    let coarse = swr_lines(&SwrModel::default(), 9.7, &FieldScan::default()).unwrap();
    let fine_model = SwrModel {
        n_grid_count: 512,
        ..SwrModel::default()
    };
    let fine = swr_lines(&fine_model, 9.7, &FieldScan::default()).unwrap();
    // Compare the strongly coupled lines and the edge mode, which are the
    // ones used for overlap decisions.
    for l in coarse.iter().filter(|l| l.oscillator_strength > 1e-3 || l.edge_localized) {
        let nearest = fine
            .iter()
            .map(|f| (f.resonance_field_g - l.resonance_field_g).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 1.0, "line at {} G moved by {nearest} G", l.resonance_field_g);
    }
}

#[test]
fn dispersion_rows_cover_the_scan() {
    let scan = FieldScan {
        b0_min_g: 2000.0,
        b0_max_g: 3000.0,
        b0_step_g: 250.0,
    };
    let map = dispersion_map(&SwrModel::default(), &scan, 5).unwrap();
    assert_eq!(map.len(), 5 * 5);
    assert!(map.iter().all(|p| p.freq_ghz > 0.0));
}

#[test]
fn bad_models_rejected() {
    let m = SwrModel {
        exchange_d_g_nm2: 0.0,
        ..SwrModel::default()
    };
    assert!(swr_lines(&m, 9.7, &FieldScan::default()).is_err());
    let m = SwrModel {
        n_grid_count: 65,
        ..SwrModel::default()
    };
    assert!(m.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frequencies_rise_with_field(b0 in 2000.0..4500.0f64, db in 1.0..200.0f64) {
        let m = SwrModel { n_grid_count: 64, ..SwrModel::default() };
        let lo = mode_frequencies_ghz(&m, b0).unwrap();
        let hi = mode_frequencies_ghz(&m, b0 + db).unwrap();
        for (a, b) in lo.iter().zip(&hi) {
            prop_assert!(b > a);
        }
    }

    #[test]
    fn frequencies_real_and_positive(b0 in 2000.0..4500.0f64) {
        let m = SwrModel { n_grid_count: 64, ..SwrModel::default() };
        prop_assert!(mode_frequencies_ghz(&m, b0).unwrap().iter().all(|f| f.is_finite() && *f > 0.0));
    }

    #[test]
    fn internal_profile_symmetric(b0 in 2000.0..5000.0f64, w in 200.0..2000.0f64) {
        let g = StripeGeometry::default().with_width(w);
        let p = internal_field_profile(&g, b0, 100).unwrap();
        for i in 0..50 {
            let (a, b) = (p.b_int_g[i], p.b_int_g[99 - i]);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        prop_assert!(p.b_int_g[0] < p.b_int_g[50]);
    }
}
