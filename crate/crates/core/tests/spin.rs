use num_complex::Complex64;
use proptest::prelude::*;
use sicyig_core::constants::MU_B_OVER_H_MHZ_PER_G;
use sicyig_core::magnetostatics::EffectiveShift;
use sicyig_core::spin::*;

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn sorted_levels(sys: &SpinSystem, b: [f64; 3]) -> Vec<f64> {
    let mut e: Vec<f64> = build_hamiltonian(sys, b).symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn hamiltonian_is_hermitian() {
    let mut tilted = SpinSystem::nitroxide();
    tilted.euler_deg = [20.0, 35.0, 50.0];
    tilted.hyperfine[0].euler_deg = [10.0, 70.0, -30.0];
    let mut rhombic = SpinSystem::v2();
    rhombic.e_mhz = 8.0;
    for sys in [tilted, rhombic, SpinSystem::gadolinium()] {
        let h = build_hamiltonian(&sys, [1200.0, -800.0, 2500.0]);
        assert_eq!(h.nrows(), sys.dimension());
        let dev = (&h - h.adjoint()).norm();
        assert!(dev < 1e-9 * h.norm(), "{}: {dev}", sys.label);
    }
}

#[test]
fn zero_field_levels_are_kramers_doublets() {
    let sys = SpinSystem::v2();
    let e = sorted_levels(&sys, [0.0; 3]);
    assert_eq!(e.len(), 4);
    assert!((e[1] - e[0]).abs() < 1e-9);
    assert!((e[3] - e[2]).abs() < 1e-9);
    // Zero-field splitting of an S = 3/2 axial centre is 2D.
    assert!(((e[2] - e[0]) - 2.0 * sys.d_mhz).abs() < 1e-9);
}

#[test]
fn zeeman_splitting_matches_quantum() {
    let sys = SpinSystem::isotropic("e", 1, 2.0023, 1.0);
    let b = 9369.0 / (2.0023 * MU_B_OVER_H_MHZ_PER_G);
    let e = sorted_levels(&sys, [0.0, 0.0, b]);
    assert!((e[1] - e[0] - 9369.0).abs() < 1e-6);
}

#[test]
fn bisected_lines_hit_the_quantum() {
    let sys = SpinSystem::v2();
    let dir: [f64; 3] = [0.4, 0.1, 0.9];
    let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let lines = resonance_fields(&sys, 9.369, dir).unwrap();
    assert!(!lines.is_empty());
    for l in &lines {
        let b = l.resonance_field_g;
        let e = sorted_levels(&sys, [b * dir[0] / n, b * dir[1] / n, b * dir[2] / n]);
        let gap = e[l.transition.1] - e[l.transition.0];
        assert!((gap - 9369.0).abs() < 1e-3, "gap {gap}");
    }
}

#[test]
fn central_line_ignores_zero_field_splitting() {
    let reference = {
        let mut s = SpinSystem::v2();
        s.d_mhz = 0.0;
        resonance_fields(&s, 9.369, [0.0, 0.0, 1.0]).unwrap()
    };
    let centre = reference[0].resonance_field_g;
    for d in [5.0, 35.0, 70.0, 100.0] {
        let mut s = SpinSystem::v2();
        s.d_mhz = d;
        let lines = resonance_fields(&s, 9.369, [0.0, 0.0, 1.0]).unwrap();
        let nearest = lines
            .iter()
            .map(|l| (l.resonance_field_g - centre).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-2, "D {d}: {nearest}");
    }
}

#[test]
fn axial_v2_shows_three_lines_along_the_axis() {
    let sys = SpinSystem::v2();
    let lines = resonance_fields(&sys, 9.369, [0.0, 0.0, 1.0]).unwrap();
    assert_eq!(lines.len(), 3);
    let centre = lines[1].resonance_field_g;
    let split_g = 2.0 * sys.d_mhz / (sys.g_iso() * MU_B_OVER_H_MHZ_PER_G);
    assert!(((centre - lines[0].resonance_field_g) - split_g).abs() < 0.05);
    assert!(((lines[2].resonance_field_g - centre) - split_g).abs() < 0.05);
}

#[test]
fn axial_levels_invariant_under_rotation_about_axis() {
    let sys = SpinSystem::v2();
    let a = sorted_levels(&sys, [800.0, 0.0, 1500.0]);
    let b = sorted_levels(&sys, [0.0, 800.0, 1500.0]);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9);
    }
    assert!(a.iter().sum::<f64>().abs() < 1e-8);
}

#[test]
fn depth_separation_from_gradient() {
    let sys = SpinSystem::v2();
    let gradient = 0.5;
    let shallow = EffectiveShift {
        delta_b_first_order_g: 0.0,
        delta_b_second_order_g: 0.0,
        total_g: 0.0,
    };
    let deep = EffectiveShift {
        delta_b_first_order_g: gradient * 10.0,
        delta_b_second_order_g: 0.0,
        total_g: gradient * 10.0,
    };
    let a = gradient_shifted_lines(&sys, 9.369, [0.0, 0.0, 1.0], &shallow).unwrap();
    let b = gradient_shifted_lines(&sys, 9.369, [0.0, 0.0, 1.0], &deep).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(((x.resonance_field_g - y.resonance_field_g) - 5.0).abs() < 1e-9);
    }
}

#[test]
fn powder_average_converges() {
    let sys = SpinSystem::nitroxide();
    let g = grid(3280.0, 3400.0, 0.2);
    let a = powder_spectrum(&sys, 9.369, &g, 2000).unwrap();
    let b = powder_spectrum(&sys, 9.369, &g, 4000).unwrap();
    let rms = rms_diff(&a.intensity, &b.intensity);
    assert!(rms < 0.01, "rms {rms}");
}

#[test]
fn nitroxide_powder_is_wider_than_one_orientation() {
    let sys = SpinSystem::nitroxide();
    let g = grid(3250.0, 3450.0, 0.2);
    let powder = powder_spectrum(&sys, 9.369, &g, 400).unwrap();
    // Field in the plane of the small hyperfine components.
    let lines = resonance_fields(&sys, 9.369, [1.0, 0.0, 0.0]).unwrap();
    let single = single_crystal_spectrum(&sys, &lines, &g).unwrap();
    let support = |s: &Spectrum| {
        let above: Vec<f64> = s
            .field_grid_g
            .iter()
            .zip(&s.intensity)
            .filter(|(_, y)| **y > 0.05)
            .map(|(x, _)| *x)
            .collect();
        above.last().unwrap() - above.first().unwrap()
    };
    assert!(support(&powder) > support(&single));
}

#[test]
fn isotropic_powder_equals_single_crystal() {
    let sys = SpinSystem::trityl();
    let g = grid(3330.0, 3360.0, 0.05);
    let powder = powder_spectrum(&sys, 9.369, &g, 60).unwrap();
    let lines = resonance_fields(&sys, 9.369, [0.0, 0.0, 1.0]).unwrap();
    let single = single_crystal_spectrum(&sys, &lines, &g).unwrap();
    assert!(rms_diff(&powder.intensity, &single.intensity) < 1e-9);
}

#[test]
fn powder_is_deterministic() {
    let sys = SpinSystem::v2();
    let g = grid(3300.0, 3380.0, 0.1);
    let a = powder_spectrum(&sys, 9.369, &g, 200).unwrap();
    let b = powder_spectrum(&sys, 9.369, &g, 200).unwrap();
    assert_eq!(a, b);
}

#[test]
fn spectral_fraction_cases() {
    let sys = SpinSystem::trityl();
    let g = grid(3300.0, 3400.0, 0.05);
    let s = powder_spectrum(&sys, 9.369, &g, 60).unwrap();
    let whole = spectral_fraction(&s, Band::Field { lo_g: 3000.0, hi_g: 4000.0 }).unwrap();
    assert!((whole - 1.0).abs() < 1e-12);
    let none = spectral_fraction(&s, Band::Field { lo_g: 3500.0, hi_g: 3600.0 }).unwrap();
    assert_eq!(none, 0.0);
    let centre = resonance_fields(&sys, 9.369, [0.0, 0.0, 1.0]).unwrap()[0].resonance_field_g;
    let lower = spectral_fraction(&s, Band::Field { lo_g: 3300.0, hi_g: centre }).unwrap();
    assert!((lower - 0.5).abs() < 0.01, "{lower}");
    // A pump window centred on the spectrometer frequency at the line
    // centre picks out the same half as the field window.
    let half_width_ghz = 0.5;
    let upper_freq = spectral_fraction(
        &s,
        Band::Frequency {
            lo_ghz: 9.369,
            hi_ghz: 9.369 + half_width_ghz,
            field_g: centre,
            spectrum_ghz: 9.369,
            g: sys.g_iso(),
        },
    )
    .unwrap();
    assert!((upper_freq - lower).abs() < 0.01, "{upper_freq} vs {lower}");
}

#[test]
fn linewidth_and_resolution_chain() {
    let w = linewidth_from_t2(50.0, 2.0028).unwrap();
    assert!((w * 1e3 - 7.1348).abs() < 0.01, "{w}");
    assert!((depth_resolution_angstrom(w, 0.5).unwrap() - 10.0 * w / 0.5).abs() < 1e-12);
    assert!(depth_resolution_angstrom(w, 0.0).is_err());
}

#[test]
fn invalid_systems_rejected() {
    let mut s = SpinSystem::v2();
    s.e_mhz = 20.0;
    assert!(s.validate().is_err());
    let mut s = SpinSystem::trityl();
    s.linewidth_g = 0.0;
    assert!(resonance_fields(&s, 9.369, [0.0, 0.0, 1.0]).is_err());
    assert!(resonance_fields(&SpinSystem::trityl(), 9.369, [0.0; 3]).is_err());
    let g = grid(3300.0, 3400.0, 1.0);
    assert!(powder_spectrum(&SpinSystem::trityl(), 9.369, &g, 10).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hermitian_for_any_field(bx in -5000.0..5000.0f64, by in -5000.0..5000.0f64, bz in -5000.0..5000.0f64,
                               a in 0.0..360.0f64, b in 0.0..180.0f64) {
        let mut sys = SpinSystem::nitroxide();
        sys.euler_deg = [a, b, 0.0];
        let h = build_hamiltonian(&sys, [bx, by, bz]);
        let dev = (&h - h.adjoint()).norm();
        prop_assert!(dev <= 1e-9 * (1.0 + h.norm()));
        prop_assert!(h.diagonal().iter().all(|d: &Complex64| d.im.abs() < 1e-12));
    }

    #[test]
    fn levels_are_traceless(bx in -5000.0..5000.0f64, bz in -5000.0..5000.0f64, d in 0.0..500.0f64) {
        let mut sys = SpinSystem::v2();
        sys.d_mhz = d;
        let e = sorted_levels(&sys, [bx, 0.0, bz]);
        prop_assert!(e.iter().sum::<f64>().abs() < 1e-7 * (1.0 + e.iter().map(|x| x.abs()).sum::<f64>()));
    }

    #[test]
    fn free_spin_line_scales_inverse_with_g(g in 1.9..2.1f64) {
        let sys = SpinSystem::isotropic("e", 1, g, 1.0);
        let l = resonance_fields(&sys, 9.369, [0.0, 0.0, 1.0]).unwrap();
        prop_assert_eq!(l.len(), 1);
        prop_assert!((l[0].resonance_field_g * g - 9369.0 / MU_B_OVER_H_MHZ_PER_G).abs() < 1e-4);
    }
}
