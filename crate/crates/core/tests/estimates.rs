use niq_core::estimates::{
    box_convolution, box_convolution_grid, cardinal_bspline, default_perturbation, f_s, five_box_edge_value,
    min_phase_cosine, verify_box_lower_bound, verify_first_iterate_lower_bound, verify_perturbation_stability,
    verify_series_ratio, verify_upper_bounds, BoxSpec, SweepConfig,
};
use niq_core::picard::{time_grid_for, PicardEvaluator};
use niq_core::spectrum::{fl_norm, make_phi, smooth_bump, FlExponent, SpectralFunction};
use niq_core::Error;
use num_rational::Ratio;
use proptest::prelude::*;

/// 4-point Gauss-Legendre rule on [a, b]; exact for degree ≤ 7.
fn gauss(a: f64, b: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let x = [0.3399810435848563, 0.8611363115940526];
    let w = [0.6521451548625461, 0.3478548451374538];
    let (m, h) = ((a + b) / 2.0, (b - a) / 2.0);
    h * (0..2).map(|i| w[i] * (f(m - h * x[i]) + f(m + h * x[i]))).sum::<f64>()
}

/// `M_n(x) = ∫_{x-1/2}^{x+1/2} M_{n-1}`, integrated piece by piece between
/// the knots of `M_{n-1}` so every piece is a polynomial.
fn spline_by_integration(n: usize, x: f64) -> f64 {
    if n == 1 {
        return if (-0.5..0.5).contains(&x) { 1.0 } else { 0.0 };
    }
    let (lo, hi) = (x - 0.5, x + 0.5);
    let offset = if (n - 1).is_multiple_of(2) { 0.0 } else { 0.5 };
    let mut knots = vec![lo];
    let mut k = (lo - offset).floor() + offset;
    while k < hi {
        if k > lo {
            knots.push(k);
        }
        k += 1.0;
    }
    knots.push(hi);
    knots.windows(2).map(|w| gauss(w[0], w[1], &|y| spline_by_integration(n - 1, y))).sum()
}

fn small_sweep() -> SweepConfig {
    // R²A² = 16N and tN² ≈ 0.033 along the sweep, as in the default sweep.
    SweepConfig {
        sweep: vec![32.0, 64.0],
        reference_n: 32.0,
        block_width: 4.0,
        reference_amplitude: (32.0_f64).sqrt(),
        reference_time: 0.0328 / (32.0 * 32.0),
        points_per_width: 32,
        ..SweepConfig::default()
    }
}

#[test]
fn weight_f_s() {
    assert_eq!(f_s(-1.0_f64, 100.0), 1.0);
    assert!((f_s(-0.5_f64, std::f64::consts::E) - 1.0).abs() < 1e-15);
    assert!((f_s(-0.25_f64, 16.0) - 2.0).abs() < 1e-15);
}

#[test]
fn spline_values_are_exact() {
    let q = |a, b| Ratio::<i64>::new(a, b);
    assert_eq!(cardinal_bspline(2, q(0, 1)), q(1, 1));
    assert_eq!(cardinal_bspline(5, q(0, 1)), q(115, 192));
    assert_eq!(five_box_edge_value::<Ratio<i64>>(), q(11, 24));
    assert_eq!(cardinal_bspline(5, q(-1, 2)), q(11, 24));
    assert_eq!(cardinal_bspline(5, q(5, 2)), q(0, 1));
    let two = vec![BoxSpec { center: q(0, 1), width: q(1, 1) }; 2];
    assert_eq!(box_convolution(&two, q(0, 1)).unwrap(), q(1, 1));
}

#[test]
fn spline_matches_numeric_convolution() {
    assert!((spline_by_integration(5, 0.0) - 115.0 / 192.0).abs() < 1e-9);
    for n in 1..=8 {
        for i in -10..=10 {
            let x = i as f64 * 0.37;
            let a = cardinal_bspline(n, x);
            let b = spline_by_integration(n, x);
            assert!((a - b).abs() < 1e-9, "n={n} x={x}: {a} vs {b}");
        }
    }
}

#[test]
fn box_convolution_integrates_to_product_of_widths() {
    let a = 3.0;
    let boxes: Vec<BoxSpec<f64>> = [1.0, -2.0, 0.5, 4.0, -1.5].iter().map(|&c| BoxSpec { center: c, width: a }).collect();
    let shift: f64 = boxes.iter().map(|b| b.center).sum();
    let total: f64 = (0..5)
        .map(|k| {
            let lo = shift + a * (k as f64 - 2.5);
            gauss(lo, lo + a, &|x| box_convolution(&boxes, x).unwrap())
        })
        .sum();
    assert!((total / a.powi(5) - 1.0).abs() < 1e-9);
}

#[test]
fn grid_path_agrees_with_exact_values() {
    let boxes: Vec<BoxSpec<f64>> = [0.0, 2.0, -1.0].iter().map(|&c| BoxSpec { center: c, width: 2.0 }).collect();
    for x in [-2.0, 0.3, 1.0, 2.5] {
        let exact = box_convolution(&boxes, x).unwrap();
        let grid = box_convolution_grid(&boxes, x, 400).unwrap();
        assert!((exact - grid).abs() < 1e-3 * exact.max(1e-3), "{x}: {exact} vs {grid}");
    }
}

#[test]
fn unsupported_box_configurations_are_rejected() {
    let b = |w| BoxSpec { center: 0.0, width: w };
    assert!(matches!(box_convolution(&[b(1.0), b(2.0)], 0.0), Err(Error::Config(_))));
    assert!(box_convolution::<f64>(&[], 0.0).is_err());
    assert!(box_convolution(&vec![b(1.0); 9], 0.0).is_err());
}

proptest! {
    #[test]
    fn box_convolution_symmetry_and_translation(
        centers in proptest::collection::vec(-10.0f64..10.0, 5),
        x in -30.0f64..30.0,
        h in -5.0f64..5.0,
        rot in 0usize..5,
    ) {
        let boxes: Vec<BoxSpec<f64>> = centers.iter().map(|&c| BoxSpec { center: c, width: 2.5 }).collect();
        let v = box_convolution(&boxes, x).unwrap();
        let mut perm = boxes.clone();
        perm.rotate_left(rot);
        perm.swap(0, 4);
        prop_assert!((box_convolution(&perm, x).unwrap() - v).abs() <= 1e-9 * (1.0 + v.abs()));
        let shifted: Vec<BoxSpec<f64>> = boxes.iter().map(|b| BoxSpec { center: b.center + h, width: 2.5 }).collect();
        prop_assert!((box_convolution(&shifted, x + 5.0 * h).unwrap() - v).abs() <= 1e-9 * (1.0 + v.abs()));
    }
}

#[test]
fn box_lower_bound_holds_on_the_centre_block() {
    let r = verify_box_lower_bound(&[1.0, 4.0, 16.0], 400).unwrap();
    assert!(r.passed, "{}", r.to_table());
    assert!((r.statistic - 1.0).abs() < 1e-9, "minimum is attained at the block edge");
}

#[test]
fn free_evolution_ratios_are_exact() {
    let cfg = small_sweep();
    let reports = verify_upper_bounds(&cfg, &[(0, 0)]).unwrap();
    for m in &reports[0].measurements {
        if m.quantity.ends_with("FL1 ratio") {
            assert!((m.value - 2.0).abs() < 1e-12, "{}", m.value);
        }
    }
    // H^{-1}: ‖φ‖ ≤ R (2A/2π)^{1/2} ⟨2N - A/2⟩^{-1} ≪ R.
    assert!(reports[1].measurements.iter().all(|m| m.value < 1.0));
}

#[test]
fn upper_bound_ratios_are_bounded_on_a_small_sweep() {
    let cfg = small_sweep();
    let reports = verify_upper_bounds(&cfg, &[(1, 0), (0, 1), (1, 1)]).unwrap();
    assert_eq!(reports.len(), 6);
    for r in &reports {
        assert!(r.passed, "{}", r.to_table());
        assert!(r.measurements.iter().all(|m| m.value.is_finite() && m.value > 0.0));
    }
}

#[test]
fn higher_terms_vanish_as_time_goes_to_zero() {
    let cfg = small_sweep();
    let prm = cfg.params(32.0);
    let phi = make_phi(&prm, &prm.phi_grid(32)).unwrap();
    let tg = time_grid_for(&phi, prm.time, 1, 16.0).unwrap();
    let mut ev = PicardEvaluator::new(&phi, tg).unwrap();
    for (k, p) in [(1, 0), (0, 1)] {
        let g = ev.generation(k, p).unwrap();
        let norms: Vec<f64> = (0..5).map(|n| fl_norm(&g.frame(n), FlExponent::One)).collect();
        assert_eq!(norms[0], 0.0);
        assert!(norms.windows(2).all(|w| w[0] < w[1]), "{norms:?}");
        // Linear onset: the first two nonzero samples scale like t.
        assert!((norms[2] / norms[1] - 2.0).abs() < 0.05, "{norms:?}");
    }
}

#[test]
fn first_iterate_lower_bound_on_a_small_sweep() {
    let r = verify_first_iterate_lower_bound(&small_sweep()).unwrap();
    assert!(r.passed, "{}", r.to_table());
    let again = verify_first_iterate_lower_bound(&small_sweep()).unwrap();
    assert_eq!(r, again);
}

#[test]
fn first_iterate_preconditions_are_enforced() {
    let mut cfg = small_sweep();
    cfg.reference_time *= 2.0;
    assert!(matches!(verify_first_iterate_lower_bound(&cfg), Err(Error::Config(_))));
    let mut cfg = small_sweep();
    cfg.reference_amplitude = 1.0;
    assert!(matches!(verify_first_iterate_lower_bound(&cfg), Err(Error::Config(_))));
}

#[test]
fn quintic_phases_stay_in_the_positive_cone() {
    let cfg = small_sweep();
    let prm = cfg.params(32.0);
    let phi = make_phi(&prm, &prm.phi_grid(32)).unwrap();
    let c = min_phase_cosine(&phi, prm.block_width, 0.05 / (32.0 * 32.0), 7);
    assert!(c >= 0.5, "{c}");
}

#[test]
fn perturbation_stability_and_multilinear_expansion() {
    let cfg = small_sweep();
    let delta = cfg.block_width / cfg.points_per_width as f64;
    let psi = smooth_bump(delta, 2.0, cfg.s).unwrap();
    let r = verify_perturbation_stability(&cfg, &psi, 1).unwrap();
    assert!(r.passed, "{}", r.to_table());

    let zero = SpectralFunction::zeros(psi.grid);
    let r0 = verify_perturbation_stability(&cfg, &zero, 1).unwrap();
    assert!(r0.measurements.iter().all(|m| m.value == 0.0));
}

#[test]
fn perturbation_preconditions_are_enforced() {
    let cfg = small_sweep();
    let wide = default_perturbation(&cfg).unwrap();
    assert!(matches!(verify_perturbation_stability(&cfg, &wide, 1), Err(Error::Config(_))));
    let delta = cfg.block_width / cfg.points_per_width as f64;
    let big = smooth_bump(delta, 2.0, cfg.s).unwrap().scaled(num_complex::Complex::new(1e4, 0.0));
    assert!(matches!(verify_perturbation_stability(&cfg, &big, 1), Err(Error::Config(_))));
}

#[test]
fn reports_serialise() {
    let r = verify_box_lower_bound(&[1.0], 10).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"lemma\":\"2.8\""));
    assert!(r.to_table().contains("PASS"));
}

#[test]
fn series_ratio_report_is_consistent() {
    let cfg = small_sweep();
    let mut prm = cfg.params(32.0);
    prm.time = 1e-4 / (32.0 * 32.0);
    let r = verify_series_ratio(&prm, 32, 4.0).unwrap();
    assert_eq!(r.passed, r.statistic <= 1.0);
    assert!(r.measurements[0].value > 0.0);
}
