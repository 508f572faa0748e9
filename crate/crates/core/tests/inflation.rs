use niq_core::inflation::{
    check_conditions, choose_params, exponent_identities, results_csv, run_experiment, run_point, strictly_increasing,
    ExperimentOptions, Method, Perturbation, CSV_HEADER,
};
use niq_core::spectrum::RegularityCase;

fn opts() -> ExperimentOptions {
    ExperimentOptions { margin_factor: 1.0, ..Default::default() }
}

#[test]
fn params_follow_power_laws() {
    let n = 512.0_f64;
    let p = choose_params(-0.25, n, 0.01).unwrap();
    assert_eq!(p.case, RegularityCase::Case3);
    assert!((p.block_width.ln() / n.ln() - 0.5225).abs() < 1e-12);
    assert!((p.amplitude.ln() / n.ln() + 0.02125).abs() < 1e-12);
    assert!((p.time.ln() / n.ln() + 2.01).abs() < 1e-12);

    let p = choose_params(-1.0, 1024.0, 1.0).unwrap();
    assert!((p.block_width - 1024.0_f64.powf(0.2)).abs() < 1e-12);
    assert!((p.amplitude - 32.0).abs() < 1e-12);
    let p = choose_params(-0.5, 1024.0, 0.75).unwrap();
    let l = 1024.0_f64.ln();
    assert!((p.block_width - l * l.sqrt()).abs() < 1e-12);
    assert!((p.amplitude - 32.0 / l).abs() < 1e-12);
}

#[test]
fn invalid_regimes_name_the_inequality() {
    let e = choose_params(-0.6, 256.0, 2.0).unwrap_err().to_string();
    assert!(e.contains("s + 1/2"), "{e}");
    let e = choose_params(-0.25, 256.0, 0.3).unwrap_err().to_string();
    assert!(e.contains("2s + 9δ/4"), "{e}");
    let e = choose_params(-0.1, 256.0, 0.05).unwrap_err().to_string();
    assert!(e.contains("2s²"), "{e}");
    assert!(choose_params(0.0, 256.0, 0.1).is_err());
    assert!(choose_params(-1.0, 256.0, 0.0).is_err());
}

#[test]
fn identities_hold_in_every_regime() {
    for (s, d) in [(-1.0, 1.0), (-0.8, 0.5), (-0.5, 0.75), (-0.25, 0.01), (-0.4, 0.1)] {
        for n in [64.0, 256.0, 4096.0] {
            let p = choose_params(s, n, d).unwrap();
            for id in exponent_identities(&p) {
                assert!(id.relative_error < 1e-12, "s={s} N={n} {}: {:?}", id.name, id);
            }
        }
    }
}

#[test]
fn plan_regimes_pass_all_conditions() {
    for (s, d, sweep) in [(-1.0, 1.0, [256.0, 1024.0, 4096.0]), (-0.5, 0.75, [256.0, 512.0, 1024.0]), (-0.25, 0.01, [128.0, 256.0, 512.0])] {
        for n in sweep {
            let p = choose_params(s, n, d).unwrap();
            let rep = check_conditions(&p, 1, 1.0);
            assert!(rep.all_passed, "s={s} N={n}: {:?}", rep.margins());
            assert!(rep.s_zero_conflict.is_none());
        }
    }
}

#[test]
fn margins_match_direct_formulas() {
    let p = choose_params(-0.25, 256.0, 0.01).unwrap();
    let (n, a, r, t) = (256.0_f64, p.block_width, p.amplitude, p.time);
    let m = check_conditions(&p, 3, 1.0).margins();
    let expect = [
        1.0 / 3.0 / (n.powf(-0.25) * r * a.sqrt()),
        1.0 / (t * r.powi(4) * a.powi(4)),
        niq_core::estimates::f_s(-0.25, a) * t * r.powi(5) * a.powi(4) / 3.0,
        r * r * a * a / n,
        n / a,
        1.0 / (n * n * t),
    ];
    for (got, want) in m.iter().zip(expect) {
        assert!((got / want - 1.0).abs() < 1e-12, "{got} vs {want}");
    }
}


#[test]
fn s_zero_always_conflicts() {
    // m_i² · m_iv · m_v = 1/n², so the three can never all exceed one.
    for (n_big, a, r) in [(256.0, 4.0, 0.1), (1000.0, 30.0, 2.0), (64.0, 1.0, 0.5)] {
        let p = niq_core::ParameterSet64 {
            s: 0.0,
            freq_scale: n_big,
            block_width: a,
            amplitude: r,
            time: 1e-9,
            delta: 0.1,
            case: RegularityCase::Case3,
        };
        for n in [1, 2, 5] {
            let rep = check_conditions(&p, n, 1.0);
            let m = rep.margins();
            let prod = m[0] * m[0] * m[3] * m[4];
            assert!((prod * (n * n) as f64 - 1.0).abs() < 1e-9);
            assert!(!rep.all_passed);
            assert!(rep.s_zero_conflict.as_deref().unwrap().contains("incompatible"));
        }
    }
}

#[test]
fn time_window_flag() {
    let p = choose_params(-1.0, 256.0, 1.0).unwrap();
    let ra4 = (p.amplitude * p.block_width).powi(4);
    assert_eq!(check_conditions(&p, 2, 1.0).time_in_unit_window, ra4 >= 2.0);
}

#[test]
fn point_series_and_solver_agree() {
    let p = choose_params(-0.5, 256.0, 0.75).unwrap();
    let o = ExperimentOptions { points_per_width: 32, ..opts() };
    let r = run_point(&p, &Perturbation::default(), 1, Method::Both, &o).unwrap();
    let (a, b) = (r.series_final.unwrap(), r.solver_final.unwrap());
    assert!((a - b).abs() / a < 1e-3, "series {a} solver {b}");
    // drift is per unit time; the horizon is tiny, so compare the relative change itself
    assert!(r.solver_mass_drift.unwrap() * p.time < 1e-12);
    let d = r.decomposition.unwrap();
    assert!(d.lower_bound <= r.norm_final + 1e-9);
    assert!(r.ratio > 0.0 && (r.ratio - r.norm_final / r.norm_initial_gap).abs() < 1e-12);
}

#[test]
fn gap_is_phi_norm() {
    // ‖φ‖_{H^s} ≈ R A^{1/2} N^s up to the fixed bump profile: the scaled gap stays put.
    let o = ExperimentOptions { points_per_width: 32, ..opts() };
    let res = run_experiment(-0.5, 0.75, &Perturbation::Zero, &[256.0, 512.0], 1, Method::Series, &o).unwrap();
    let scaled: Vec<f64> = res
        .iter()
        .map(|r| r.norm_initial_gap / (r.params.freq_scale.powf(-0.5) * r.params.amplitude * r.params.block_width.sqrt()))
        .collect();
    assert!((scaled[0] / scaled[1] - 1.0).abs() < 0.1, "{scaled:?}");
    let csv = results_csv(&res);
    assert!(csv.starts_with(CSV_HEADER));
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), CSV_HEADER.split(',').count());
}

#[test]
fn perturbation_radius_precondition() {
    let p = choose_params(-0.25, 64.0, 0.01).unwrap();
    let e = run_point(&p, &Perturbation::Bump { radius: 8.0 }, 1, Method::Series, &opts()).unwrap_err();
    assert!(e.to_string().contains("radius"));
}

#[test]
fn monotone_check() {
    let o = ExperimentOptions { points_per_width: 32, ..opts() };
    let res = run_experiment(-0.5, 0.75, &Perturbation::default(), &[256.0, 512.0], 1, Method::Series, &o).unwrap();
    assert_eq!(strictly_increasing(&res), res[1].ratio > res[0].ratio);
}

#[test]
fn method_parses() {
    assert_eq!("both".parse::<Method>().unwrap(), Method::Both);
    assert!("rk4".parse::<Method>().is_err());
}
