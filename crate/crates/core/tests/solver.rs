use std::f64::consts::PI;

use niq_core::picard::{series_sum, FrameAxis, FrameFile};
use niq_core::solver::{
    gauge, mass_drift, solve_gdnls, step_gdnls, trajectory_frames, ungauge, GaugedDnls, Integrator,
    Nonlinearity, PhysicalState, TorusConfig,
};
use niq_core::spectrum::{make_phi, ParameterSet, RegularityCase};
use niq_core::Error;
use num_complex::Complex;

type C = Complex<f64>;

/// `u_t = i u_xx + ∂ₓ(|u|²u)`, the ungauged equation.
struct Dnls;

impl Nonlinearity<f64> for Dnls {
    fn eval(&self, u: C, du: C) -> C {
        2.0 * u.norm_sqr() * du + u * u * du.conj()
    }
}

struct Linear;

impl Nonlinearity<f64> for Linear {
    fn eval(&self, _: C, _: C) -> C {
        C::new(0.0, 0.0)
    }
}

fn cfg(l: f64, m: usize, dt: f64) -> TorusConfig<f64> {
    TorusConfig::new(l, m, dt).unwrap()
}

fn state(c: TorusConfig<f64>, f: impl Fn(f64) -> C) -> PhysicalState<f64> {
    PhysicalState::new(c, (0..c.modes).map(|j| f(c.x(j))).collect(), 0.0).unwrap()
}

fn rel(a: &PhysicalState<f64>, b: &PhysicalState<f64>) -> f64 {
    let num: f64 = a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.samples.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn wave_packet(x: f64) -> C {
    0.4 * (-(x * x) / 4.0).exp() * C::cis(0.7 * x)
}

#[test]
fn zero_state_stays_zero() {
    let c = cfg(20.0 * PI, 128, 0.01);
    let z = state(c, |_| C::new(0.0, 0.0));
    assert!(step_gdnls(&z).unwrap().samples.iter().all(|v| v.norm() == 0.0));
    assert!(gauge(&z).unwrap().samples.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn linear_flow_is_exact() {
    let c = cfg(20.0 * PI, 128, 0.05);
    let u = state(c, wave_packet);
    let t = 1.3;
    let out = Integrator::new(c).unwrap().run(&u, t, 1, &Linear).unwrap().pop().unwrap();
    let spec = u.to_spectrum();
    let exact = niq_core::spectrum::free_evolve(&spec, t);
    let got = out.to_spectrum();
    let err = got.sub(&exact).unwrap();
    let e = niq_core::spectrum::sobolev_norm(&err, 0.0) / niq_core::spectrum::sobolev_norm(&exact, 0.0);
    assert!(e < 1e-13, "{e:e}");
}

#[test]
fn mass_is_conserved() {
    let c = cfg(20.0 * PI, 256, 0.005);
    let u = state(c, wave_packet);
    let traj = solve_gdnls(&u, 1.0, 50).unwrap();
    assert_eq!(traj.len(), 5);
    assert_eq!(traj.last().unwrap().time, 1.0);
    let drift = mass_drift(&traj[0], traj.last().unwrap());
    assert!(drift <= 1e-8, "relative mass drift per unit time {drift:e}");
}

#[test]
fn time_stepping_is_fourth_order() {
    let run = |dt: f64| {
        let c = cfg(20.0 * PI, 256, dt);
        let u = state(c, |x| 2.0 * wave_packet(x));
        solve_gdnls(&u, 0.5, 1000).unwrap().pop().unwrap()
    };
    let (a, b, r) = (run(0.02), run(0.01), run(0.005));
    let e1 = rel(&a, &r);
    let e2 = rel(&b, &r);
    let order = ((e1 - e2) / e2).log2();
    assert!(order >= 3.5, "observed order {order} ({e1:e}, {e2:e})");
}

#[test]
fn gauge_is_unimodular_and_invertible() {
    let c = cfg(40.0 * PI, 512, 0.01);
    let u = state(c, |x| wave_packet(x) * (1.0 + 0.3 * x.sin()));
    let v = gauge(&u).unwrap();
    for (a, b) in u.samples.iter().zip(&v.samples) {
        assert!((a.norm() - b.norm()).abs() < 1e-15);
    }
    let back = ungauge(&v).unwrap();
    assert!(rel(&back, &u) < 1e-10);
}

#[test]
fn gauge_requires_decay_at_the_left_edge() {
    let c = cfg(20.0 * PI, 128, 0.01);
    let u = state(c, |x| C::new((0.1 * x).cos(), 0.0));
    assert!(matches!(gauge(&u), Err(Error::Config(_))));
}

#[test]
fn gauge_intertwines_the_two_flows() {
    let c = cfg(40.0 * PI, 512, 0.002);
    let u0 = state(c, wave_packet);
    let t = 0.1;
    let u_t = Integrator::new(c).unwrap().run(&u0, t, 1000, &Dnls).unwrap().pop().unwrap();
    let v_t = solve_gdnls(&gauge(&u0).unwrap(), t, 1000).unwrap().pop().unwrap();
    let e = rel(&gauge(&u_t).unwrap(), &v_t);
    assert!(e <= 1e-6, "equivariance defect {e:e}");
}

#[test]
fn reversing_time_recovers_the_data() {
    let c = cfg(20.0 * PI, 256, 0.005);
    let u = state(c, wave_packet);
    let fwd = solve_gdnls(&u, 0.5, 1000).unwrap().pop().unwrap();
    let back = solve_gdnls(&fwd, -0.5, 1000).unwrap().pop().unwrap();
    assert!(back.time.abs() < 1e-15);
    assert!(rel(&back, &u) <= 1e-7);
}

#[test]
fn padded_products_are_alias_free() {
    let base = cfg(20.0 * PI, 64, 0.01);
    let u = state(base, |x| 0.5 * (-(x * x) / 2.0).exp() * C::cis(2.0 * x));
    let mut nl = Vec::new();
    for factor in [3.0, 4.0, 2.0] {
        let c = TorusConfig { dealias_factor: factor, ..base };
        let mut it = Integrator::new(TorusConfig { dealias_factor: 3.0_f64.max(factor), ..c }).unwrap();
        if factor < 3.0 {
            // Build a deliberately under-padded evaluation for contrast.
            let m = c.modes;
            let p = 2 * m;
            let coeffs = it.coefficients(&u.samples);
            let mut pad = vec![C::new(0.0, 0.0); p];
            let mut dpad = pad.clone();
            let xi = |k: usize| if k < m / 2 { k as f64 } else { k as f64 - m as f64 } * c.delta_xi();
            for k in 0..m {
                let dst = if k < m / 2 { k } else { p - (m - k) };
                pad[dst] = coeffs[k];
                dpad[dst] = coeffs[k] * C::new(0.0, xi(k));
            }
            let mut planner = rustfft::FftPlanner::new();
            planner.plan_fft_inverse(p).process(&mut pad);
            planner.plan_fft_inverse(p).process(&mut dpad);
            for (v, dv) in pad.iter_mut().zip(&dpad) {
                *v = GaugedDnls.eval(*v, *dv);
            }
            planner.plan_fft_forward(p).process(&mut pad);
            let out: Vec<C> = (0..m).map(|k| pad[if k < m / 2 { k } else { p - (m - k) }] / p as f64).collect();
            nl.push(out);
        } else {
            let coeffs = it.coefficients(&u.samples);
            nl.push(it.nonlinear(&coeffs, &GaugedDnls));
        }
    }
    let diff = |a: &[C], b: &[C]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let scale = nl[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff(&nl[0], &nl[1]) < 1e-13 * scale);
    assert!(diff(&nl[0], &nl[2]) > 1e-6 * scale, "two-fold padding should alias");
    assert_eq!(nl[0][32], C::new(0.0, 0.0));
}

#[test]
fn oversized_step_is_rejected() {
    let c = cfg(20.0 * PI, 256, 0.5);
    let u = state(c, wave_packet);
    assert!(matches!(solve_gdnls(&u, 1.0, 1), Err(Error::Config(_))));
}

#[test]
fn blow_up_is_reported_with_its_time() {
    let mut c = cfg(20.0 * PI, 64, 0.5);
    c.c_stab = 1e9;
    let u = state(c, |x| 30.0 * wave_packet(x));
    match solve_gdnls(&u, 50.0, 1) {
        Err(Error::BlowUp { time }) => assert!(time > 0.0 && time <= 50.0),
        other => panic!("expected blow-up, got {:?}", other.map(|v| v.len())),
    }
}

#[test]
fn trajectory_frames_round_trip() {
    let c = cfg(20.0 * PI, 64, 0.01);
    let u = state(c, wave_packet);
    let traj = solve_gdnls(&u, 0.05, 2).unwrap();
    let file = trajectory_frames(&traj).unwrap();
    assert_eq!(file.axis, FrameAxis::Position);
    assert_eq!(file.times.len(), 4);
    let mut bytes = Vec::new();
    file.write(&mut bytes).unwrap();
    assert_eq!(FrameFile::read(&bytes[..]).unwrap(), file);
}

#[test]
fn small_data_solution_matches_truncated_series() {
    let p = ParameterSet {
        s: -1.0,
        freq_scale: 4.0,
        block_width: 2.0,
        amplitude: 0.5,
        time: 0.05 / 16.0,
        delta: 0.1,
        case: RegularityCase::Case1,
    };
    let phi = make_phi(&p, &p.phi_grid(32)).unwrap();
    let d = phi.grid.delta_xi;
    let c = TorusConfig::new(2.0 * PI / d, 4096, 1e-4).unwrap();
    let v0 = PhysicalState::from_spectrum(c, &phi).unwrap();
    let v_t = solve_gdnls(&v0, p.time, 1000).unwrap().pop().unwrap().to_spectrum();
    let series = series_sum(&phi, p.time, 2).unwrap();
    let diff = v_t.sub(&series.sum).unwrap();
    let l2 = |f: &niq_core::SpectralFunction64| niq_core::spectrum::sobolev_norm(f, 0.0);
    let rel = l2(&diff) / l2(&series.sum);
    let tol = series.tail_estimate.unwrap() / l2(&series.sum);
    assert!(rel <= tol.max(1e-4), "relative difference {rel:e}, tolerance {tol:e}");
    // The first correction is far above that difference, so the comparison
    // actually tests the nonlinear terms.
    assert!(series.level_norms[1] / l2(&series.sum) > 100.0 * rel);
}
