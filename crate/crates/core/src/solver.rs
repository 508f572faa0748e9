//! Pseudospectral integrator for the gauged equation on a periodic box
//! `[-L/2, L/2)`, and the gauge transform linking it to DNLS.
//!
//! The linear flow `e^{-itξ²}` is applied exactly (integrating factor); the
//! nonlinearity is evaluated pointwise on a grid zero-padded by
//! `dealias_factor`, then truncated back to the resolved modes.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::picard::{FrameAxis, FrameFile};
use crate::scalar::Real;
use crate::spectrum::{FrequencyGrid, SpectralFunction};

/// Default `c` in the step bound `dt ≤ c / ξ_max²`.
pub const DEFAULT_C_STAB: f64 = 10.0;

/// Share of the box, measured from the left edge, that must be nearly empty
/// before gauging.
pub const GAUGE_EDGE_FRACTION: f64 = 0.05;
/// Largest admissible mass fraction in that edge region.
pub const GAUGE_EDGE_MASS: f64 = 1e-6;

/// Periodic box, resolution and time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct TorusConfig<T> {
    #[serde(rename = "L")]
    pub period: T,
    pub modes: usize,
    pub dt: T,
    #[serde(default = "default_dealias")]
    pub dealias_factor: T,
    #[serde(default = "default_c_stab")]
    pub c_stab: T,
}

fn default_dealias<T: Real>() -> T {
    T::lit(3.0)
}

fn default_c_stab<T: Real>() -> T {
    T::lit(DEFAULT_C_STAB)
}

impl<T: Real> TorusConfig<T> {
    pub fn new(period: T, modes: usize, dt: T) -> Result<Self> {
        let c = TorusConfig { period, modes, dt, dealias_factor: T::lit(3.0), c_stab: T::lit(DEFAULT_C_STAB) };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > T::zero()) || !self.period.is_finite() {
            return Err(Error::config("period L must be positive"));
        }
        if self.modes < 4 || !self.modes.is_power_of_two() {
            return Err(Error::config(format!("modes must be a power of two ≥ 4, got {}", self.modes)));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::config("dt must be positive"));
        }
        if !(self.dealias_factor >= T::lit(3.0)) {
            return Err(Error::config("dealias_factor must be at least 3 for quintic products"));
        }
        if !(self.c_stab > T::zero()) {
            return Err(Error::config("c_stab must be positive"));
        }
        Ok(())
    }

    pub fn dx(&self) -> T {
        self.period / T::of_usize(self.modes)
    }

    /// Frequency spacing `2π/L`.
    pub fn delta_xi(&self) -> T {
        T::TAU() / self.period
    }

    /// Largest resolved frequency `πM/L`.
    pub fn xi_max(&self) -> T {
        self.delta_xi() * T::of_usize(self.modes / 2)
    }

    pub fn x(&self, j: usize) -> T {
        -self.period * T::lit(0.5) + T::of_usize(j) * self.dx()
    }

    /// Padded grid size for the nonlinear evaluation.
    pub fn padded_modes(&self) -> usize {
        (self.dealias_factor * T::of_usize(self.modes)).ceil().to_usize().expect("finite")
    }

    pub fn check_step(&self, h: T) -> Result<()> {
        let bound = self.c_stab / (self.xi_max() * self.xi_max());
        if h.abs() > bound * (T::one() + T::lit(1e-12)) {
            return Err(Error::config(format!(
                "time step {h} exceeds the stability bound {bound} = c_stab/ξ_max²"
            )));
        }
        Ok(())
    }

    /// Frequency of FFT-ordered mode `k`.
    fn mode_xi(&self, k: usize) -> T {
        let m = self.modes as i64;
        let k = k as i64;
        let signed = if k < m / 2 { k } else { k - m };
        T::of_i64(signed) * self.delta_xi()
    }
}

/// Samples `v(x_j)`, `x_j = -L/2 + jL/M`, at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalState<T> {
    pub config: TorusConfig<T>,
    pub samples: Vec<Complex<T>>,
    pub time: T,
}

impl<T: Real> PhysicalState<T> {
    pub fn new(config: TorusConfig<T>, samples: Vec<Complex<T>>, time: T) -> Result<Self> {
        config.validate()?;
        if samples.len() != config.modes {
            return Err(Error::config(format!("{} samples for {} modes", samples.len(), config.modes)));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::BlowUp { time: time.as_f64() });
        }
        Ok(PhysicalState { config, samples, time })
    }

    /// State whose transform `∫ v e^{-ixξ} dx` equals `spec` on the lattice
    /// `(2π/L)ℤ`. `spec` must sit on that lattice within the resolved band.
    pub fn from_spectrum(config: TorusConfig<T>, spec: &SpectralFunction<T>) -> Result<Self> {
        config.validate()?;
        let d = config.delta_xi();
        if (spec.grid.delta_xi - d).abs() > d * T::lit(1e-9) {
            return Err(Error::config(format!(
                "spectrum spacing {} does not match the box spacing 2π/L = {d}",
                spec.grid.delta_xi
            )));
        }
        let start = spec.grid.lattice_start()?;
        let m = config.modes as i64;
        let zero = Complex::new(T::zero(), T::zero());
        let mut c = vec![zero; config.modes];
        let scale = T::one() / config.period;
        for (j, z) in spec.values.iter().enumerate() {
            let k = start + j as i64;
            if *z == zero {
                continue;
            }
            if k < -m / 2 + 1 || k >= m / 2 {
                return Err(Error::config(format!("spectrum has mass at mode {k}, outside the {m} resolved modes")));
            }
            // Box origin at -L/2 turns e^{iξx} into (-1)^k e^{iξ(x + L/2)}.
            let sign = if k.rem_euclid(2) == 0 { T::one() } else { -T::one() };
            c[k.rem_euclid(m) as usize] = z * scale * sign;
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_inverse(config.modes).process(&mut c);
        PhysicalState::new(config, c, T::zero())
    }

    /// `v̂(ξ_k)` for `k = -M/2..M/2`, as a lattice function.
    pub fn to_spectrum(&self) -> SpectralFunction<T> {
        let m = self.config.modes;
        let mut c = self.samples.clone();
        FftPlanner::new().plan_fft_forward(m).process(&mut c);
        let scale = self.config.dx();
        let half = (m / 2) as i64;
        let grid = FrequencyGrid::lattice(self.config.delta_xi(), -half, m);
        let values = (-half..half)
            .map(|k| {
                let sign = if k.rem_euclid(2) == 0 { T::one() } else { -T::one() };
                c[k.rem_euclid(m as i64) as usize] * scale * sign
            })
            .collect();
        SpectralFunction { grid, values }
    }

    /// `∫|v|² dx` by the rectangle rule (exact for trigonometric polynomials).
    pub fn mass(&self) -> T {
        self.samples.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b) * self.config.dx()
    }

    /// `‖v‖_{L²}` in the frequency normalisation of the spectrum module.
    pub fn l2(&self) -> T {
        self.mass().sqrt()
    }
}

/// Relative mass drift per unit time between two states.
pub fn mass_drift<T: Real>(a: &PhysicalState<T>, b: &PhysicalState<T>) -> f64 {
    let (ma, mb) = (a.mass().as_f64(), b.mass().as_f64());
    let dt = (b.time - a.time).as_f64().abs().max(f64::MIN_POSITIVE);
    ((mb - ma) / ma).abs() / dt
}

fn edge_check<T: Real>(u: &PhysicalState<T>) -> Result<()> {
    let total = u.mass().as_f64();
    if total == 0.0 {
        return Ok(());
    }
    let edge = ((u.config.modes as f64) * GAUGE_EDGE_FRACTION).ceil() as usize;
    let left: f64 = u.samples[..edge].iter().map(|z| z.norm_sqr().as_f64()).sum::<f64>() * u.config.dx().as_f64();
    if left > GAUGE_EDGE_MASS * total {
        return Err(Error::config(format!(
            "gauge needs decay at the left edge: {:.3e} of the mass lies in the leftmost {}% of the box",
            left / total,
            GAUGE_EDGE_FRACTION * 100.0
        )));
    }
    Ok(())
}

/// `Φ(x_j) = ∫_{-L/2}^{x_j} |f|²`, integrated spectrally.
///
/// `|f|²` is formed on a twice-finer grid so that it is alias-free, then
/// integrated term by term: `∫ e^{iξy} = (e^{iξy} - 1)/(iξ)` and the mean
/// grows linearly. A cumulative trapezoid rule would only be second order.
fn phase<T: Real>(f: &PhysicalState<T>) -> Vec<T> {
    let m = f.config.modes;
    let p = 2 * m;
    let zero = Complex::new(T::zero(), T::zero());
    let mut planner = FftPlanner::new();
    let mut c = f.samples.clone();
    planner.plan_fft_forward(m).process(&mut c);
    let mut fine = vec![zero; p];
    let s = T::one() / T::of_usize(m);
    for k in 0..m {
        if k == m / 2 {
            continue;
        }
        let dst = if k < m / 2 { k } else { p - (m - k) };
        fine[dst] = c[k] * s;
    }
    planner.plan_fft_inverse(p).process(&mut fine);
    for z in fine.iter_mut() {
        *z = Complex::new(z.norm_sqr(), T::zero());
    }
    planner.plan_fft_forward(p).process(&mut fine);
    let s = T::one() / T::of_usize(p);
    let mean = fine[0].re * s;
    let d = f.config.delta_xi();
    let mut shift = zero;
    for (k, z) in fine.iter_mut().enumerate() {
        if k == 0 || k == p / 2 {
            *z = zero;
            continue;
        }
        let signed = if k < p / 2 { k as i64 } else { k as i64 - p as i64 };
        *z = *z * s / Complex::new(T::zero(), T::of_i64(signed) * d);
        shift += *z;
    }
    planner.plan_fft_inverse(p).process(&mut fine);
    (0..m)
        .map(|j| mean * T::of_usize(j) * f.config.dx() + (fine[2 * j] - shift).re)
        .collect()
}

/// `e^{-i∫_{-∞}^x |u|²} u`, with the integral anchored at the left edge.
pub fn gauge<T: Real>(u: &PhysicalState<T>) -> Result<PhysicalState<T>> {
    edge_check(u)?;
    let phi = phase(u);
    let samples = u.samples.iter().zip(&phi).map(|(z, &p)| z * Complex::cis(-p)).collect();
    Ok(PhysicalState { samples, ..u.clone() })
}

/// Inverse of [`gauge`]; `|v| = |u|` so the phase is computed from `v`.
pub fn ungauge<T: Real>(v: &PhysicalState<T>) -> Result<PhysicalState<T>> {
    edge_check(v)?;
    let phi = phase(v);
    let samples = v.samples.iter().zip(&phi).map(|(z, &p)| z * Complex::cis(p)).collect();
    Ok(PhysicalState { samples, ..v.clone() })
}

/// Pointwise nonlinearity `N(v, ∂ₓv)` of `v_t = i v_xx + N`.
pub trait Nonlinearity<T: Real> {
    fn eval(&self, v: Complex<T>, dv: Complex<T>) -> Complex<T>;
}

/// `N(v) = -v²∂ₓv̄ + (i/2)|v|⁴v`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaugedDnls;

impl<T: Real> Nonlinearity<T> for GaugedDnls {
    fn eval(&self, v: Complex<T>, dv: Complex<T>) -> Complex<T> {
        let m = v.norm_sqr();
        -(v * v * dv.conj()) + Complex::new(T::zero(), T::lit(0.5) * m * m) * v
    }
}

/// Integrating-factor RK4 stepper holding its FFT plans and buffers.
pub struct Integrator<T: Real> {
    config: TorusConfig<T>,
    fft_m: (Arc<dyn Fft<T>>, Arc<dyn Fft<T>>),
    fft_p: (Arc<dyn Fft<T>>, Arc<dyn Fft<T>>),
    xi: Vec<T>,
    pad: Vec<Complex<T>>,
    dpad: Vec<Complex<T>>,
}

impl<T: Real> Integrator<T> {
    pub fn new(config: TorusConfig<T>) -> Result<Self> {
        config.validate()?;
        let mut planner = FftPlanner::new();
        let m = config.modes;
        let p = config.padded_modes();
        let zero = Complex::new(T::zero(), T::zero());
        Ok(Integrator {
            fft_m: (planner.plan_fft_forward(m), planner.plan_fft_inverse(m)),
            fft_p: (planner.plan_fft_forward(p), planner.plan_fft_inverse(p)),
            xi: (0..m).map(|k| config.mode_xi(k)).collect(),
            pad: vec![zero; p],
            dpad: vec![zero; p],
            config,
        })
    }

    pub fn config(&self) -> &TorusConfig<T> {
        &self.config
    }

    /// Fourier coefficients `c_k` with `v(x_j) = Σ c_k e^{iξ_k(x_j + L/2)}`.
    pub fn coefficients(&self, samples: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut c = samples.to_vec();
        self.fft_m.0.process(&mut c);
        let s = T::one() / T::of_usize(self.config.modes);
        for z in c.iter_mut() {
            *z *= s;
        }
        c[self.config.modes / 2] = Complex::new(T::zero(), T::zero());
        c
    }

    pub fn samples(&self, c: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut v = c.to_vec();
        self.fft_m.1.process(&mut v);
        v
    }

    /// Dealiased coefficients of `N(v, ∂ₓv)`, Nyquist mode zeroed.
    pub fn nonlinear<N: Nonlinearity<T>>(&mut self, c: &[Complex<T>], nl: &N) -> Vec<Complex<T>> {
        let m = self.config.modes;
        let p = self.pad.len();
        let zero = Complex::new(T::zero(), T::zero());
        self.pad.fill(zero);
        self.dpad.fill(zero);
        for k in 0..m {
            if k == m / 2 {
                continue;
            }
            let dst = if k < m / 2 { k } else { p - (m - k) };
            self.pad[dst] = c[k];
            self.dpad[dst] = c[k] * Complex::new(T::zero(), self.xi[k]);
        }
        self.fft_p.1.process(&mut self.pad);
        self.fft_p.1.process(&mut self.dpad);
        for (v, dv) in self.pad.iter_mut().zip(&self.dpad) {
            *v = nl.eval(*v, *dv);
        }
        self.fft_p.0.process(&mut self.pad);
        let s = T::one() / T::of_usize(p);
        (0..m)
            .map(|k| {
                if k == m / 2 {
                    zero
                } else {
                    let src = if k < m / 2 { k } else { p - (m - k) };
                    self.pad[src] * s
                }
            })
            .collect()
    }

    /// One Lawson RK4 step of size `h` (may be negative) on coefficients.
    pub fn step<N: Nonlinearity<T>>(&mut self, c: &mut [Complex<T>], h: T, nl: &N) {
        let e: Vec<Complex<T>> = self.xi.iter().map(|&x| Complex::cis(-x * x * h)).collect();
        let e2: Vec<Complex<T>> = self.xi.iter().map(|&x| Complex::cis(-x * x * h * T::lit(0.5))).collect();
        let hc = Complex::new(h, T::zero());
        let half = T::lit(0.5);
        let zip = |a: &[Complex<T>], f: &dyn Fn(usize, Complex<T>) -> Complex<T>| -> Vec<Complex<T>> {
            a.iter().enumerate().map(|(k, z)| f(k, *z)).collect()
        };
        let a: Vec<_> = self.nonlinear(c, nl).into_iter().map(|z| z * hc).collect();
        let arg = zip(c, &|k, z| e2[k] * (z + a[k] * half));
        let b: Vec<_> = self.nonlinear(&arg, nl).into_iter().map(|z| z * hc).collect();
        let arg = zip(c, &|k, z| e2[k] * z + b[k] * half);
        let cc: Vec<_> = self.nonlinear(&arg, nl).into_iter().map(|z| z * hc).collect();
        let arg = zip(c, &|k, z| e[k] * z + e2[k] * cc[k]);
        let d: Vec<_> = self.nonlinear(&arg, nl).into_iter().map(|z| z * hc).collect();
        let sixth = T::one() / T::lit(6.0);
        for k in 0..c.len() {
            c[k] = e[k] * c[k] + (e[k] * a[k] + e2[k] * (b[k] + cc[k]) * T::lit(2.0) + d[k]) * sixth;
        }
    }

    /// Integrates from `v0` to `v0.time + duration` (negative allowed) with
    /// steps no longer than `dt`, keeping every `checkpoint_every`-th state and
    /// the final one.
    pub fn run<N: Nonlinearity<T>>(
        &mut self,
        v0: &PhysicalState<T>,
        duration: T,
        checkpoint_every: usize,
        nl: &N,
    ) -> Result<Vec<PhysicalState<T>>> {
        if v0.config != self.config {
            return Err(Error::config("state and integrator use different torus configurations"));
        }
        let mut out = vec![v0.clone()];
        if duration == T::zero() {
            return Ok(out);
        }
        let steps = (duration.abs() / self.config.dt).ceil().to_usize().expect("finite").max(1);
        let h = duration / T::of_usize(steps);
        self.config.check_step(h)?;
        let mut c = self.coefficients(&v0.samples);
        let every = checkpoint_every.max(1);
        for n in 1..=steps {
            self.step(&mut c, h, nl);
            let t = v0.time + h * T::of_usize(n);
            if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::BlowUp { time: t.as_f64() });
            }
            if n % every == 0 || n == steps {
                out.push(PhysicalState { config: self.config, samples: self.samples(&c), time: t });
            }
        }
        if let Some(last) = out.last_mut() {
            last.time = v0.time + duration;
        }
        Ok(out)
    }
}

/// One integrating-factor RK4 step of the gauged equation with `dt`.
pub fn step_gdnls<T: Real>(v: &PhysicalState<T>) -> Result<PhysicalState<T>> {
    let mut it = Integrator::new(v.config)?;
    let dt = v.config.dt;
    it.run(v, dt, 1, &GaugedDnls).map(|mut s| s.pop().expect("final state"))
}

/// Gauged flow from `v0` over `duration`; checkpoints every
/// `checkpoint_every` steps plus the final state (time `v0.time + duration`).
pub fn solve_gdnls<T: Real>(
    v0: &PhysicalState<T>,
    duration: T,
    checkpoint_every: usize,
) -> Result<Vec<PhysicalState<T>>> {
    Integrator::new(v0.config)?.run(v0, duration, checkpoint_every, &GaugedDnls)
}

/// Position-axis frame file of a trajectory.
pub fn trajectory_frames<T: Real>(states: &[PhysicalState<T>]) -> Result<FrameFile> {
    let first = states.first().ok_or_else(|| Error::config("empty trajectory"))?;
    let cfg = first.config;
    Ok(FrameFile {
        axis: FrameAxis::Position,
        axis_min: cfg.x(0).as_f64(),
        step: cfg.dx().as_f64(),
        points: cfg.modes,
        times: states.iter().map(|s| s.time.as_f64()).collect(),
        values: states
            .iter()
            .flat_map(|s| s.samples.iter().map(|z| Complex::new(z.re.as_f64(), z.im.as_f64())))
            .collect(),
    })
}
