//! Numerical checks of the multilinear bounds on the two-block datum: exact
//! box convolutions, the `f_s` weight, and measured-constant reports over a
//! sweep in `N`.
//!
//! Upper bounds are judged by stability, never by absolute constants: a
//! measured ratio passes if it stays within `growth_tolerance` of its value at
//! the first swept `N`.

use std::fmt::Write as _;

use num_complex::Complex;
use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::picard::{
    psi_assigned_final, time_grid_for, PicardEvaluator, SpaceTimeFunction, DEFAULT_TIME_FACTOR,
};
use crate::scalar::Real;
use crate::spectrum::{
    fl_inf_derivative, fl_norm, make_phi, smooth_bump, sobolev_norm, FlExponent, ParameterSet, RegularityCase,
    SpectralFunction, DEFAULT_POINTS_PER_WIDTH,
};
use crate::trees::{enumerate_trees_capped, Tree};

/// Weight `f_s(A)` in the Sobolev bounds: `1` for `s < -1/2`, `(log A)^{1/2}`
/// at `s = -1/2`, `A^{1/2+s}` above.
pub fn f_s<T: Real>(s: T, a: T) -> T {
    match RegularityCase::from_s(s.as_f64()) {
        RegularityCase::Case1 => T::one(),
        RegularityCase::Case2 => a.ln().sqrt(),
        RegularityCase::Case3 => a.powf(T::lit(0.5) + s),
    }
}

/// Box `center + [-width/2, width/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec<T> {
    pub center: T,
    pub width: T,
}

/// Largest number of boxes accepted by [`box_convolution`].
pub const MAX_BOXES: usize = 8;

/// Cardinal B-spline `M_n` of order `n` (support `[-n/2, n/2]`), the `n`-fold
/// convolution of the unit box. Exact in any ordered field.
pub fn cardinal_bspline<T>(n: usize, x: T) -> T
where
    T: Num + Clone + PartialOrd + FromPrimitive,
{
    assert!(n >= 1);
    let of = |v: i64| T::from_i64(v).expect("small integer");
    let half_n = T::from_i64(n as i64).unwrap() / of(2);
    let mut sum = T::zero();
    let mut binom: i64 = 1;
    let mut fact: i64 = 1;
    for i in 1..n as i64 {
        fact *= i;
    }
    for k in 0..=n as i64 {
        let u = x.clone() + half_n.clone() - of(k);
        if u >= T::zero() {
            let mut p = T::one();
            for _ in 0..n - 1 {
                p = p * u.clone();
            }
            let term = of(binom) * p;
            sum = if k % 2 == 0 { sum + term } else { sum - term };
        }
        binom = binom * (n as i64 - k) / (k + 1);
    }
    sum / of(fact)
}

/// Value at `xi` of the convolution of the indicators of `boxes`:
/// `A^{n-1} M_n((ξ - Σ centers)/A)` for `n` boxes of common width `A`.
pub fn box_convolution<T>(boxes: &[BoxSpec<T>], xi: T) -> Result<T>
where
    T: Num + Clone + PartialOrd + FromPrimitive,
{
    let n = boxes.len();
    if n == 0 || n > MAX_BOXES {
        return Err(Error::config(format!("box convolution takes 1 to {MAX_BOXES} boxes, got {n}")));
    }
    let a = boxes[0].width.clone();
    if !(a > T::zero()) {
        return Err(Error::config("box width must be positive"));
    }
    if boxes.iter().any(|b| b.width != a) {
        return Err(Error::config("box convolution supports equal widths only"));
    }
    let shift = boxes.iter().fold(T::zero(), |s, b| s + b.center.clone());
    let mut scale = T::one();
    for _ in 1..n {
        scale = scale * a.clone();
    }
    Ok(scale * cardinal_bspline(n, (xi - shift) / a))
}

/// Grid cross-check of [`box_convolution`]: each indicator sampled at
/// `cells` midpoints per width, convolved discretely, linearly interpolated.
pub fn box_convolution_grid(boxes: &[BoxSpec<f64>], xi: f64, cells: usize) -> Result<f64> {
    box_convolution(boxes, xi)?;
    let a = boxes[0].width;
    let h = a / cells as f64;
    let ones = vec![Complex::new(1.0, 0.0); cells];
    let refs: Vec<&[Complex<f64>]> = boxes.iter().map(|_| ones.as_slice()).collect();
    let conv = crate::convolution::Convolver::new().convolve(&refs);
    // Output index m sits at Σ(c - a/2 + h/2) + m h.
    let n = boxes.len() as f64;
    let origin: f64 = boxes.iter().map(|b| b.center).sum::<f64>() - n * a / 2.0 + n * h / 2.0;
    let pos = (xi - origin) / h;
    let scale = h.powi(boxes.len() as i32 - 1);
    let at = |m: i64| -> f64 {
        if m < 0 || m as usize >= conv.len() { 0.0 } else { conv[m as usize].re * scale }
    };
    let m0 = pos.floor();
    let w = pos - m0;
    Ok((1.0 - w) * at(m0 as i64) + w * at(m0 as i64 + 1))
}

/// Exact lower constant for five boxes on the shifted centre block:
/// `M_5(±1/2) = 11/24`, the minimum of `M_5` on `[-1/2, 1/2]`.
pub fn five_box_edge_value<T: Num + Clone + PartialOrd + FromPrimitive>() -> T {
    cardinal_bspline(5, T::from_i64(1).unwrap() / T::from_i64(2).unwrap())
}

/// One measured ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub t: f64,
    pub quantity: String,
    pub value: f64,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub lemma: String,
    pub subject: String,
    pub criterion: String,
    pub tolerance: f64,
    /// The number compared against `tolerance`.
    pub statistic: f64,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
}

impl EstimateReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "lemma {} [{}]: {} (statistic {:.4e}, tolerance {:.4e}) {}",
            self.lemma,
            self.subject,
            self.criterion,
            self.statistic,
            self.tolerance,
            if self.passed { "PASS" } else { "FAIL" }
        );
        let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>12}  {:<28} {:>14}", "N", "A", "R", "t", "quantity", "value");
        for m in &self.measurements {
            let _ = writeln!(
                out,
                "{:>10} {:>10.4} {:>10.4} {:>12.4e}  {:<28} {:>14.6e}",
                m.n, m.a, m.r, m.t, m.quantity, m.value
            );
        }
        out
    }
}

/// Parameter sweep shared by the harness. `A` is fixed; `R` and `t` scale so
/// that `R²A²/N` and `tN²` are constant along the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub s: f64,
    #[serde(rename = "N_sweep")]
    pub sweep: Vec<f64>,
    pub reference_n: f64,
    pub block_width: f64,
    pub reference_amplitude: f64,
    pub reference_time: f64,
    pub points_per_width: usize,
    pub time_factor: f64,
    /// Sample times as fractions of the swept `t`.
    pub t_fractions: Vec<f64>,
    /// Allowed growth of a bounded ratio relative to its first-`N` value.
    pub growth_tolerance: f64,
    /// Allowed max/min spread of the lower-bound constant.
    pub stability_tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            s: -1.0,
            sweep: vec![128.0, 256.0, 512.0],
            reference_n: 256.0,
            block_width: 16.0,
            reference_amplitude: 4.0,
            reference_time: 5e-7,
            points_per_width: DEFAULT_POINTS_PER_WIDTH,
            time_factor: DEFAULT_TIME_FACTOR,
            t_fractions: vec![0.25, 0.5, 1.0],
            growth_tolerance: 4.0,
            stability_tolerance: 2.0,
        }
    }
}

impl SweepConfig {
    pub fn params(&self, n: f64) -> ParameterSet<f64> {
        let q = n / self.reference_n;
        ParameterSet {
            s: self.s,
            freq_scale: n,
            block_width: self.block_width,
            amplitude: self.reference_amplitude * q.sqrt(),
            time: self.reference_time / (q * q),
            delta: 0.0,
            case: RegularityCase::from_s(self.s),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(Error::config("empty N sweep"));
        }
        if self.t_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::config("time fractions must lie in (0, 1]"));
        }
        Ok(())
    }

    fn phi(&self, p: &ParameterSet<f64>) -> Result<SpectralFunction<f64>> {
        make_phi(p, &p.phi_grid(self.points_per_width))
    }
}

/// Pass rule for bounded ratios: finite, positive, and never above
/// `tolerance` times the first-`N` value. Returns (statistic, passed).
fn bounded(per_n: &[f64], tolerance: f64) -> (f64, bool) {
    if per_n.iter().any(|r| !r.is_finite()) || per_n.is_empty() {
        return (f64::INFINITY, false);
    }
    let first = per_n[0];
    let growth = per_n.iter().fold(0.0_f64, |m, r| m.max(r / first));
    (growth, first > 0.0 && growth <= tolerance)
}

/// Bound exponents for one generation and norm.
fn bound_scale(k: usize, p: usize, n: f64, a: f64, r: f64, t: f64) -> [f64; 3] {
    let tk = t.powi((k + p) as i32);
    let ra = r * a;
    [
        tk * n.powi(k as i32) * ra.powi((2 * k + 4 * p + 1) as i32),
        tk * n.powi(k as i32) * ra.powi((2 * k + 4 * p) as i32) * r,
        tk * n.powi(k as i32 + 1) * ra.powi((2 * k + 4 * p) as i32) * r,
    ]
}

/// Fourier-Lebesgue and Sobolev norms of `Ξ_{k,p}(φ)(t)` divided by their
/// bounds without constants, for every swept `N` and sampled `t`.
///
/// Returns two reports per `(k, p)`: the Fourier-Lebesgue one (`2.5`) and the
/// Sobolev one (`2.6`). All pairs share one evaluation per `N`.
pub fn verify_upper_bounds(cfg: &SweepConfig, pairs: &[(usize, usize)]) -> Result<Vec<EstimateReport>> {
    cfg.validate()?;
    let level = pairs.iter().map(|(k, p)| k + p).max().unwrap_or(0);
    // ratios[pair][0..4][n] = sup over t of the four ratios.
    let mut sups = vec![[vec![], vec![], vec![], vec![]]; pairs.len()];
    let mut meas: Vec<Vec<Measurement>> = vec![Vec::new(); pairs.len()];
    for &n in &cfg.sweep {
        let prm = cfg.params(n);
        let phi = cfg.phi(&prm)?;
        let tg = time_grid_for(&phi, prm.time, level, cfg.time_factor)?;
        let nodes: Vec<usize> =
            cfg.t_fractions.iter().map(|f| ((f * tg.steps as f64).round() as usize).clamp(1, tg.steps)).collect();
        let mut ev = PicardEvaluator::new(&phi, tg)?.with_cap(level.max(1));
        for (i, &(k, p)) in pairs.iter().enumerate() {
            let gen = ev.generation(k, p)?;
            let mut sup = [0.0_f64; 4];
            for &node in &nodes {
                let t = tg.time(node);
                let f = gen.frame(node);
                let scale = bound_scale(k, p, n, prm.block_width, prm.amplitude, t);
                let hs_scale = f_s(cfg.s, prm.block_width) * scale[1];
                let vals = [
                    fl_norm(&f, FlExponent::One) / scale[0],
                    fl_norm(&f, FlExponent::Infinity) / scale[1],
                    fl_inf_derivative(&f) / scale[2],
                    sobolev_norm(&f, cfg.s) / hs_scale,
                ];
                for (q, v) in vals.iter().enumerate() {
                    sup[q] = sup[q].max(*v);
                    let names = ["FL1 ratio", "FLinf ratio", "FLinf derivative ratio", "H^s ratio"];
                    meas[i].push(Measurement {
                        n,
                        a: prm.block_width,
                        r: prm.amplitude,
                        t,
                        quantity: format!("({k},{p}) {}", names[q]),
                        value: *v,
                    });
                }
            }
            for q in 0..4 {
                sups[i][q].push(sup[q]);
            }
        }
    }
    let mut reports = Vec::new();
    for (i, &(k, p)) in pairs.iter().enumerate() {
        let stats: Vec<(f64, bool)> = (0..3).map(|q| bounded(&sups[i][q], cfg.growth_tolerance)).collect();
        let worst = stats.iter().map(|s| s.0).fold(0.0, f64::max);
        reports.push(EstimateReport {
            lemma: "2.5".into(),
            subject: format!("Fourier-Lebesgue bounds for generation ({k},{p})"),
            criterion: "largest growth of the sup-in-t ratios over the N sweep".into(),
            tolerance: cfg.growth_tolerance,
            statistic: worst,
            passed: stats.iter().all(|s| s.1),
            measurements: meas[i].iter().filter(|m| !m.quantity.ends_with("H^s ratio")).cloned().collect(),
        });
        let (g, ok) = bounded(&sups[i][3], cfg.growth_tolerance);
        reports.push(EstimateReport {
            lemma: "2.6".into(),
            subject: format!("Sobolev bound for generation ({k},{p}), s = {}", cfg.s),
            criterion: "growth of the sup-in-t ratio over the N sweep".into(),
            tolerance: cfg.growth_tolerance,
            statistic: g,
            passed: ok,
            measurements: meas[i].iter().filter(|m| m.quantity.ends_with("H^s ratio")).cloned().collect(),
        });
    }
    Ok(reports)
}

pub fn verify_fourier_lebesgue_bound(cfg: &SweepConfig, k: usize, p: usize) -> Result<EstimateReport> {
    Ok(verify_upper_bounds(cfg, &[(k, p)])?.remove(0))
}

pub fn verify_sobolev_bound(cfg: &SweepConfig, k: usize, p: usize) -> Result<EstimateReport> {
    Ok(verify_upper_bounds(cfg, &[(k, p)])?.remove(1))
}

/// Every generation with `k + p ≤ 2`.
pub fn all_pairs() -> Vec<(usize, usize)> {
    vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
}

/// Box lower bound on the full centre block for each width: the smallest
/// value of `1_{a+Q_A} * … * 1_{e+Q_A}` on `a+…+e+Q_A`, over `c·A⁴`.
pub fn verify_box_lower_bound(widths: &[f64], samples: usize) -> Result<EstimateReport> {
    let c: f64 = five_box_edge_value();
    let mut measurements = Vec::new();
    let mut worst = f64::INFINITY;
    for &a in widths {
        let centers = [2.0, -3.0, 3.0, -2.0, 1.0].map(|x| x * a * 7.0);
        let boxes: Vec<BoxSpec<f64>> = centers.iter().map(|&c| BoxSpec { center: c, width: a }).collect();
        let total: f64 = centers.iter().sum();
        let mut min = f64::INFINITY;
        for i in 0..=samples {
            // Half-open block: the right end is approached, not reached.
            let x = -0.5 + i as f64 / samples as f64 * (1.0 - 1e-12);
            min = min.min(box_convolution(&boxes, total + x * a)? / (c * a.powi(4)));
        }
        worst = worst.min(min);
        measurements.push(Measurement { n: 0.0, a, r: 0.0, t: 0.0, quantity: "min over block / (c A^4)".into(), value: min });
    }
    let central = box_convolution(&vec![BoxSpec { center: 0.0, width: 1.0 }; 5], 0.0)?;
    measurements.push(Measurement { n: 0.0, a: 1.0, r: 0.0, t: 0.0, quantity: "central value M_5(0)".into(), value: central });
    Ok(EstimateReport {
        lemma: "2.8".into(),
        subject: format!("five-box lower bound with c = M_5(1/2) = {c}"),
        criterion: "min over the block of value/(c A^4) is at least 1".into(),
        tolerance: 1.0 - 1e-12,
        statistic: worst,
        passed: worst >= 1.0 - 1e-12,
        measurements,
    })
}

/// Smallest `cos(t'Φ)` over sampled quintic frequency tuples with output in
/// the centre block and `t' ≤ t`; at least `1/2` when `t ≤ 0.05N⁻²`.
pub fn min_phase_cosine(phi: &SpectralFunction<f64>, block_width: f64, t: f64, stride: usize) -> f64 {
    let pts: Vec<f64> = phi.grid.points().zip(&phi.values).filter(|(_, v)| v.norm() > 0.0).map(|(x, _)| x).collect();
    let d = phi.grid.delta_xi;
    let has = |x: f64| phi.at_lattice((x / d).round() as i64).norm() > 0.0;
    let mut worst = 1.0_f64;
    let step = stride.max(1);
    let a_half = block_width / 2.0;
    let mut xi = -a_half;
    while xi < a_half {
        for x1 in pts.iter().step_by(step) {
            for x2 in pts.iter().step_by(step) {
                for x3 in pts.iter().step_by(step) {
                    for x4 in pts.iter().step_by(step) {
                        let x5 = xi - x1 + x2 - x3 + x4;
                        if !has(x5) {
                            continue;
                        }
                        let ph = xi * xi - x1 * x1 + x2 * x2 - x3 * x3 + x4 * x4 - x5 * x5;
                        // cos(t'Φ) is smallest at the largest |t'Φ| ≤ π.
                        let arg = (t * ph).abs().min(std::f64::consts::PI);
                        worst = worst.min(arg.cos());
                    }
                }
            }
        }
        xi += d * step as f64;
    }
    worst
}

/// Lower bound on the first Picard level: `c = ‖Ξ₁(φ)(t)‖_{H^s}/(f_s(A) t R⁵A⁴)`
/// across the sweep, required positive and stable within
/// `stability_tolerance`.
pub fn verify_first_iterate_lower_bound(cfg: &SweepConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    let mut measurements = Vec::new();
    let mut cs = Vec::new();
    for &n in &cfg.sweep {
        let prm = cfg.params(n);
        let (a, r, t) = (prm.block_width, prm.amplitude, prm.time);
        if !(t > 0.0) {
            return Err(Error::config("the lower bound needs t > 0"));
        }
        if r * r * a * a < 16.0 * n * (1.0 - 1e-12) {
            return Err(Error::config(format!("R²A² = {} is below 16N = {}", r * r * a * a, 16.0 * n)));
        }
        if t > 0.05 / (n * n) * (1.0 + 1e-12) {
            return Err(Error::config(format!("t = {t:e} exceeds 0.05/N² = {:e}", 0.05 / (n * n))));
        }
        let phi = cfg.phi(&prm)?;
        let tg = time_grid_for(&phi, t, 1, cfg.time_factor)?;
        let mut ev = PicardEvaluator::new(&phi, tg)?;
        let cubic = ev.generation_final(1, 0)?;
        let quintic = ev.generation_final(0, 1)?;
        let level = cubic.add(&quintic)?;
        let fs = f_s(cfg.s, a);
        let c = sobolev_norm(&level, cfg.s) / (fs * t * r.powi(5) * a.powi(4));
        let low = quintic
            .grid
            .points()
            .zip(&quintic.values)
            .filter(|(x, _)| *x >= -a / 2.0 && *x < a / 2.0)
            .map(|(_, z)| z.norm())
            .fold(f64::INFINITY, f64::min)
            / (t * r.powi(5) * a.powi(4));
        let cubic_ratio = sobolev_norm(&cubic, cfg.s) / (fs * t * n * (r * a).powi(2) * r);
        let m = |q: &str, v: f64| Measurement { n, a, r, t, quantity: q.into(), value: v };
        measurements.push(m("c = |Xi_1|_{H^s}/(f_s t R^5 A^4)", c));
        measurements.push(m("min over Q_A |Xi_{0,1}|/(t R^5 A^4)", low));
        measurements.push(m("cubic |Xi_{1,0}|_{H^s}/(f_s t N (RA)^2 R)", cubic_ratio));
        cs.push(c);
    }
    let max = cs.iter().fold(0.0_f64, |a, b| a.max(*b));
    let min = cs.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    let spread = max / min;
    Ok(EstimateReport {
        lemma: "2.9".into(),
        subject: format!("first-level lower bound, s = {}", cfg.s),
        criterion: "c > 0 at every N and max/min of c over the sweep".into(),
        tolerance: cfg.stability_tolerance,
        statistic: spread,
        passed: min > 0.0 && spread <= cfg.stability_tolerance,
        measurements,
    })
}

/// Default perturbation: unit-`H^s` smooth bump of radius 8 on the sweep's
/// lattice.
pub fn default_perturbation(cfg: &SweepConfig) -> Result<SpectralFunction<f64>> {
    let delta = cfg.block_width / cfg.points_per_width as f64;
    smooth_bump(delta, 8.0, cfg.s)
}

/// Radius of the frequency support of `f`.
fn support_radius(f: &SpectralFunction<f64>) -> f64 {
    crate::picard::data_extent(f)
}

/// Perturbation stability of level `j`: `‖Ξ_j(φ+ψ) − Ξ_j(φ)‖_{L²}` over
/// `‖ψ‖_{L²}(tR⁴A⁴)^j`, bounded across the sweep. For `j = 1` the difference
/// is also checked against the sum over leaf assignments containing `ψ`.
pub fn verify_perturbation_stability(
    cfg: &SweepConfig,
    psi: &SpectralFunction<f64>,
    j: usize,
) -> Result<EstimateReport> {
    cfg.validate()?;
    if j == 0 || j > 2 {
        return Err(Error::Resource { what: format!("perturbation level {j}"), cap: 2 });
    }
    let radius = support_radius(psi);
    let mut measurements = Vec::new();
    let mut ratios = Vec::new();
    let mut worst_multi = 0.0_f64;
    for &n in &cfg.sweep {
        let prm = cfg.params(n);
        let (a, r, t) = (prm.block_width, prm.amplitude, prm.time);
        if n < 16.0 * radius {
            return Err(Error::config(format!("N = {n} is below 16 × perturbation radius {radius}")));
        }
        let fl1 = fl_norm(psi, FlExponent::One);
        if fl1 > 8.0 * r * a {
            return Err(Error::config(format!("perturbation FL¹ norm {fl1} exceeds 8RA = {}", 8.0 * r * a)));
        }
        let phi = cfg.phi(&prm)?;
        let sum = phi.add(psi)?;
        let tg = time_grid_for(&sum, t, j, cfg.time_factor)?;
        let base = PicardEvaluator::new(&phi, tg)?.level_final(j)?;
        let pert = PicardEvaluator::new(&sum, tg)?.level_final(j)?;
        let diff = pert.sub(&base)?;
        let l2 = |f: &SpectralFunction<f64>| sobolev_norm(f, 0.0);
        let psi_l2 = l2(psi);
        let ratio = if psi_l2 == 0.0 { 0.0 } else { l2(&diff) / (psi_l2 * (t * (r * a).powi(4)).powi(j as i32)) };
        let m = |q: &str, v: f64| Measurement { n, a, r, t, quantity: q.into(), value: v };
        measurements.push(m("|Xi_j(phi+psi)-Xi_j(phi)|/(|psi| (tR^4A^4)^j)", ratio));
        ratios.push(ratio);
        if j == 1 && psi_l2 > 0.0 {
            let sub = substituted_sum(&phi, psi, tg)?;
            let e = l2(&sub.sub(&diff)?) / l2(&diff);
            worst_multi = worst_multi.max(e);
            measurements.push(m("multilinear expansion relative error", e));
        }
    }
    let (g, ok) = if ratios.iter().all(|r| *r == 0.0) { (0.0, true) } else { bounded(&ratios, cfg.growth_tolerance) };
    Ok(EstimateReport {
        lemma: "2.10".into(),
        subject: format!("perturbation stability at level {j}"),
        criterion: "growth of the ratio over the N sweep (and multilinear expansion error below 1e-8)".into(),
        tolerance: cfg.growth_tolerance,
        statistic: g,
        passed: ok && worst_multi <= 1e-8,
        measurements,
    })
}

/// `Σ_T Σ Ψ(T; φ₁…φₙ)` over level-one trees and leaf choices
/// `φᵢ ∈ {φ, ψ}` with at least one `ψ`.
fn substituted_sum(
    phi: &SpectralFunction<f64>,
    psi: &SpectralFunction<f64>,
    tg: crate::picard::TimeGrid<f64>,
) -> Result<SpectralFunction<f64>> {
    let a = SpaceTimeFunction::free_evolution(&phi.trimmed()?, tg);
    let b = SpaceTimeFunction::free_evolution(&psi.trimmed()?, tg);
    let mut acc: Option<SpectralFunction<f64>> = None;
    let trees: Vec<Tree> = [enumerate_trees_capped(1, 0, 1)?, enumerate_trees_capped(0, 1, 1)?].concat();
    for tree in &trees {
        let n = tree.terminal_count();
        for mask in 1..(1usize << n) {
            let leaves: Vec<&SpaceTimeFunction<f64>> =
                (0..n).map(|i| if mask >> i & 1 == 1 { &b } else { &a }).collect();
            let term = psi_assigned_final(tree, &leaves)?;
            acc = Some(match acc {
                None => term,
                Some(s) => s.add(&term)?,
            });
        }
    }
    Ok(acc.expect("level one has trees"))
}

/// Consecutive-level ratio `‖Ξ₂‖_{L²}/‖Ξ₁‖_{L²}` against `factor·tR⁴A⁴`
/// at a single parameter set.
pub fn verify_series_ratio(prm: &ParameterSet<f64>, points_per_width: usize, factor: f64) -> Result<EstimateReport> {
    let phi = make_phi(prm, &prm.phi_grid(points_per_width))?;
    let (n, a, r, t) = (prm.freq_scale, prm.block_width, prm.amplitude, prm.time);
    let tg = time_grid_for(&phi, t, 2, DEFAULT_TIME_FACTOR)?;
    let mut ev = PicardEvaluator::new(&phi, tg)?;
    let l1 = sobolev_norm(&ev.level_final(1)?, 0.0);
    let l2 = sobolev_norm(&ev.level_final(2)?, 0.0);
    let small = t * (r * a).powi(4);
    let ratio = l2 / l1;
    Ok(EstimateReport {
        lemma: "2.7".into(),
        subject: "consecutive Picard levels".into(),
        criterion: format!("|Xi_2|/|Xi_1| divided by {factor} t R^4 A^4"),
        tolerance: 1.0,
        statistic: ratio / (factor * small),
        passed: ratio <= factor * small,
        measurements: vec![
            Measurement { n, a, r, t, quantity: "|Xi_2|/|Xi_1|".into(), value: ratio },
            Measurement { n, a, r, t, quantity: "t R^4 A^4".into(), value: small },
        ],
    })
}
