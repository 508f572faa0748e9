//! Parameter choices for the three regularity regimes, the six sufficient
//! conditions, and the end-to-end inflation experiment `v₀ = ψ + φ`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::f_s;
use crate::picard::{series_sum_with, SeriesOptions, SeriesSum, DEFAULT_PICARD_CAP};
use crate::solver::{mass_drift, solve_gdnls, PhysicalState, TorusConfig, DEFAULT_C_STAB};
use crate::spectrum::{
    make_phi, smooth_bump, sobolev_norm, ParameterSet, RegularityCase, SpectralFunction, DEFAULT_POINTS_PER_WIDTH,
};

/// Default factor by which `≪` sides must differ.
pub const DEFAULT_MARGIN_FACTOR: f64 = 16.0;

/// `(A, R, T)` from the regime formulas:
///
/// * `s < -1/2`: `A = N^{δ/5}`, `R = N^{1/2}`, `T = N^{-2-δ}`, needs `s + 1/2 + δ/10 < 0`;
/// * `s = -1/2`: `A = (log N)^{3/2}`, `R = N^{1/2}/log N`, `T = N^{-2-δ}`;
/// * `-1/2 < s < 0`: `A = N^{1+2s+9δ/4}`, `R = N^{-1/2-2s-17δ/8}`, `T = N^{-2-δ}`,
///   needs `2s + 9δ/4 < 0` and `2s² - 3δ/2 + 9δs/4 > 0`.
pub fn choose_params(s: f64, n: f64, delta: f64) -> Result<ParameterSet<f64>> {
    if !(s < 0.0) {
        return Err(Error::config(format!("regularity must be negative, got s = {s}")));
    }
    if !(delta > 0.0) {
        return Err(Error::config(format!("delta must be positive, got {delta}")));
    }
    if !(n > 1.0) {
        return Err(Error::config(format!("N must exceed 1, got {n}")));
    }
    let case = RegularityCase::from_s(s);
    let t = n.powf(-2.0 - delta);
    let (a, r) = match case {
        RegularityCase::Case1 => {
            if !(s + 0.5 + delta / 10.0 < 0.0) {
                return Err(Error::config(format!("violated s + 1/2 + δ/10 < 0 (value {})", s + 0.5 + delta / 10.0)));
            }
            (n.powf(delta / 5.0), n.sqrt())
        }
        RegularityCase::Case2 => {
            let l = n.ln();
            (l.powf(1.5), n.sqrt() / l)
        }
        RegularityCase::Case3 => {
            let c1 = 2.0 * s + 9.0 * delta / 4.0;
            if !(c1 < 0.0) {
                return Err(Error::config(format!("violated 2s + 9δ/4 < 0 (value {c1})")));
            }
            let c2 = 2.0 * s * s - 1.5 * delta + 9.0 * delta * s / 4.0;
            if !(c2 > 0.0) {
                return Err(Error::config(format!("violated 2s² - 3δ/2 + 9δs/4 > 0 (value {c2})")));
            }
            (n.powf(1.0 + 2.0 * s + 9.0 * delta / 4.0), n.powf(-0.5 - 2.0 * s - 17.0 * delta / 8.0))
        }
    };
    let p = ParameterSet { s, freq_scale: n, block_width: a, amplitude: r, time: t, delta, case };
    p.validate()?;
    Ok(p)
}

/// One `≪` condition: `margin` is the larger side over the smaller side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    pub statement: String,
    pub margin: f64,
    pub passed: bool,
}

/// The six sufficient conditions judged with one margin factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub factor: f64,
    pub n_target: u32,
    pub conditions: [Condition; 6],
    pub all_passed: bool,
    /// Set at `s = 0`, where (i) forces `R²A² ≪ A`, contradicting (iv) and (v).
    pub s_zero_conflict: Option<String>,
    /// Whether `R⁴A⁴ ≥ n`, which places `T` in `(0, 1/n)` given (ii).
    pub time_in_unit_window: bool,
}

impl ConditionReport {
    pub fn margins(&self) -> [f64; 6] {
        [0, 1, 2, 3, 4, 5].map(|i| self.conditions[i].margin)
    }
}

/// Message attached to every `s = 0` report.
pub const S_ZERO_CONFLICT: &str =
    "at s = 0 condition (i) writes R << A^{-1/2}, which implies R^2 A^2 << A; incompatible with (iv) N << R^2 A^2 and (v) A << N";

/// Evaluates (i) to (vi) for `params` and target `n`. A condition passes when
/// its margin is at least `factor` (and above one).
pub fn check_conditions(params: &ParameterSet<f64>, n: u32, factor: f64) -> ConditionReport {
    let (s, big_n, a, r, t) = (params.s, params.freq_scale, params.block_width, params.amplitude, params.time);
    let nf = n as f64;
    let fs = f_s(s, a);
    let entries = [
        ("(i)", "N^s R A^{1/2} << 1/n", (1.0 / nf) / (big_n.powf(s) * r * a.sqrt())),
        ("(ii)", "T R^4 A^4 << 1", 1.0 / (t * (r * a).powi(4))),
        ("(iii)", "n << f_s(A) T R^5 A^4", fs * t * r.powi(5) * a.powi(4) / nf),
        ("(iv)", "N << R^2 A^2", (r * a).powi(2) / big_n),
        ("(v)", "A << N", big_n / a),
        ("(vi)", "T << N^{-2}", 1.0 / (big_n * big_n * t)),
    ];
    let conditions = entries.map(|(label, statement, margin)| Condition {
        label: label.into(),
        statement: statement.into(),
        margin,
        passed: margin >= factor && margin > 1.0,
    });
    let all_passed = conditions.iter().all(|c| c.passed);
    let s_zero_conflict = (s.abs() < 1e-12).then(|| S_ZERO_CONFLICT.to_string());
    ConditionReport {
        factor,
        n_target: n,
        all_passed,
        conditions,
        s_zero_conflict,
        time_in_unit_window: (r * a).powi(4) >= nf,
    }
}

/// A closed-form exponent identity evaluated in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub log_measured: f64,
    pub log_expected: f64,
    pub relative_error: f64,
}

fn identity(name: &str, measured: f64, expected: f64) -> IdentityCheck {
    let scale = expected.abs().max(f64::MIN_POSITIVE);
    IdentityCheck {
        name: name.into(),
        log_measured: measured,
        log_expected: expected,
        relative_error: (measured - expected).abs() / scale,
    }
}

/// Regime identities, e.g. `N^s R A^{1/2} = N^{-δ}` and `TR⁴A⁴ = N^{-δ/2}`
/// when `-1/2 < s < 0`, comparing logarithms of both sides.
pub fn exponent_identities(p: &ParameterSet<f64>) -> Vec<IdentityCheck> {
    let (s, d) = (p.s, p.delta);
    let ln = |x: f64| x.ln();
    let l = ln(p.freq_scale);
    let (a, r, t) = (p.block_width, p.amplitude, p.time);
    let gap = s * l + ln(r) + 0.5 * ln(a);
    let small = ln(t) + 4.0 * ln(r * a);
    match p.case {
        RegularityCase::Case1 => vec![
            identity("N^s R A^{1/2} = N^{s+1/2+delta/10}", gap, (s + 0.5 + d / 10.0) * l),
            identity("T R^4 A^4 = N^{-delta/5}", small, -d / 5.0 * l),
            identity("T R^5 A^4 = N^{1/2-delta/5}", small + ln(r), (0.5 - d / 5.0) * l),
        ],
        RegularityCase::Case2 => vec![
            identity("N^{-1/2} R A^{1/2} = (log N)^{-1/4}", gap, -0.25 * ln(l)),
            identity("T R^4 A^4 = N^{-delta} (log N)^2", small, -d * l + 2.0 * ln(l)),
            identity("T R^5 A^4 = N^{1/2-delta} log N", small + ln(r), (0.5 - d) * l + ln(l)),
        ],
        RegularityCase::Case3 => vec![
            identity("N^s R A^{1/2} = N^{-delta}", gap, -d * l),
            identity("T R^4 A^4 = N^{-delta/2}", small, -d / 2.0 * l),
            identity(
                "T R^5 A^{s+9/2} = N^{2s^2-3delta/2+9delta s/4}",
                ln(t) + 5.0 * ln(r) + (s + 4.5) * ln(a),
                (2.0 * s * s - 1.5 * d + 2.25 * d * s) * l,
            ),
            identity("R^2 A^2 = N^{1+delta/4}", 2.0 * ln(r * a), (1.0 + d / 4.0) * l),
            identity("A = N^{1+2s+9delta/4}", ln(a), (1.0 + 2.0 * s + 2.25 * d) * l),
        ],
    }
}

/// How `‖v(T)‖_{H^s}` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Series,
    Solver,
    Both,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(Method::Series),
            "solver" => Ok(Method::Solver),
            "both" => Ok(Method::Both),
            _ => Err(Error::config(format!("unknown method {s:?}; expected series, solver or both"))),
        }
    }
}

/// The fixed function `ψ` near which inflation is sought.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Perturbation {
    Zero,
    /// Smooth bump of the given frequency radius with unit `H^s` norm.
    Bump { radius: f64 },
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation::Bump { radius: 8.0 }
    }
}

impl Perturbation {
    pub fn radius(&self) -> f64 {
        match self {
            Perturbation::Zero => 0.0,
            Perturbation::Bump { radius } => *radius,
        }
    }

    /// `ψ̂` on the lattice `delta·ℤ`.
    pub fn sample(&self, delta: f64, s: f64) -> Result<SpectralFunction<f64>> {
        match self {
            Perturbation::Zero => {
                Ok(SpectralFunction::zeros(crate::spectrum::FrequencyGrid::lattice(delta, 0, 1)))
            }
            Perturbation::Bump { radius } => smooth_bump(delta, *radius, s),
        }
    }
}

/// Resolution and judgement knobs of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentOptions {
    pub points_per_width: usize,
    /// Time resolution factor for the series; see [`crate::picard::TimeGrid::resolved`].
    pub time_factor: f64,
    pub j_max: usize,
    pub margin_factor: f64,
    /// Solver band: resolved frequencies reach this multiple of the data extent.
    pub solver_band: f64,
    pub solver_min_steps: usize,
    pub solver_max_modes: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            points_per_width: DEFAULT_POINTS_PER_WIDTH,
            time_factor: 2.0,
            j_max: DEFAULT_PICARD_CAP,
            margin_factor: DEFAULT_MARGIN_FACTOR,
            solver_band: 9.0,
            solver_min_steps: 8,
            solver_max_modes: 1 << 22,
        }
    }
}

/// Measured sizes of the terms in
/// `‖v(T)‖ ≥ ‖Ξ₁(φ)‖ − ‖Ξ₀(φ+ψ)‖ − Σ_j‖Ξ_j(φ) − Ξ_j(φ+ψ)‖ − Σ_{j≥2}‖Ξ_j(φ)‖`
/// (all `H^s` at time `T`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub main: f64,
    pub free: f64,
    pub perturbation: f64,
    pub tail: f64,
    pub lower_bound: f64,
    /// `main ≥ 2·(perturbation + tail)`.
    pub main_dominates: bool,
}

/// One point of an inflation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationResult {
    pub params: ParameterSet<f64>,
    pub method: Method,
    /// `‖v(0) − ψ‖_{H^s} = ‖φ‖_{H^s}`.
    pub norm_initial_gap: f64,
    /// `‖v(T)‖_{H^s}` (series value when both methods run).
    pub norm_final: f64,
    pub ratio: f64,
    pub series_final: Option<f64>,
    pub solver_final: Option<f64>,
    pub conditions: ConditionReport,
    pub identities: Vec<IdentityCheck>,
    pub decomposition: Option<Decomposition>,
    pub series_tail: Option<f64>,
    pub series_ratios: Vec<f64>,
    pub solver_mass_drift: Option<f64>,
    pub warnings: Vec<String>,
}

fn hs(f: &SpectralFunction<f64>, s: f64) -> f64 {
    sobolev_norm(f, s)
}

fn series(v: &SpectralFunction<f64>, t: f64, opts: &ExperimentOptions) -> Result<SeriesSum<f64>> {
    let so = SeriesOptions { cap: opts.j_max.max(DEFAULT_PICARD_CAP), time_factor: opts.time_factor, fail_on_divergence: false };
    series_sum_with(v, t, opts.j_max, so)
}

fn solver_final(v0: &SpectralFunction<f64>, p: &ParameterSet<f64>, opts: &ExperimentOptions) -> Result<(f64, f64)> {
    let delta = v0.grid.delta_xi;
    let extent = crate::picard::data_extent(v0);
    let need = 2.0 * opts.solver_band * extent / delta;
    let modes = (need.ceil() as usize).next_power_of_two().max(64);
    if modes > opts.solver_max_modes {
        return Err(Error::Resource { what: format!("solver modes ({modes})"), cap: opts.solver_max_modes });
    }
    let period = std::f64::consts::TAU / delta;
    let xi_max = delta * (modes / 2) as f64;
    let dt = (DEFAULT_C_STAB / (xi_max * xi_max)).min(p.time / opts.solver_min_steps as f64);
    let cfg = TorusConfig::new(period, modes, dt)?;
    let start = PhysicalState::from_spectrum(cfg, v0)?;
    let traj = solve_gdnls(&start, p.time, usize::MAX)?;
    let end = traj.last().expect("final state");
    Ok((hs(&end.to_spectrum(), p.s), mass_drift(&traj[0], end)))
}

/// Runs one parameter set: `v₀ = ψ + φ`, gap `‖φ‖_{H^s}`, final `‖v(T)‖_{H^s}`.
pub fn run_point(
    params: &ParameterSet<f64>,
    psi: &Perturbation,
    n: u32,
    method: Method,
    opts: &ExperimentOptions,
) -> Result<InflationResult> {
    let p = *params;
    let phi = make_phi(&p, &p.phi_grid(opts.points_per_width))?;
    let delta = phi.grid.delta_xi;
    let psi_hat = psi.sample(delta, p.s)?;
    let mut warnings = Vec::new();
    if p.freq_scale < 16.0 * psi.radius() {
        return Err(Error::config(format!("N = {} is below 16 × the radius {} of ψ", p.freq_scale, psi.radius())));
    }
    let conditions = check_conditions(&p, n, opts.margin_factor);
    for c in conditions.conditions.iter().filter(|c| !c.passed) {
        warnings.push(format!("condition {} fails: margin {:.3e} < {}", c.label, c.margin, opts.margin_factor));
    }
    if let Some(msg) = &conditions.s_zero_conflict {
        warnings.push(msg.clone());
    }
    let v0 = phi.add(&psi_hat)?;
    let gap = hs(&phi, p.s);

    let (mut series_final, mut decomposition, mut series_tail, mut series_ratios) = (None, None, None, Vec::new());
    if method != Method::Solver {
        let full = series(&v0, p.time, opts)?;
        let bare = series(&phi, p.time, opts)?;
        if full.ratio_warning || bare.ratio_warning {
            warnings.push(format!("series level ratios {:?} reach the warning threshold", full.ratios));
        }
        series_final = Some(hs(&full.sum, p.s));
        series_tail = full.tail_estimate;
        series_ratios = full.ratios.clone();
        let main = hs(&bare.levels[1], p.s);
        let free = hs(&full.levels[0], p.s);
        let mut perturbation = 0.0;
        for j in 1..=opts.j_max {
            perturbation += hs(&bare.levels[j].sub(&full.levels[j])?, p.s);
        }
        let mut tail: f64 = bare.levels.iter().skip(2).map(|l| hs(l, p.s)).sum();
        if opts.j_max >= 2 {
            let r = hs(&bare.levels[opts.j_max], p.s) / hs(&bare.levels[opts.j_max - 1], p.s);
            tail += if r < 1.0 { hs(&bare.levels[opts.j_max], p.s) * r / (1.0 - r) } else { f64::INFINITY };
        }
        decomposition = Some(Decomposition {
            main,
            free,
            perturbation,
            tail,
            lower_bound: main - free - perturbation - tail,
            main_dominates: main >= 2.0 * (perturbation + tail),
        });
    }
    let (mut solver_norm, mut drift) = (None, None);
    if method != Method::Series {
        let (f, d) = solver_final(&v0, &p, opts)?;
        solver_norm = Some(f);
        drift = Some(d);
    }
    if let (Some(a), Some(b)) = (series_final, solver_norm) {
        let rel = (a - b).abs() / a.max(b);
        if rel > 1e-3 {
            warnings.push(format!("series and solver final norms differ by {rel:.3e} relative"));
        }
    }
    let norm_final = series_final.or(solver_norm).expect("some method ran");
    Ok(InflationResult {
        params: p,
        method,
        norm_initial_gap: gap,
        norm_final,
        ratio: norm_final / gap.max(f64::EPSILON),
        series_final,
        solver_final: solver_norm,
        identities: exponent_identities(&p),
        conditions,
        decomposition,
        series_tail,
        series_ratios,
        solver_mass_drift: drift,
        warnings,
    })
}

/// Inflation sweep over `N`, parameters from [`choose_params`]. Points run
/// concurrently and are returned in sweep order.
pub fn run_experiment(
    s: f64,
    delta: f64,
    psi: &Perturbation,
    sweep: &[f64],
    n: u32,
    method: Method,
    opts: &ExperimentOptions,
) -> Result<Vec<InflationResult>> {
    let params = sweep.iter().map(|&big_n| choose_params(s, big_n, delta)).collect::<Result<Vec<_>>>()?;
    params.par_iter().map(|p| run_point(p, psi, n, method, opts)).collect()
}

/// Whether the inflation ratio strictly increases along the results.
pub fn strictly_increasing(results: &[InflationResult]) -> bool {
    results.windows(2).all(|w| w[1].ratio > w[0].ratio)
}

/// CSV header of [`results_csv`].
pub const CSV_HEADER: &str = "N,A,R,T,gap,final,ratio,series_final,solver_final,margin_i,margin_ii,margin_iii,margin_iv,margin_v,margin_vi,all_conditions,main,free,perturbation,tail,lower_bound";

pub fn results_csv(results: &[InflationResult]) -> String {
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.10e}")).unwrap_or_default();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        let p = &r.params;
        let m = r.conditions.margins();
        let d = r.decomposition.as_ref();
        let _ = writeln!(
            out,
            "{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{},{},{},{},{},{}",
            p.freq_scale,
            p.block_width,
            p.amplitude,
            p.time,
            r.norm_initial_gap,
            r.norm_final,
            r.ratio,
            opt(r.series_final),
            opt(r.solver_final),
            m[0],
            m[1],
            m[2],
            m[3],
            m[4],
            m[5],
            r.conditions.all_passed,
            opt(d.map(|d| d.main)),
            opt(d.map(|d| d.free)),
            opt(d.map(|d| d.perturbation)),
            opt(d.map(|d| d.tail)),
            opt(d.map(|d| d.lower_bound)),
        );
    }
    out
}
