//! Fourier-side representation of functions of one variable.
//!
//! Convention: `f̂(ξ) = ∫ f(x) e^{-ixξ} dx`, inverse carrying `1/2π`, so
//! `‖f‖_{H^s}² = (1/2π) ∫ ⟨ξ⟩^{2s} |f̂(ξ)|² dξ`. All integrals over `ξ` are
//! trapezoid sums on a uniform grid.

use std::io::{BufRead, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform frequency grid `ξ_j = xi_min + j·delta_xi`, `j = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid<T> {
    pub xi_min: T,
    pub delta_xi: T,
    pub count: usize,
}

impl<T: Real> FrequencyGrid<T> {
    pub fn new(xi_min: T, delta_xi: T, count: usize) -> Result<Self> {
        if !(delta_xi > T::zero()) || !delta_xi.is_finite() {
            return Err(Error::config("frequency spacing must be positive and finite"));
        }
        if count < 2 {
            return Err(Error::config("frequency grid needs at least two points"));
        }
        if !xi_min.is_finite() {
            return Err(Error::config("frequency grid origin must be finite"));
        }
        Ok(FrequencyGrid { xi_min, delta_xi, count })
    }

    /// Grid on the lattice `delta·ℤ` starting at lattice index `start`.
    ///
    /// Unlike [`FrequencyGrid::new`], a single point is allowed: windows of
    /// lattice functions may be that narrow.
    pub fn lattice(delta: T, start: i64, count: usize) -> Self {
        FrequencyGrid { xi_min: T::of_i64(start) * delta, delta_xi: delta, count: count.max(1) }
    }

    /// Smallest lattice grid containing `[lo, hi]`.
    pub fn lattice_covering(delta: T, lo: T, hi: T) -> Self {
        let a = (lo / delta).floor().to_i64().expect("finite bound");
        let b = (hi / delta).ceil().to_i64().expect("finite bound");
        Self::lattice(delta, a, (b - a + 1) as usize)
    }

    /// Symmetric lattice grid `{-half..=half}·delta`.
    pub fn symmetric(delta: T, half: usize) -> Self {
        Self::lattice(delta, -(half as i64), 2 * half + 1)
    }

    pub fn point(&self, j: usize) -> T {
        self.xi_min + T::of_usize(j) * self.delta_xi
    }

    pub fn xi_max(&self) -> T {
        self.point(self.count - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.count).map(move |j| self.point(j))
    }

    /// Lattice index of the first point, if the grid sits on `delta_xi·ℤ`.
    pub fn lattice_start(&self) -> Result<i64> {
        let q = self.xi_min / self.delta_xi;
        let r = q.round();
        if (q - r).abs() > T::lit(1e-6) {
            return Err(Error::config(format!(
                "grid origin {} is not a multiple of the spacing {}",
                self.xi_min, self.delta_xi
            )));
        }
        Ok(r.to_i64().expect("finite"))
    }

    /// Half-open lattice index range `[start, end)`.
    pub fn lattice_range(&self) -> Result<(i64, i64)> {
        let s = self.lattice_start()?;
        Ok((s, s + self.count as i64))
    }

    pub(crate) fn same_spacing(&self, other: &Self) -> bool {
        let d = (self.delta_xi - other.delta_xi).abs();
        d <= T::epsilon() * T::lit(16.0) * self.delta_xi
    }

    /// Trapezoid weight of point `j`.
    pub fn weight(&self, j: usize) -> T {
        if j == 0 || j + 1 == self.count {
            self.delta_xi * T::lit(0.5)
        } else {
            self.delta_xi
        }
    }
}

/// Complex values `f̂(ξ_j)` on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction<T> {
    pub grid: FrequencyGrid<T>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> SpectralFunction<T> {
    pub fn new(grid: FrequencyGrid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.count {
            return Err(Error::config(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.count
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Accuracy("spectral values must be finite".into()));
        }
        Ok(SpectralFunction { grid, values })
    }

    pub fn zeros(grid: FrequencyGrid<T>) -> Self {
        SpectralFunction { values: vec![Complex::new(T::zero(), T::zero()); grid.count], grid }
    }

    pub fn from_fn(grid: FrequencyGrid<T>, f: impl Fn(T) -> Complex<T>) -> Self {
        let values = grid.points().map(f).collect();
        SpectralFunction { grid, values }
    }

    /// Value at lattice index `m` (zero outside the grid).
    pub fn at_lattice(&self, m: i64) -> Complex<T> {
        let start = self.grid.lattice_start().unwrap_or(i64::MIN / 2);
        let j = m - start;
        if j < 0 || j >= self.values.len() as i64 {
            Complex::new(T::zero(), T::zero())
        } else {
            self.values[j as usize]
        }
    }

    pub fn scaled(&self, a: Complex<T>) -> Self {
        SpectralFunction { grid: self.grid, values: self.values.iter().map(|z| z * a).collect() }
    }

    /// Sum of two lattice functions with the same spacing, on the union grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.grid.same_spacing(&other.grid) {
            return Err(Error::config("cannot add spectra with different spacing"));
        }
        let (a0, a1) = self.grid.lattice_range()?;
        let (b0, b1) = other.grid.lattice_range()?;
        let (lo, hi) = (a0.min(b0), a1.max(b1));
        let grid = FrequencyGrid::lattice(self.grid.delta_xi, lo, (hi - lo) as usize);
        let mut values = vec![Complex::new(T::zero(), T::zero()); grid.count];
        for (j, z) in self.values.iter().enumerate() {
            values[(a0 - lo) as usize + j] += z;
        }
        for (j, z) in other.values.iter().enumerate() {
            values[(b0 - lo) as usize + j] += z;
        }
        Ok(SpectralFunction { grid, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(Complex::new(-T::one(), T::zero())))
    }

    /// Restriction to the smallest lattice window holding every nonzero
    /// value, padded with one zero cell on each side.
    pub fn trimmed(&self) -> Result<Self> {
        let start = self.grid.lattice_start()?;
        let zero = Complex::new(T::zero(), T::zero());
        let first = self.values.iter().position(|z| *z != zero);
        let Some(first) = first else {
            return Ok(SpectralFunction {
                grid: FrequencyGrid::lattice(self.grid.delta_xi, start, 1),
                values: vec![zero],
            });
        };
        let last = self.values.iter().rposition(|z| *z != zero).unwrap();
        let lo = start + first as i64 - 1;
        let hi = start + last as i64 + 1;
        let grid = FrequencyGrid::lattice(self.grid.delta_xi, lo, (hi - lo + 1) as usize);
        let values = (lo..=hi).map(|m| self.at_lattice(m)).collect();
        Ok(SpectralFunction { grid, values })
    }

    pub fn norms(&self, s: T) -> NormReport {
        NormReport {
            s: s.as_f64(),
            h_s: sobolev_norm(self, s).as_f64(),
            l2: sobolev_norm(self, T::zero()).as_f64(),
            fl1: fl_norm(self, FlExponent::One).as_f64(),
            fl_inf: fl_norm(self, FlExponent::Infinity).as_f64(),
        }
    }

    /// CSV with header `xi,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "xi,re,im")?;
        for (xi, z) in self.grid.points().zip(&self.values) {
            writeln!(w, "{},{},{}", xi.as_f64(), z.re.as_f64(), z.im.as_f64())?;
        }
        Ok(())
    }

    /// Reads the CSV written by [`SpectralFunction::write_csv`]; the rows must
    /// form a uniform grid.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if n == 0 {
                if line.trim() != "xi,re,im" {
                    return Err(Error::Format(format!("unexpected CSV header {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?;
            if cols.len() != 3 {
                return Err(Error::Format(format!("line {}: expected 3 columns", n + 1)));
            }
            xs.push(cols[0]);
            values.push(Complex::new(T::lit(cols[1]), T::lit(cols[2])));
        }
        if xs.len() < 2 {
            return Err(Error::Format("need at least two rows".into()));
        }
        let delta = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        let grid = FrequencyGrid::new(T::lit(xs[0]), T::lit(delta), xs.len())?;
        SpectralFunction::new(grid, values)
    }
}

/// Japanese bracket `⟨ξ⟩ = (1 + ξ²)^{1/2}`.
pub fn japanese<T: Real>(xi: T) -> T {
    (T::one() + xi * xi).sqrt()
}

pub fn sobolev_norm<T: Real>(f: &SpectralFunction<T>, s: T) -> T {
    let mut acc = T::zero();
    for (j, z) in f.values.iter().enumerate() {
        let xi = f.grid.point(j);
        let w = if s == T::zero() { T::one() } else { (T::one() + xi * xi).powf(s) };
        acc += w * z.norm_sqr() * f.grid.weight(j);
    }
    (acc / (T::PI() + T::PI())).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlExponent {
    One,
    Infinity,
}

pub fn fl_norm<T: Real>(f: &SpectralFunction<T>, p: FlExponent) -> T {
    match p {
        FlExponent::One => f
            .values
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (j, z)| acc + z.norm() * f.grid.weight(j)),
        FlExponent::Infinity => f.values.iter().fold(T::zero(), |m, z| m.max(z.norm())),
    }
}

/// `sup_ξ |ξ f̂(ξ)|`, the Fourier-Lebesgue ∞-norm of the derivative.
pub fn fl_inf_derivative<T: Real>(f: &SpectralFunction<T>) -> T {
    f.values
        .iter()
        .enumerate()
        .fold(T::zero(), |m, (j, z)| m.max(z.norm() * f.grid.point(j).abs()))
}

/// Linear Schrödinger flow `e^{it∂ₓ²}`: multiplication by `e^{-itξ²}`.
pub fn free_evolve<T: Real>(f: &SpectralFunction<T>, t: T) -> SpectralFunction<T> {
    let values = f
        .values
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let xi = f.grid.point(j);
            z * Complex::from_polar(T::one(), -t * xi * xi)
        })
        .collect();
    SpectralFunction { grid: f.grid, values }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub s: f64,
    pub h_s: f64,
    pub l2: f64,
    pub fl1: f64,
    pub fl_inf: f64,
}

/// Regularity regime selecting the parameter formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularityCase {
    /// `s < -1/2`
    Case1,
    /// `s = -1/2`
    Case2,
    /// `-1/2 < s < 0`
    Case3,
}

impl RegularityCase {
    pub const HALF_TOLERANCE: f64 = 1e-12;

    pub fn from_s(s: f64) -> Self {
        if (s + 0.5).abs() <= Self::HALF_TOLERANCE {
            RegularityCase::Case2
        } else if s < -0.5 {
            RegularityCase::Case1
        } else {
            RegularityCase::Case3
        }
    }
}

/// Data parameters `(s, N, A, R, T, δ)` of the two-block initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSet<T> {
    pub s: T,
    /// Frequency scale `N`: blocks sit at `2N` and `3N`.
    #[serde(rename = "N")]
    pub freq_scale: T,
    /// Block width `A`.
    #[serde(rename = "A")]
    pub block_width: T,
    /// Block height `R`.
    #[serde(rename = "R")]
    pub amplitude: T,
    /// Evaluation time `T`.
    #[serde(rename = "T")]
    pub time: T,
    pub delta: T,
    #[serde(rename = "case_label")]
    pub case: RegularityCase,
}

impl<T: Real> ParameterSet<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.freq_scale >= T::one()) {
            return Err(Error::config("N must be at least 1"));
        }
        if !(self.block_width >= T::one()) {
            return Err(Error::config("A must be at least 1"));
        }
        if !(self.amplitude > T::zero()) {
            return Err(Error::config("R must be positive"));
        }
        if !(self.time > T::zero()) {
            return Err(Error::config("T must be positive"));
        }
        Ok(())
    }

    /// Block centres `2N` and `3N`.
    pub fn centers(&self) -> [T; 2] {
        [self.freq_scale * T::lit(2.0), self.freq_scale * T::lit(3.0)]
    }

    /// Lattice grid with `points_per_width` cells per block width covering
    /// both blocks plus one zero cell on each side.
    pub fn phi_grid(&self, points_per_width: usize) -> FrequencyGrid<T> {
        let delta = self.block_width / T::of_usize(points_per_width);
        let half = self.block_width * T::lit(0.5);
        let [c2, c3] = self.centers();
        FrequencyGrid::lattice_covering(delta, c2 - half - delta, c3 + half + delta)
    }
}

/// Minimum grid points per block width accepted by [`make_phi`].
pub const MIN_POINTS_PER_WIDTH: usize = 32;
/// Default grid points per block width.
pub const DEFAULT_POINTS_PER_WIDTH: usize = 64;

/// Two-block datum: `R` on `[2N-A/2, 2N+A/2) ∪ [3N-A/2, 3N+A/2)`, zero elsewhere.
pub fn make_phi<T: Real>(
    params: &ParameterSet<T>,
    grid: &FrequencyGrid<T>,
) -> Result<SpectralFunction<T>> {
    params.validate()?;
    let a = params.block_width;
    let half = a * T::lit(0.5);
    let [c2, c3] = params.centers();
    if grid.xi_min > c2 - half || grid.xi_max() < c3 + half {
        return Err(Error::config(format!(
            "grid [{}, {}] does not cover the blocks [{}, {}]",
            grid.xi_min,
            grid.xi_max(),
            c2 - half,
            c3 + half
        )));
    }
    if grid.delta_xi * T::of_usize(MIN_POINTS_PER_WIDTH) > a * (T::one() + T::lit(1e-12)) {
        return Err(Error::config(format!(
            "grid spacing {} gives fewer than {MIN_POINTS_PER_WIDTH} points per block width {a}",
            grid.delta_xi
        )));
    }
    let r = Complex::new(params.amplitude, T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    Ok(SpectralFunction::from_fn(*grid, |xi| {
        let in_block = |c: T| xi >= c - half && xi < c + half;
        if in_block(c2) || in_block(c3) {
            r
        } else {
            zero
        }
    }))
}

/// Smooth compactly supported bump `exp(-1/(1-(ξ/M)²))` on `|ξ| < M`,
/// scaled to unit `H^s` norm, on the lattice `delta·ℤ`.
pub fn smooth_bump<T: Real>(delta: T, radius: T, s: T) -> Result<SpectralFunction<T>> {
    if !(radius > T::zero()) {
        return Err(Error::config("bump radius must be positive"));
    }
    let grid = FrequencyGrid::lattice_covering(delta, -radius - delta, radius + delta);
    let raw = SpectralFunction::from_fn(grid, |xi| {
        let u = xi / radius;
        let v = if u.abs() < T::one() {
            (-T::one() / (T::one() - u * u)).exp()
        } else {
            T::zero()
        };
        Complex::new(v, T::zero())
    });
    let norm = sobolev_norm(&raw, s);
    if !(norm > T::zero()) {
        return Err(Error::config("bump is not resolved by the grid"));
    }
    Ok(raw.scaled(Complex::new(T::one() / norm, T::zero())))
}
