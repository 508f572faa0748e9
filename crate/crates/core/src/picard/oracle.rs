use num_complex::Complex;

use crate::scalar::Real;
use crate::spectrum::{FrequencyGrid, SpectralFunction};

/// `∫_0^t e^{it'Φ} dt' = (e^{itΦ} - 1)/(iΦ)`, with a Taylor expansion for
/// small `|Φ|t` where the closed form cancels.
pub fn phase_integral<T: Real>(phase: T, t: T) -> Complex<T> {
    let x = phase * t;
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        Complex::new(T::one() - x2 / T::lit(6.0), x / T::lit(2.0) - x2 * x / T::lit(24.0)) * t
    } else {
        (Complex::cis(x) - Complex::new(T::one(), T::zero())) / Complex::new(T::zero(), phase)
    }
}

/// Quintic Picard term `Ψ_φ(K(o,o,o,o,o))(t)` by direct summation over the
/// lattice support of `phi`, with the time integral in closed form.
///
/// Output points are snapped to the lattice of `phi`. Cost is `|supp φ|⁴` per
/// output point, so this is meant for spot checks.
pub fn first_iterate_quintic_exact<T: Real>(
    phi: &SpectralFunction<T>,
    t: T,
    grid: &FrequencyGrid<T>,
) -> SpectralFunction<T> {
    let zero = Complex::new(T::zero(), T::zero());
    if t == T::zero() {
        return SpectralFunction::zeros(*grid);
    }
    let delta = phi.grid.delta_xi;
    let start = (phi.grid.xi_min / delta).round().to_i64().expect("finite grid");
    let support: Vec<(i64, T, Complex<T>)> = phi
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != zero)
        .map(|(j, v)| {
            let xi = T::of_i64(start + j as i64) * delta;
            (start + j as i64, xi * xi, *v)
        })
        .collect();
    let lookup = |m: i64| -> Option<(T, Complex<T>)> {
        let j = m - start;
        if j < 0 || j >= phi.values.len() as i64 {
            return None;
        }
        let v = phi.values[j as usize];
        if v == zero {
            return None;
        }
        let xi = T::of_i64(m) * delta;
        Some((xi * xi, v))
    };
    let cell = (delta / T::TAU()).powi(4);
    let half_i = Complex::new(T::zero(), T::lit(0.5));
    let values = grid
        .points()
        .map(|x| {
            let m = (x / delta).round().to_i64().expect("finite point");
            let xi = T::of_i64(m) * delta;
            let q = xi * xi;
            let mut sum = zero;
            for &(m1, q1, v1) in &support {
                for &(m2, q2, v2) in &support {
                    let p12 = v1 * v2.conj();
                    for &(m3, q3, v3) in &support {
                        let p123 = p12 * v3;
                        let base = q - q1 + q2 - q3;
                        let m_rest = m - m1 + m2 - m3;
                        for &(m4, q4, v4) in &support {
                            let Some((q5, v5)) = lookup(m_rest + m4) else { continue };
                            let phase = base + q4 - q5;
                            sum += p123 * v4.conj() * v5 * phase_integral(phase, t);
                        }
                    }
                }
            }
            sum * half_i * Complex::cis(-t * q) * cell
        })
        .collect();
    SpectralFunction { grid: *grid, values }
}
