//! Fourth-order time quadrature on a uniform grid.
//!
//! Even nodes use composite Simpson; odd nodes `n >= 3` use Simpson up to
//! `n - 3` followed by the 3/8 rule; node 1 integrates the cubic through the
//! first four samples. Every node is therefore fourth-order accurate.

use num_complex::Complex;

use crate::scalar::Real;

/// Cumulative integrals `I_n = ∫_0^{t_n} f` of frame-valued samples.
///
/// `data` holds `nodes` frames of `width` values each, frame-major; the result
/// has the same layout. Requires at least four intervals (five nodes).
pub fn cumulative<T: Real>(data: &[Complex<T>], width: usize, h: T) -> Vec<Complex<T>> {
    assert!(width > 0 && data.len().is_multiple_of(width));
    let nodes = data.len() / width;
    assert!(nodes >= 5, "cumulative quadrature needs at least 4 intervals");
    let f = |n: usize| &data[n * width..(n + 1) * width];
    let mut out = vec![Complex::new(T::zero(), T::zero()); data.len()];
    let third = h / T::lit(3.0);
    let three_eighths = h * T::lit(3.0) / T::lit(8.0);
    let c1 = h / T::lit(24.0);
    for n in 1..nodes {
        let (done, rest) = out.split_at_mut(n * width);
        let cur = &mut rest[..width];
        if n == 1 {
            let (f0, f1, f2, f3) = (f(0), f(1), f(2), f(3));
            for j in 0..width {
                cur[j] = (f0[j] * T::lit(9.0) + f1[j] * T::lit(19.0) - f2[j] * T::lit(5.0) + f3[j])
                    * c1;
            }
        } else if n % 2 == 0 {
            let prev = &done[(n - 2) * width..(n - 1) * width];
            let (a, b, c) = (f(n - 2), f(n - 1), f(n));
            for j in 0..width {
                cur[j] = prev[j] + (a[j] + b[j] * T::lit(4.0) + c[j]) * third;
            }
        } else {
            let prev = &done[(n - 3) * width..(n - 2) * width];
            let (a, b, c, d) = (f(n - 3), f(n - 2), f(n - 1), f(n));
            for j in 0..width {
                cur[j] = prev[j] + (a[j] + (b[j] + c[j]) * T::lit(3.0) + d[j]) * three_eighths;
            }
        }
    }
    out
}

/// Composite Simpson weight of node `n` out of `steps` (even) intervals.
pub fn simpson_weight<T: Real>(n: usize, steps: usize, h: T) -> T {
    debug_assert!(steps.is_multiple_of(2));
    let third = h / T::lit(3.0);
    if n == 0 || n == steps {
        third
    } else if n % 2 == 1 {
        third * T::lit(4.0)
    } else {
        third * T::lit(2.0)
    }
}
