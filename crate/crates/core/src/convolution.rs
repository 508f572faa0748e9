//! Linear convolution of finitely supported lattice sequences via FFT.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Forward and inverse plans for one transform length.
type PlanPair<T> = (usize, Arc<dyn Fft<T>>, Arc<dyn Fft<T>>);

/// FFT convolution engine with a plan cache and reusable scratch buffers.
pub struct Convolver<T: Real> {
    planner: FftPlanner<T>,
    forward: Option<PlanPair<T>>,
    acc: Vec<Complex<T>>,
    buf: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> Default for Convolver<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Convolver<T> {
    pub fn new() -> Self {
        Convolver {
            planner: FftPlanner::new(),
            forward: None,
            acc: Vec::new(),
            buf: Vec::new(),
            scratch: Vec::new(),
        }
    }

    fn plans(&mut self, size: usize) -> (Arc<dyn Fft<T>>, Arc<dyn Fft<T>>) {
        match &self.forward {
            Some((n, f, i)) if *n == size => (f.clone(), i.clone()),
            _ => {
                let f = self.planner.plan_fft_forward(size);
                let i = self.planner.plan_fft_inverse(size);
                self.forward = Some((size, f.clone(), i.clone()));
                (f, i)
            }
        }
    }

    /// Full linear convolution `s_1 * s_2 * ... * s_m` of nonempty sequences.
    ///
    /// The transform length is the next power of two at or above the output
    /// length, so no circular wraparound occurs.
    pub fn convolve(&mut self, seqs: &[&[Complex<T>]]) -> Vec<Complex<T>> {
        assert!(!seqs.is_empty() && seqs.iter().all(|s| !s.is_empty()));
        let out_len = seqs.iter().map(|s| s.len()).sum::<usize>() + 1 - seqs.len();
        if seqs.len() == 1 {
            return seqs[0].to_vec();
        }
        let size = out_len.next_power_of_two();
        let (fwd, inv) = self.plans(size);
        let zero = Complex::new(T::zero(), T::zero());
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        self.scratch.resize(scratch_len, zero);
        self.acc.clear();
        self.acc.resize(size, zero);
        self.buf.resize(size, zero);
        for (i, s) in seqs.iter().enumerate() {
            let target = if i == 0 { &mut self.acc } else { &mut self.buf };
            target[..s.len()].copy_from_slice(s);
            target[s.len()..].fill(zero);
            fwd.process_with_scratch(target, &mut self.scratch);
            if i > 0 {
                for (a, b) in self.acc.iter_mut().zip(&self.buf) {
                    *a *= b;
                }
            }
        }
        inv.process_with_scratch(&mut self.acc, &mut self.scratch);
        let scale = T::one() / T::of_usize(size);
        self.acc[..out_len].iter().map(|z| z * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(a: &[Complex<f64>], b: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let mut out = vec![Complex::new(0.0, 0.0); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn matches_direct_sum() {
        let a: Vec<_> = (0..7).map(|i| Complex::new(i as f64, 1.0 - i as f64)).collect();
        let b: Vec<_> = (0..4).map(|i| Complex::new(0.5 * i as f64, 2.0)).collect();
        let c: Vec<_> = (0..5).map(|i| Complex::new(1.0, -(i as f64))).collect();
        let expected = direct(&direct(&a, &b), &c);
        let got = Convolver::new().convolve(&[&a, &b, &c]);
        assert_eq!(got.len(), expected.len());
        for (x, y) in got.iter().zip(&expected) {
            assert!((x - y).norm() < 1e-11, "{x} vs {y}");
        }
    }
}
