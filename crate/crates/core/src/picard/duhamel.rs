use num_complex::Complex;

use crate::convolution::Convolver;
use crate::error::{Error, Result};
use crate::quadrature::{cumulative, simpson_weight};
use crate::scalar::Real;
use crate::spectrum::{FrequencyGrid, SpectralFunction};
use crate::trees::{slot_conjugated, NodeKind};

use super::grid::SpaceTimeFunction;

/// Constant in front of the Duhamel integral of each node kind.
///
/// With `v̂_t = -iξ²v̂ + N̂(v)` and `N(v) = -v²∂ₓv̄ + (i/2)|v|⁴v`, Duhamel's
/// formula gives `v̂(t) = e^{-itξ²}v̂(0) + ∫ e^{-i(t-t')ξ²} N̂(v(t')) dt'`.
pub fn prefactor<T: Real>(kind: NodeKind) -> Complex<T> {
    match kind {
        NodeKind::Node3 => Complex::new(-T::one(), T::zero()),
        NodeKind::Node5 => Complex::new(T::zero(), T::lit(0.5)),
        NodeKind::Leaf => Complex::new(T::one(), T::zero()),
    }
}

/// What a Duhamel evaluation produces.
pub(crate) enum Output<T> {
    Frames(SpaceTimeFunction<T>),
    Final(SpectralFunction<T>),
}

/// Lattice window of the output of a node applied to inputs on `grids`.
fn output_window<T: Real>(kind: NodeKind, grids: &[&FrequencyGrid<T>]) -> Result<(i64, usize)> {
    let mut start = 0i64;
    let mut len = 1usize;
    for (slot, g) in grids.iter().enumerate() {
        let (lo, hi) = g.lattice_range()?;
        start += if slot_conjugated(kind, slot) { -(hi - 1) } else { lo };
        len += g.count - 1;
    }
    Ok((start, len))
}

fn check_inputs<T: Real>(kind: NodeKind, inputs: &[&SpaceTimeFunction<T>]) -> Result<()> {
    if inputs.len() != kind.arity() || inputs.is_empty() {
        return Err(Error::config(format!("{kind:?} takes {} inputs", kind.arity())));
    }
    let tg = inputs[0].time_grid();
    let g = inputs[0].grid();
    for v in inputs {
        if v.time_grid() != tg {
            return Err(Error::config("Duhamel inputs must share one time grid"));
        }
        if !v.grid().same_spacing(g) {
            return Err(Error::config("Duhamel inputs must share one frequency spacing"));
        }
    }
    Ok(())
}

/// Evaluates one Duhamel node. `bound` is an optional lattice range the
/// output must fit in; mass within two cells of its edge is an error.
pub(crate) fn apply<T: Real>(
    kind: NodeKind,
    inputs: &[&SpaceTimeFunction<T>],
    conv: &mut Convolver<T>,
    bound: Option<(i64, i64)>,
    final_only: bool,
) -> Result<Output<T>> {
    check_inputs(kind, inputs)?;
    let tg = *inputs[0].time_grid();
    let delta = inputs[0].grid().delta_xi;
    let grids: Vec<_> = inputs.iter().map(|v| v.grid()).collect();
    let (start, width) = output_window(kind, &grids)?;
    let grid = FrequencyGrid::lattice(delta, start, width);
    let xi2: Vec<T> = grid.points().map(|x| x * x).collect();
    let m = inputs.len();
    // Each convolution over the lattice carries a factor Δ/2π.
    let cell = Complex::new((delta / T::TAU()).powi(m as i32 - 1), T::zero());

    let starts: Vec<i64> = grids.iter().map(|g| g.lattice_start()).collect::<Result<_>>()?;
    let zero = Complex::new(T::zero(), T::zero());
    let mut slots: Vec<Vec<Complex<T>>> = grids.iter().map(|g| vec![zero; g.count]).collect();
    let mut integrand = |n: usize, conv: &mut Convolver<T>| -> Vec<Complex<T>> {
        for (slot, buf) in slots.iter_mut().enumerate() {
            let src = inputs[slot].frame_values(n);
            if !slot_conjugated(kind, slot) {
                buf.copy_from_slice(src);
                continue;
            }
            let len = src.len();
            let derivative = kind == NodeKind::Node3 && slot == 2;
            for (k, out) in buf.iter_mut().enumerate() {
                let j = len - 1 - k;
                let mut z = src[j];
                if derivative {
                    // F[∂ₓv̄](η) = iη·conj(v̂(-η)) = conj(iξ v̂(ξ)) at ξ = -η.
                    let xi = T::of_i64(starts[slot] + j as i64) * delta;
                    z *= Complex::new(T::zero(), xi);
                }
                *out = z.conj();
            }
        }
        let refs: Vec<&[Complex<T>]> = slots.iter().map(|s| s.as_slice()).collect();
        let mut g = conv.convolve(&refs);
        let t = tg.time(n);
        for (z, &q) in g.iter_mut().zip(&xi2) {
            *z = *z * cell * Complex::cis(t * q);
        }
        g
    };

    let pre = prefactor::<T>(kind);
    let out = if final_only {
        let h = tg.step();
        let mut acc = vec![zero; width];
        for n in 0..tg.nodes() {
            let w = simpson_weight(n, tg.steps, h);
            for (a, z) in acc.iter_mut().zip(integrand(n, conv)) {
                *a += z * w;
            }
        }
        let t = tg.t_max;
        for (a, &q) in acc.iter_mut().zip(&xi2) {
            *a = *a * pre * Complex::cis(-t * q);
        }
        Output::Final(SpectralFunction { grid, values: acc })
    } else {
        let mut g = Vec::with_capacity(width * tg.nodes());
        for n in 0..tg.nodes() {
            g.extend(integrand(n, conv));
        }
        let mut data = cumulative(&g, width, tg.step());
        drop(g);
        for n in 0..tg.nodes() {
            let t = tg.time(n);
            for (z, &q) in data[n * width..(n + 1) * width].iter_mut().zip(&xi2) {
                *z = *z * pre * Complex::cis(-t * q);
            }
        }
        Output::Frames(SpaceTimeFunction::new(tg, grid, data)?)
    };
    check_finite(&out)?;
    match bound {
        Some(b) => clip(out, b),
        None => Ok(out),
    }
}

fn check_finite<T: Real>(out: &Output<T>) -> Result<()> {
    let vals = match out {
        Output::Frames(f) => f.data(),
        Output::Final(f) => &f.values,
    };
    if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Accuracy("non-finite value in Duhamel output".into()));
    }
    Ok(())
}

/// Restricts the output to `bound`, failing if any mass would be lost or sits
/// within two cells of the bound's edge.
fn clip<T: Real>(out: Output<T>, (b0, b1): (i64, i64)) -> Result<Output<T>> {
    let (grid, nodes, data) = match &out {
        Output::Frames(f) => (*f.grid(), f.time_grid().nodes(), f.data()),
        Output::Final(f) => (f.grid, 1, f.values.as_slice()),
    };
    let (lo, hi) = grid.lattice_range()?;
    if lo >= b0 + 2 && hi <= b1 - 2 {
        return Ok(out);
    }
    let scale = data.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    let floor = scale * T::lit(1e-12);
    let w = grid.count;
    for n in 0..nodes {
        for (j, z) in data[n * w..(n + 1) * w].iter().enumerate() {
            let m = lo + j as i64;
            if (m < b0 + 2 || m >= b1 - 2) && z.norm() > floor {
                return Err(Error::Accuracy(format!(
                    "support clipping: mass {:.3e} at frequency {} near the edge of the evaluation grid",
                    z.norm().as_f64(),
                    (T::of_i64(m) * grid.delta_xi).as_f64()
                )));
            }
        }
    }
    let (c0, c1) = (lo.max(b0), hi.min(b1).max(lo.max(b0) + 1));
    let cropped = FrequencyGrid::lattice(grid.delta_xi, c0, (c1 - c0) as usize);
    let pick = |row: &[Complex<T>]| -> Vec<Complex<T>> {
        (c0..c1)
            .map(|m| {
                let j = m - lo;
                if j >= 0 && j < w as i64 { row[j as usize] } else { Complex::new(T::zero(), T::zero()) }
            })
            .collect()
    };
    Ok(match out {
        Output::Final(f) => Output::Final(SpectralFunction { grid: cropped, values: pick(&f.values) }),
        Output::Frames(f) => {
            let data = (0..nodes).flat_map(|n| pick(f.frame_values(n))).collect();
            Output::Frames(SpaceTimeFunction::new(*f.time_grid(), cropped, data)?)
        }
    })
}

fn frames<T>(out: Output<T>) -> SpaceTimeFunction<T> {
    match out {
        Output::Frames(f) => f,
        Output::Final(_) => unreachable!("full evaluation requested"),
    }
}

/// `-∫_0^t S(t-t') v₁ v₂ ∂ₓv̄₃ dt'` on the Fourier side, at every time node.
pub fn duhamel_j<T: Real>(
    v1: &SpaceTimeFunction<T>,
    v2: &SpaceTimeFunction<T>,
    v3: &SpaceTimeFunction<T>,
) -> Result<SpaceTimeFunction<T>> {
    apply(NodeKind::Node3, &[v1, v2, v3], &mut Convolver::new(), None, false).map(frames)
}

/// `(i/2)∫_0^t S(t-t') v₁ v̄₂ v₃ v̄₄ v₅ dt'` on the Fourier side.
pub fn duhamel_k<T: Real>(
    v1: &SpaceTimeFunction<T>,
    v2: &SpaceTimeFunction<T>,
    v3: &SpaceTimeFunction<T>,
    v4: &SpaceTimeFunction<T>,
    v5: &SpaceTimeFunction<T>,
) -> Result<SpaceTimeFunction<T>> {
    apply(NodeKind::Node5, &[v1, v2, v3, v4, v5], &mut Convolver::new(), None, false).map(frames)
}

/// As [`duhamel_j`] / [`duhamel_k`], with the output restricted to the
/// lattice range of `bound` and an accuracy error if that clips mass.
pub fn duhamel_bounded<T: Real>(
    kind: NodeKind,
    inputs: &[&SpaceTimeFunction<T>],
    bound: &FrequencyGrid<T>,
) -> Result<SpaceTimeFunction<T>> {
    let b = bound.lattice_range()?;
    apply(kind, inputs, &mut Convolver::new(), Some(b), false).map(frames)
}

