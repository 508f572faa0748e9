//! Fourier-side Picard iteration: Duhamel operators, tree-indexed terms,
//! generation sums and truncated series.

mod duhamel;
mod grid;
mod oracle;

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

pub use duhamel::{duhamel_bounded, duhamel_j, duhamel_k, prefactor};
pub use grid::{FrameAxis, FrameFile, SpaceTimeFunction, TimeGrid, FRAME_MAGIC};
pub use oracle::{first_iterate_quintic_exact, phase_integral};

use crate::convolution::Convolver;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectrum::{sobolev_norm, FrequencyGrid, SpectralFunction};
use crate::trees::{enumerate_trees_capped, Tree};
use duhamel::{apply, Output};

/// Largest `k + p` evaluated unless raised explicitly.
pub const DEFAULT_PICARD_CAP: usize = 2;

/// Default `c` in the time resolution rule `steps ≥ c·t·Ξ²`.
pub const DEFAULT_TIME_FACTOR: f64 = 16.0;

/// Ratio of consecutive level norms above which the series is flagged.
pub const RATIO_WARNING: f64 = 0.5;

/// Largest `|ξ|` at which `phi` is nonzero (zero for the zero function).
pub fn data_extent<T: Real>(phi: &SpectralFunction<T>) -> T {
    phi.grid
        .points()
        .zip(&phi.values)
        .filter(|(_, v)| v.norm() > T::zero())
        .map(|(x, _)| x.abs())
        .fold(T::zero(), T::max)
}

/// Most terminals of a tree with `k + p = level`: every node quinary.
pub fn max_terminals(level: usize) -> usize {
    4 * level + 1
}

/// Time grid resolving every phase reachable by trees up to `level`.
pub fn time_grid_for<T: Real>(phi: &SpectralFunction<T>, t: T, level: usize, factor: f64) -> Result<TimeGrid<T>> {
    let extent = data_extent(phi) * T::of_usize(max_terminals(level));
    TimeGrid::resolved(t, extent.max(T::one()), factor)
}

/// Evaluates `Ψ_φ(T)` for trees sharing one datum and one time grid.
///
/// Subtree results are cached, so the terms of a generation reuse the
/// lower-generation work. Top-level results are returned but not cached.
pub struct PicardEvaluator<T: Real> {
    time_grid: TimeGrid<T>,
    leaf: Arc<SpaceTimeFunction<T>>,
    cache: HashMap<Tree, Arc<SpaceTimeFunction<T>>>,
    conv: Convolver<T>,
    cap: usize,
    bound: Option<(i64, i64)>,
}

impl<T: Real> PicardEvaluator<T> {
    pub fn new(phi: &SpectralFunction<T>, time_grid: TimeGrid<T>) -> Result<Self> {
        let phi = phi.trimmed()?;
        Ok(PicardEvaluator {
            time_grid,
            leaf: Arc::new(SpaceTimeFunction::free_evolution(&phi, time_grid)),
            cache: HashMap::new(),
            conv: Convolver::new(),
            cap: DEFAULT_PICARD_CAP,
            bound: None,
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    /// Restricts every intermediate result to `grid`; evaluation fails with an
    /// accuracy error if that would clip mass.
    pub fn with_bound(mut self, grid: &FrequencyGrid<T>) -> Result<Self> {
        self.bound = Some(grid.lattice_range()?);
        Ok(self)
    }

    pub fn time_grid(&self) -> &TimeGrid<T> {
        &self.time_grid
    }

    pub fn free_evolution(&self) -> &SpaceTimeFunction<T> {
        &self.leaf
    }

    fn check_cap(&self, k: usize, p: usize) -> Result<()> {
        if k + p > self.cap {
            return Err(Error::Resource { what: format!("tree generation k+p = {}", k + p), cap: self.cap });
        }
        Ok(())
    }

    fn eval(&mut self, tree: &Tree, keep: bool) -> Result<Arc<SpaceTimeFunction<T>>> {
        if tree.is_leaf() {
            return Ok(self.leaf.clone());
        }
        if let Some(hit) = self.cache.get(tree) {
            return Ok(hit.clone());
        }
        let children = self.children(tree)?;
        let refs: Vec<&SpaceTimeFunction<T>> = children.iter().map(|c| c.as_ref()).collect();
        let out = match apply(tree.kind(), &refs, &mut self.conv, self.bound, false)? {
            Output::Frames(f) => Arc::new(f),
            Output::Final(_) => unreachable!(),
        };
        if keep {
            self.cache.insert(tree.clone(), out.clone());
        }
        Ok(out)
    }

    fn children(&mut self, tree: &Tree) -> Result<Vec<Arc<SpaceTimeFunction<T>>>> {
        tree.children().iter().map(|c| self.eval(c, true)).collect()
    }

    /// `Ψ_φ(T)` at every time node.
    pub fn psi(&mut self, tree: &Tree) -> Result<Arc<SpaceTimeFunction<T>>> {
        let (k, p) = tree.generation();
        self.check_cap(k, p)?;
        self.eval(tree, false)
    }

    /// `Ψ_φ(T)(t_max)` only; the root integral is accumulated without
    /// storing its frames.
    pub fn psi_final(&mut self, tree: &Tree) -> Result<SpectralFunction<T>> {
        let (k, p) = tree.generation();
        self.check_cap(k, p)?;
        if tree.is_leaf() {
            return Ok(self.leaf.final_frame());
        }
        if let Some(hit) = self.cache.get(tree) {
            return Ok(hit.final_frame());
        }
        let children = self.children(tree)?;
        let refs: Vec<&SpaceTimeFunction<T>> = children.iter().map(|c| c.as_ref()).collect();
        match apply(tree.kind(), &refs, &mut self.conv, self.bound, true)? {
            Output::Final(f) => Ok(f),
            Output::Frames(_) => unreachable!(),
        }
    }

    fn trees(&self, k: usize, p: usize) -> Result<Vec<Tree>> {
        self.check_cap(k, p)?;
        enumerate_trees_capped(k, p, self.cap)
    }

    /// `Ξ_{k,p}`: the sum of `Ψ_φ(T)` over all trees with `k` ternary and `p`
    /// quinary nodes.
    pub fn generation(&mut self, k: usize, p: usize) -> Result<SpaceTimeFunction<T>> {
        let mut acc: Option<SpaceTimeFunction<T>> = None;
        for tree in self.trees(k, p)? {
            let term = self.psi(&tree)?;
            acc = Some(match acc {
                None => term.as_ref().clone(),
                Some(a) => a.add(&term)?,
            });
        }
        Ok(acc.expect("every generation has at least one tree"))
    }

    pub fn generation_final(&mut self, k: usize, p: usize) -> Result<SpectralFunction<T>> {
        let mut acc: Option<SpectralFunction<T>> = None;
        for tree in self.trees(k, p)? {
            let term = self.psi_final(&tree)?;
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term)?,
            });
        }
        Ok(acc.expect("every generation has at least one tree"))
    }

    /// `Ξ_j = Σ_{k+p=j} Ξ_{k,p}`.
    pub fn level(&mut self, j: usize) -> Result<SpaceTimeFunction<T>> {
        let mut acc = self.generation(j, 0)?;
        for p in 1..=j {
            acc = acc.add(&self.generation(j - p, p)?)?;
        }
        Ok(acc)
    }

    pub fn level_final(&mut self, j: usize) -> Result<SpectralFunction<T>> {
        let mut acc = self.generation_final(j, 0)?;
        for p in 1..=j {
            acc = acc.add(&self.generation_final(j - p, p)?)?;
        }
        Ok(acc)
    }
}

/// `Ψ(T; φ₁, …, φₙ)`: the tree term with the `i`-th terminal (depth-first,
/// left to right) replaced by `leaves[i]`. Nothing is cached.
pub fn psi_assigned<T: Real>(tree: &Tree, leaves: &[&SpaceTimeFunction<T>]) -> Result<SpaceTimeFunction<T>> {
    match assigned(tree, leaves, false)? {
        Output::Frames(f) => Ok(f),
        Output::Final(_) => unreachable!(),
    }
}

/// As [`psi_assigned`], returning only the value at the final time.
pub fn psi_assigned_final<T: Real>(tree: &Tree, leaves: &[&SpaceTimeFunction<T>]) -> Result<SpectralFunction<T>> {
    match assigned(tree, leaves, true)? {
        Output::Final(f) => Ok(f),
        Output::Frames(f) => Ok(f.final_frame()),
    }
}

fn assigned<T: Real>(tree: &Tree, leaves: &[&SpaceTimeFunction<T>], final_only: bool) -> Result<Output<T>> {
    if leaves.len() != tree.terminal_count() {
        return Err(Error::config(format!(
            "tree has {} terminals but {} leaf functions were given",
            tree.terminal_count(),
            leaves.len()
        )));
    }
    fn walk<T: Real>(
        tree: &Tree,
        leaves: &[&SpaceTimeFunction<T>],
        next: &mut usize,
        conv: &mut Convolver<T>,
        final_only: bool,
    ) -> Result<Output<T>> {
        if tree.is_leaf() {
            let f = leaves[*next].clone();
            *next += 1;
            return Ok(Output::Frames(f));
        }
        let mut kids = Vec::with_capacity(tree.children().len());
        for c in tree.children() {
            match walk(c, leaves, next, conv, false)? {
                Output::Frames(f) => kids.push(f),
                Output::Final(_) => unreachable!(),
            }
        }
        let refs: Vec<&SpaceTimeFunction<T>> = kids.iter().collect();
        apply(tree.kind(), &refs, conv, None, final_only)
    }
    walk(tree, leaves, &mut 0, &mut Convolver::new(), final_only)
}

fn unwrap_arc<T: Clone>(a: Arc<T>) -> T {
    Arc::try_unwrap(a).unwrap_or_else(|a| a.as_ref().clone())
}

/// `Ψ_φ(T)` on `tg`; leaves are the free evolution of `phi`.
pub fn psi<T: Real>(tree: &Tree, phi: &SpectralFunction<T>, tg: TimeGrid<T>) -> Result<SpaceTimeFunction<T>> {
    let mut ev = PicardEvaluator::new(phi, tg)?;
    ev.psi(tree).map(unwrap_arc)
}

pub fn xi_generation<T: Real>(
    k: usize,
    p: usize,
    phi: &SpectralFunction<T>,
    tg: TimeGrid<T>,
) -> Result<SpaceTimeFunction<T>> {
    PicardEvaluator::new(phi, tg)?.generation(k, p)
}

pub fn xi_level<T: Real>(j: usize, phi: &SpectralFunction<T>, tg: TimeGrid<T>) -> Result<SpaceTimeFunction<T>> {
    PicardEvaluator::new(phi, tg)?.level(j)
}

/// Options for [`series_sum_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesOptions {
    pub cap: usize,
    pub time_factor: f64,
    /// Return a divergence error when a level ratio reaches one; otherwise
    /// the sum is returned with `ratio_warning` set.
    pub fail_on_divergence: bool,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { cap: DEFAULT_PICARD_CAP, time_factor: DEFAULT_TIME_FACTOR, fail_on_divergence: true }
    }
}

/// Truncated Picard series at one time.
#[derive(Debug, Clone)]
pub struct SeriesSum<T> {
    pub t: T,
    pub time_grid: Option<TimeGrid<T>>,
    /// `Ξ_j(t)` for `j = 0..=j_max`.
    pub levels: Vec<SpectralFunction<T>>,
    pub sum: SpectralFunction<T>,
    /// `‖Ξ_j(t)‖_{L²}`.
    pub level_norms: Vec<f64>,
    /// `‖Ξ_{j+1}‖/‖Ξ_j‖`.
    pub ratios: Vec<f64>,
    /// Geometric extrapolation of the omitted levels' L² norm.
    pub tail_estimate: Option<f64>,
    /// Set when some ratio reached [`RATIO_WARNING`].
    pub ratio_warning: bool,
}

pub fn series_sum<T: Real>(phi: &SpectralFunction<T>, t: T, j_max: usize) -> Result<SeriesSum<T>> {
    series_sum_with(phi, t, j_max, SeriesOptions::default())
}

/// `Σ_{j ≤ j_max} Ξ_j(φ)(t)` with level norms, ratios and a tail estimate.
/// A ratio of one or more is reported as a divergence error.
pub fn series_sum_with<T: Real>(
    phi: &SpectralFunction<T>,
    t: T,
    j_max: usize,
    opts: SeriesOptions,
) -> Result<SeriesSum<T>> {
    if j_max > opts.cap {
        return Err(Error::Resource { what: format!("series level {j_max}"), cap: opts.cap });
    }
    if t < T::zero() || !t.is_finite() {
        return Err(Error::config(format!("series time must be nonnegative, got {t}")));
    }
    let (levels, time_grid) = if t == T::zero() {
        (vec![phi.trimmed()?], None)
    } else {
        let tg = time_grid_for(phi, t, j_max, opts.time_factor)?;
        let mut ev = PicardEvaluator::new(phi, tg)?.with_cap(opts.cap);
        let levels = (0..=j_max).map(|j| ev.level_final(j)).collect::<Result<Vec<_>>>()?;
        (levels, Some(tg))
    };
    let mut sum = levels[0].clone();
    for l in &levels[1..] {
        sum = sum.add(l)?;
    }
    let level_norms: Vec<f64> = levels.iter().map(|l| sobolev_norm(l, T::zero()).as_f64()).collect();
    let ratios: Vec<f64> = level_norms.windows(2).map(|w| w[1] / w[0]).collect();
    if let Some(&r) = ratios.iter().find(|r| **r >= 1.0 || r.is_nan()) {
        if opts.fail_on_divergence {
            return Err(Error::Divergence { ratio: r });
        }
    }
    let tail_estimate = ratios.last().map(|&r| if r < 1.0 { level_norms[j_max] * r / (1.0 - r) } else { f64::INFINITY });
    let ratio_warning = ratios.iter().any(|r| *r >= RATIO_WARNING);
    Ok(SeriesSum { t, time_grid, levels, sum, level_norms, ratios, tail_estimate, ratio_warning })
}

