use std::io::{Read, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectrum::{FrequencyGrid, SpectralFunction};

/// Uniform time grid `t_n = n·t_max/steps`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    pub t_max: T,
    pub steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_max: T, steps: usize) -> Result<Self> {
        if !(t_max > T::zero()) || !t_max.is_finite() {
            return Err(Error::config(format!("time horizon must be positive, got {t_max}")));
        }
        if steps < 4 || !steps.is_multiple_of(2) {
            return Err(Error::config(format!("time steps must be even and at least 4, got {steps}")));
        }
        Ok(TimeGrid { t_max, steps })
    }

    /// Grid fine enough to resolve phases up to `xi_extent²`:
    /// `steps ≥ factor·t_max·xi_extent²`, rounded up to an even count ≥ 4.
    pub fn resolved(t_max: T, xi_extent: T, factor: f64) -> Result<Self> {
        let need = (factor * t_max.as_f64() * xi_extent.as_f64().powi(2)).ceil();
        if !need.is_finite() || need > 1e8 {
            return Err(Error::Resource { what: format!("time steps ({need:.3e})"), cap: 100_000_000 });
        }
        let mut steps = (need as usize).max(4);
        steps += steps % 2;
        Self::new(t_max, steps)
    }

    pub fn step(&self) -> T {
        self.t_max / T::of_usize(self.steps)
    }

    pub fn time(&self, n: usize) -> T {
        self.t_max * T::of_usize(n) / T::of_usize(self.steps)
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }
}

/// Frames `f̂(t_n, ξ)` at every node of a time grid, all on one frequency
/// grid. Stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeFunction<T> {
    time_grid: TimeGrid<T>,
    grid: FrequencyGrid<T>,
    data: Vec<Complex<T>>,
}

impl<T: Real> SpaceTimeFunction<T> {
    pub fn new(time_grid: TimeGrid<T>, grid: FrequencyGrid<T>, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != grid.count * time_grid.nodes() {
            return Err(Error::config(format!(
                "{} values for {} frames of {} points",
                data.len(),
                time_grid.nodes(),
                grid.count
            )));
        }
        Ok(SpaceTimeFunction { time_grid, grid, data })
    }

    pub fn from_frames(time_grid: TimeGrid<T>, frames: &[SpectralFunction<T>]) -> Result<Self> {
        if frames.len() != time_grid.nodes() {
            return Err(Error::config("frame count must equal steps + 1"));
        }
        let grid = frames[0].grid;
        if frames.iter().any(|f| f.grid != grid) {
            return Err(Error::config("frames must share one frequency grid"));
        }
        let data = frames.iter().flat_map(|f| f.values.iter().copied()).collect();
        Self::new(time_grid, grid, data)
    }

    /// Linear flow `e^{-itξ²} φ̂(ξ)` sampled at every time node.
    pub fn free_evolution(phi: &SpectralFunction<T>, time_grid: TimeGrid<T>) -> Self {
        let grid = phi.grid;
        let xi2: Vec<T> = grid.points().map(|x| x * x).collect();
        let mut data = Vec::with_capacity(grid.count * time_grid.nodes());
        for n in 0..time_grid.nodes() {
            let t = time_grid.time(n);
            data.extend(phi.values.iter().zip(&xi2).map(|(v, &q)| v * Complex::cis(-t * q)));
        }
        SpaceTimeFunction { time_grid, grid, data }
    }

    pub fn time_grid(&self) -> &TimeGrid<T> {
        &self.time_grid
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn frame_values(&self, n: usize) -> &[Complex<T>] {
        let w = self.grid.count;
        &self.data[n * w..(n + 1) * w]
    }

    pub fn frame(&self, n: usize) -> SpectralFunction<T> {
        SpectralFunction { grid: self.grid, values: self.frame_values(n).to_vec() }
    }

    pub fn final_frame(&self) -> SpectralFunction<T> {
        self.frame(self.time_grid.steps)
    }

    pub fn scaled(&self, a: Complex<T>) -> Self {
        SpaceTimeFunction {
            time_grid: self.time_grid,
            grid: self.grid,
            data: self.data.iter().map(|z| z * a).collect(),
        }
    }

    /// Sum on the union of the two lattice windows.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.time_grid != other.time_grid {
            return Err(Error::config("cannot add space-time functions on different time grids"));
        }
        let probe = SpectralFunction::zeros(self.grid).add(&SpectralFunction::zeros(other.grid))?;
        let grid = probe.grid;
        let lo = grid.lattice_start()?;
        let (a0, b0) = (self.grid.lattice_start()? - lo, other.grid.lattice_start()? - lo);
        let w = grid.count;
        let mut data = vec![Complex::new(T::zero(), T::zero()); w * self.time_grid.nodes()];
        for n in 0..self.time_grid.nodes() {
            let row = &mut data[n * w..(n + 1) * w];
            for (j, z) in self.frame_values(n).iter().enumerate() {
                row[a0 as usize + j] += z;
            }
            for (j, z) in other.frame_values(n).iter().enumerate() {
                row[b0 as usize + j] += z;
            }
        }
        Ok(SpaceTimeFunction { time_grid: self.time_grid, grid, data })
    }

    /// Writes `t,xi,re,im` rows, frame by frame.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,xi,re,im")?;
        for n in 0..self.time_grid.nodes() {
            let t = self.time_grid.time(n);
            for (xi, z) in self.grid.points().zip(self.frame_values(n)) {
                writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e}", t, xi, z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// Magic bytes of the binary frame format.
pub const FRAME_MAGIC: &[u8; 5] = b"NIQK1";

/// Axis of a binary frame file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameAxis {
    Frequency = 0,
    Position = 1,
}

/// Contents of a binary frame file, in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFile {
    pub axis: FrameAxis,
    pub axis_min: f64,
    pub step: f64,
    pub points: usize,
    pub times: Vec<f64>,
    pub values: Vec<Complex<f64>>,
}

/// Binary layout, all little-endian:
///
/// ```text
/// magic "NIQK1" | axis u8 | frames u64 | points u64 | axis_min f64 | step f64
/// | times f64 × frames | (re f64, im f64) × frames × points
/// ```
impl FrameFile {
    pub fn from_space_time<T: Real>(f: &SpaceTimeFunction<T>) -> Self {
        let tg = f.time_grid();
        FrameFile {
            axis: FrameAxis::Frequency,
            axis_min: f.grid().xi_min.as_f64(),
            step: f.grid().delta_xi.as_f64(),
            points: f.grid().count,
            times: (0..tg.nodes()).map(|n| tg.time(n).as_f64()).collect(),
            values: f.data().iter().map(|z| Complex::new(z.re.as_f64(), z.im.as_f64())).collect(),
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(FRAME_MAGIC)?;
        w.write_all(&[self.axis as u8])?;
        w.write_all(&(self.times.len() as u64).to_le_bytes())?;
        w.write_all(&(self.points as u64).to_le_bytes())?;
        w.write_all(&self.axis_min.to_le_bytes())?;
        w.write_all(&self.step.to_le_bytes())?;
        for t in &self.times {
            w.write_all(&t.to_le_bytes())?;
        }
        for z in &self.values {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != FRAME_MAGIC {
            return Err(Error::Format("bad magic in frame file".into()));
        }
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b1)?;
        let axis = match b1[0] {
            0 => FrameAxis::Frequency,
            1 => FrameAxis::Position,
            a => return Err(Error::Format(format!("unknown axis code {a}"))),
        };
        let mut b8 = [0u8; 8];
        let mut u64_ = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let frames = u64_(&mut r)? as usize;
        let points = u64_(&mut r)? as usize;
        let f64_ = |r: &mut R| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let axis_min = f64_(&mut r)?;
        let step = f64_(&mut r)?;
        if frames.checked_mul(points).is_none_or(|n| n > 1 << 32) {
            return Err(Error::Format("frame file dimensions too large".into()));
        }
        let times = (0..frames).map(|_| f64_(&mut r)).collect::<Result<Vec<_>>>()?;
        let values = (0..frames * points)
            .map(|_| Ok(Complex::new(f64_(&mut r)?, f64_(&mut r)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FrameFile { axis, axis_min, step, points, times, values })
    }
}
