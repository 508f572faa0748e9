#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Numerical laboratory for norm inflation in the gauged derivative
//! nonlinear Schrödinger equation
//!
//! ```text
//! i∂ₜv + ∂ₓ²v = -i v² ∂ₓv̄ - ½|v|⁴v
//! ```
//!
//! built around its Fourier-side Picard series indexed by ternary-quinary
//! trees. Everything is generic over the float type; `*64` aliases fix `f64`.

pub mod convolution;
pub mod error;
pub mod estimates;
pub mod inflation;
pub mod picard;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod spectrum;
pub mod trees;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Real;

pub type FrequencyGrid64 = spectrum::FrequencyGrid<f64>;
pub type SpectralFunction64 = spectrum::SpectralFunction<f64>;
pub type SpectralFunction32 = spectrum::SpectralFunction<f32>;
pub type ParameterSet64 = spectrum::ParameterSet<f64>;
pub type TimeGrid64 = picard::TimeGrid<f64>;
pub type SpaceTimeFunction64 = picard::SpaceTimeFunction<f64>;
pub type TorusConfig64 = solver::TorusConfig<f64>;
pub type PhysicalState64 = solver::PhysicalState<f64>;
