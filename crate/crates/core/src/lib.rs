//! Toolkit for systems of correlated reflected diffusions on the half-line with
//! elastic killing at the origin, the limiting measure-valued SPDE with a noisy
//! Robin boundary, and the statistical checks connecting the two.
//!
//! The numeric core is generic over the scalar type (`f32`/`f64` via
//! [`scalar::Scalar`]); the experiment harness pins `f64`.

pub mod coefficients;
pub mod expr;
pub mod fdsolver;
pub mod grid;
pub mod halton;
pub mod harness;
pub mod kernels;
pub mod measures;
pub mod noise;
pub mod particles;
pub mod quad;
pub mod rng;
pub mod scalar;
pub mod special;

/// Scalar type used by the harness and all shipped experiments.
pub type Real = f64;

pub type GridFunction64 = grid::GridFunction<f64>;
pub type GridFunction32 = grid::GridFunction<f32>;
pub type EmpiricalMeasure64 = measures::EmpiricalMeasure<f64>;
pub type CoefficientSet64 = coefficients::CoefficientSet<f64>;
pub type KernelParams64 = kernels::KernelParams<f64>;
