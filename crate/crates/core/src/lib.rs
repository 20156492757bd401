//! Forward and inverse ∂̄ pipeline for the two-dimensional Gel'fand–Calderón
//! problem on the unit disk.
//!
//! Every numerical module is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the experiment harness and the
//! command line use.

pub mod dbar;
pub mod error;
pub mod faddeev;
pub mod field;
pub mod forward;
pub mod krylov;
pub mod phantom;
pub mod scalar;
pub mod scatter;
pub mod special;
pub mod stability;
pub mod verify;

pub use error::{Error, Result, Stage};
pub use scalar::Real;

pub type Field = field::ComplexField<f64>;
pub type Grid = field::GridSpec<f64>;
pub type DtnMap = forward::BoundaryOperator<f64>;
pub type Amplitude = faddeev::ScatteringAmplitude<f64>;
pub type Conductivity = phantom::Conductivity<f64>;
pub type Potential = phantom::Potential<f64>;
