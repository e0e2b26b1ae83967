//! Entropy production along quantum trajectories.
//!
//! The crate integrates the stochastic master equation of a homodyne-monitored
//! open quantum system, evaluates the exact rate of change of the conditional
//! von Neumann entropy through the noncommutative Taylor series of −z ln z, and
//! checks that rate against independent oracles. A discrete repeated-interaction
//! model with a qubit probe provides exact branch enumeration, Holevo
//! information and its gain/loss decomposition.
//!
//! All numerics are generic over the real field (`f32`, `f64`) through
//! [`Real`]; the aliases at the crate root fix `f64`, which is what the
//! tolerances are calibrated for.

// NaN must fail range checks, so `!(x > y)` is deliberate throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod discrete;
pub mod entropy;
pub mod error;
pub mod lindblad;
pub mod opalg;
pub mod paycha;
pub mod random;
pub mod real;
pub mod stats;
pub mod trajectory;
pub mod verify;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use real::{Real, C};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Complex = num_complex::Complex<f64>;
pub type CMatrix = opalg::ComplexMatrix<f64>;
pub type Density = opalg::DensityMatrix<f64>;
pub type Spectrum = opalg::SpectralDecomposition<f64>;
pub type Model = lindblad::OpenSystemModel<f64>;
pub type Sigma = paycha::SigmaEstimate<f64>;
pub type Probe = discrete::ProbeModel<f64>;
pub type Branch = discrete::MeasurementBranch<f64>;
pub type Frame = trajectory::TrajectoryFrame<f64>;
