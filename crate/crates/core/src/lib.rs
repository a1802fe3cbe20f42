//! Controllability analysis and gate-time estimation for a central spin
//! coupled to a bath of spins (the spin-star model).
//!
//! The crate is generic over the real scalar type; the aliases below fix it
//! to `f64` (the default everywhere else) or `f32`.

pub mod error;
pub mod experiments;
pub mod grape;
pub mod lie;
pub mod model;
pub mod operator;
pub mod scalar;
pub mod seed;
pub mod tolerance;

pub use error::{Error, Result};
pub use model::{CouplingKind, CouplingScheme, SpinStarSystem};
pub use operator::{Axis, Operator};
pub use scalar::Real;
pub use tolerance::Tolerances;

pub type Operator64 = operator::Operator<f64>;
pub type Operator32 = operator::Operator<f32>;
pub type LieClosure64 = lie::LieClosure<f64>;
pub type LieClosure32 = lie::LieClosure<f32>;
pub type PulseSequence64 = grape::PulseSequence<f64>;
pub type PulseSequence32 = grape::PulseSequence<f32>;
pub type ControlProblem64 = grape::ControlProblem<f64>;
pub type ControlProblem32 = grape::ControlProblem<f32>;
pub type OptimizationRun64 = grape::OptimizationRun<f64>;
pub type OptimizationRun32 = grape::OptimizationRun<f32>;
