//! Piecewise-constant pulse optimization of the central-spin control field.

pub mod fidelity;
pub mod gradient;
pub mod optimizer;
pub mod propagate;
pub mod pulse;
pub mod run;
pub mod target;

pub use fidelity::{fidelity_f1, fidelity_f2, reduced_overlap, FidelityKind, Objective};
pub use gradient::{gradient_f1, gradient_f2, value_and_gradient};
pub use optimizer::{OptimizerSettings, StopReason, TraceEntry};
pub use propagate::{propagate, ControlProblem, Propagation};
pub use pulse::{PulseJson, PulseSequence};
pub use run::{optimize, slice_count, OptimizationRun, RestartOutcome, RunConfig};
pub use target::{GateKind, TargetGate, TargetScope};
