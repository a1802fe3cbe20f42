//! Numerical tolerances used across the crate, in one place.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Tolerance record.
///
/// The defaults are quoted for `f64`. For narrower scalars they are
/// scaled by the ratio of machine epsilons, so `f32` gets tolerances
/// roughly 5e8 times looser.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// max |M - M†| for an operator to count as Hermitian.
    pub hermitian: f64,
    /// max |M†M - 1| for an operator to count as unitary.
    pub unitary: f64,
    /// max |V diag(λ) V† - H| after an eigendecomposition.
    pub reconstruction: f64,
    /// Relative residual above which a commutator adds a new Lie element.
    pub lie_rank: f64,
    /// Relative residual below which a target lies in a Lie closure.
    pub membership: f64,
    /// Eigenvalue gap below which divided differences use their limit.
    pub degenerate_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            unitary: 1e-10,
            reconstruction: 1e-10,
            lie_rank: 1e-8,
            membership: 1e-8,
            degenerate_gap: 1e-12,
        }
    }
}

impl Tolerances {
    /// Defaults rescaled to the precision of `R`.
    pub fn for_scalar<R: Real>() -> Self {
        let s = R::epsilon_ratio().max(1.0);
        let d = Self::default();
        Self {
            hermitian: d.hermitian * s,
            unitary: d.unitary * s,
            reconstruction: d.reconstruction * s,
            lie_rank: (d.lie_rank * s).min(1e-2),
            membership: (d.membership * s).min(1e-2),
            degenerate_gap: d.degenerate_gap * s,
        }
    }

    #[inline]
    pub fn get<R: Real>(value: f64) -> R {
        R::lit(value)
    }
}
