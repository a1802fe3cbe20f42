use crate::error::{Error, Result};
use crate::model::SpinStarSystem;
use crate::operator::{eig_hermitian_unchecked, Operator, SpectralDecomposition};
use crate::scalar::Real;

use super::pulse::PulseSequence;

/// Drift and control Hamiltonians of a spin star, built once.
#[derive(Clone, Debug)]
pub struct ControlProblem<R: Real> {
    n_bath: usize,
    drift: Operator<R>,
    control: Operator<R>,
}

impl<R: Real> ControlProblem<R> {
    pub fn new(sys: &SpinStarSystem) -> Self {
        Self {
            n_bath: sys.n_bath(),
            drift: sys.drift_hamiltonian(),
            control: sys.control_hamiltonian(),
        }
    }

    /// Arbitrary Hermitian drift and control on `C^2 ⊗ C^(2^n_bath)`.
    pub fn from_hamiltonians(n_bath: usize, drift: Operator<R>, control: Operator<R>) -> Result<Self> {
        let dim = 2usize << n_bath;
        for h in [&drift, &control] {
            if h.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: h.dim(),
                });
            }
        }
        Ok(Self {
            n_bath,
            drift,
            control,
        })
    }

    pub fn n_bath(&self) -> usize {
        self.n_bath
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn drift(&self) -> &Operator<R> {
        &self.drift
    }

    pub fn control(&self) -> &Operator<R> {
        &self.control
    }

    /// `H₀ + b·H_c`.
    pub fn hamiltonian(&self, amplitude: R) -> Operator<R> {
        let mut h = self.drift.clone();
        h.axpy(num_complex::Complex::new(amplitude, R::zero()), &self.control);
        h
    }
}

/// One constant-field slice.
#[derive(Clone, Debug)]
pub struct Slice<R: Real> {
    pub spectrum: SpectralDecomposition<R>,
    /// `exp(−i(H₀ + B_m H_c)·dt)`.
    pub propagator: Operator<R>,
}

/// Time evolution under a pulse, with the pieces the exact gradient reuses.
#[derive(Clone, Debug)]
pub struct Propagation<R: Real> {
    pub dt: R,
    pub slices: Vec<Slice<R>>,
    /// `forward[m] = U_m ⋯ U_1`, with `forward[0] = 1`.
    pub forward: Vec<Operator<R>>,
}

impl<R: Real> Propagation<R> {
    /// `U(τ) = U_M ⋯ U_1`.
    pub fn unitary(&self) -> &Operator<R> {
        self.forward.last().expect("forward products include the identity")
    }
}

/// Piecewise-constant propagation, later slices multiplying from the left.
pub fn propagate<R: Real>(problem: &ControlProblem<R>, pulse: &PulseSequence<R>) -> Propagation<R> {
    let dt = pulse.dt();
    let mut slices = Vec::with_capacity(pulse.slices());
    let mut forward = Vec::with_capacity(pulse.slices() + 1);
    forward.push(Operator::identity(problem.dim()));
    for &b in pulse.amplitudes() {
        let spectrum = eig_hermitian_unchecked(&problem.hamiltonian(b));
        let propagator = spectrum.exp_neg_i(dt);
        let next = &propagator * forward.last().expect("nonempty");
        forward.push(next);
        slices.push(Slice { spectrum, propagator });
    }
    Propagation { dt, slices, forward }
}
