//! Gate fidelities.
//!
//! * `f₁ = |tr(U_G† U) / d|²` compares against a full-system target.
//! * `f₂ = ‖Q‖₁ / d` with `Q = tr_S[(U_G ⊗ 1)† U]` only constrains the
//!   central spin: it is the best overlap over all bath unitaries `V`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{polar, trace_norm, Operator};
use crate::scalar::Real;

use super::target::TargetGate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FidelityKind {
    #[default]
    F1,
    F2,
}

impl fmt::Display for FidelityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FidelityKind::F1 => "f1",
            FidelityKind::F2 => "f2",
        })
    }
}

impl FromStr for FidelityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(FidelityKind::F1),
            "f2" => Ok(FidelityKind::F2),
            other => Err(Error::InvalidConfig(format!("unknown fidelity `{other}`"))),
        }
    }
}

/// `f₁ = |tr(G† U)/d|²`.
pub fn fidelity_f1<R: Real>(u: &Operator<R>, target_full: &Operator<R>) -> Result<R> {
    let g = normalized_overlap(u, target_full)?;
    Ok(g.norm_sqr())
}

/// `tr(G† U)/d`.
pub fn normalized_overlap<R: Real>(u: &Operator<R>, target_full: &Operator<R>) -> Result<Complex<R>> {
    let ip = crate::operator::hs_inner(target_full, u)?;
    Ok(ip / R::from_count(u.dim()))
}

/// `Q = tr_S[(G ⊗ 1)† U]` for a 2×2 central gate `G`.
pub fn reduced_overlap<R: Real>(u: &Operator<R>, target_central: &Operator<R>, n_bath: usize) -> Result<Operator<R>> {
    let bath = 1usize << n_bath;
    if target_central.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: target_central.dim(),
        });
    }
    if u.dim() != 2 * bath {
        return Err(Error::DimensionMismatch {
            left: 2 * bath,
            right: u.dim(),
        });
    }
    let m = u.matrix();
    let g = target_central.matrix();
    // Q = Σ_{s,s'} conj(G_{s's}) · U[s' block, s block]
    Ok(Operator::from_fn(bath, |i, j| {
        let mut acc = Complex::new(R::zero(), R::zero());
        for s in 0..2 {
            for sp in 0..2 {
                acc += g[(sp, s)].conj() * m[(sp * bath + i, s * bath + j)];
            }
        }
        acc
    }))
}

/// `f₂ = ‖Q‖₁ / 2^(N+1)`.
pub fn fidelity_f2<R: Real>(u: &Operator<R>, target_central: &Operator<R>, n_bath: usize) -> Result<R> {
    let q = reduced_overlap(u, target_central, n_bath)?;
    Ok(trace_norm(&q) / R::from_count(u.dim()))
}

/// A fidelity together with its target, ready to evaluate on propagators.
#[derive(Clone, Debug)]
pub struct Objective<R: Real> {
    kind: FidelityKind,
    n_bath: usize,
    target_full: Operator<R>,
    target_central: Operator<R>,
}

/// Value of an objective plus the operator `K` such that
/// `∂f = Re(weight · tr(K ∂U))`.
pub(crate) struct Linearization<R: Real> {
    pub value: R,
    pub k: Operator<R>,
    pub weight: Complex<R>,
}

impl<R: Real> Objective<R> {
    pub fn new(kind: FidelityKind, target: &TargetGate, n_bath: usize) -> Result<Self> {
        Ok(Self {
            kind,
            n_bath,
            target_full: target.full_target(n_bath)?,
            target_central: target.central_gate()?,
        })
    }

    pub fn kind(&self) -> FidelityKind {
        self.kind
    }

    pub fn n_bath(&self) -> usize {
        self.n_bath
    }

    pub fn target_full(&self) -> &Operator<R> {
        &self.target_full
    }

    pub fn target_central(&self) -> &Operator<R> {
        &self.target_central
    }

    pub fn value(&self, u: &Operator<R>) -> Result<R> {
        match self.kind {
            FidelityKind::F1 => fidelity_f1(u, &self.target_full),
            FidelityKind::F2 => fidelity_f2(u, &self.target_central, self.n_bath),
        }
    }

    pub(crate) fn linearize(&self, u: &Operator<R>) -> Result<Linearization<R>> {
        let d = R::from_count(u.dim());
        match self.kind {
            FidelityKind::F1 => {
                // f₁ = |g|², g = tr(G†U)/d ⇒ ∂f₁ = 2 Re(conj(g) tr(G†∂U)/d)
                let g = normalized_overlap(u, &self.target_full)?;
                Ok(Linearization {
                    value: g.norm_sqr(),
                    k: self.target_full.adjoint(),
                    weight: g.conj() * (R::lit(2.0) / d),
                })
            }
            FidelityKind::F2 => {
                // ∂‖Q‖₁ = Re tr(W† ∂Q) and tr(W† tr_S[(G†⊗1)∂U]) = tr((G†⊗W†)∂U)
                let q = reduced_overlap(u, &self.target_central, self.n_bath)?;
                let p = polar(&q);
                Ok(Linearization {
                    value: p.trace_norm / d,
                    k: self.target_central.adjoint().kron(&p.unitary.adjoint()),
                    weight: Complex::new(R::one() / d, R::zero()),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_anchors() {
        for n in 0..=3 {
            let id = Operator::<f64>::identity(2 << n);
            let h = TargetGate::hadamard().full_target::<f64>(n).unwrap();
            assert!(fidelity_f1(&id, &h).unwrap().abs() < 1e-15);
            let t = TargetGate::pi8().full_target::<f64>(n).unwrap();
            let want = (2.0 + 2f64.sqrt()) / 4.0;
            assert!((fidelity_f1(&id, &t).unwrap() - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn global_phase_invariance() {
        let t = TargetGate::hadamard().full_target::<f64>(1).unwrap();
        let u = t.scale(Complex::from_polar(1.0, 0.37));
        assert!((fidelity_f1(&u, &t).unwrap() - 1.0).abs() < 1e-14);
        let g = TargetGate::hadamard().central_gate::<f64>().unwrap();
        assert!((fidelity_f2(&u, &g, 1).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn no_bath_reduces_to_square_root() {
        let g = TargetGate::hadamard().central_gate::<f64>().unwrap();
        let u = TargetGate::pi8().central_gate::<f64>().unwrap();
        let f1 = fidelity_f1(&u, &g).unwrap();
        let f2 = fidelity_f2(&u, &g, 0).unwrap();
        assert!((f2 * f2 - f1).abs() < 1e-14);
    }

    #[test]
    fn dimension_checks() {
        let u = Operator::<f64>::identity(8);
        let g = Operator::<f64>::identity(4);
        assert!(fidelity_f2(&u, &g, 2).is_err());
        assert!(fidelity_f2(&u, &Operator::identity(2), 1).is_err());
        assert!(fidelity_f1(&u, &g).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("F2".parse::<FidelityKind>().unwrap(), FidelityKind::F2);
        assert!("f3".parse::<FidelityKind>().is_err());
        assert_eq!(FidelityKind::F1.to_string(), "f1");
    }
}
