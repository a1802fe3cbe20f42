use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::scalar::{c, Real};
use crate::tolerance::Tolerances;

/// Single-qubit gate on the central spin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateKind {
    Hadamard,
    /// `diag(1, e^{iπ/4})`.
    Pi8,
    /// Row-major `[re, im]` entries of a 2×2 unitary.
    Custom { entries: Vec<[f64; 2]> },
}

impl GateKind {
    pub fn label(&self) -> &'static str {
        match self {
            GateKind::Hadamard => "hadamard",
            GateKind::Pi8 => "pi8",
            GateKind::Custom { .. } => "custom",
        }
    }

    pub fn matrix<R: Real>(&self) -> Result<Operator<R>> {
        let z = c(R::zero(), R::zero());
        let op = match self {
            GateKind::Hadamard => {
                let h = c(R::lit(std::f64::consts::FRAC_1_SQRT_2), R::zero());
                Operator::from_row_major(2, &[h, h, h, -h])?
            }
            GateKind::Pi8 => {
                let q = R::lit(std::f64::consts::FRAC_PI_4);
                Operator::from_row_major(2, &[c(R::one(), R::zero()), z, z, c(q.cos(), q.sin())])?
            }
            GateKind::Custom { entries } => entries_to_operator(entries)?,
        };
        check_unitary(&op)?;
        Ok(op)
    }
}

fn entries_to_operator<R: Real>(entries: &[[f64; 2]]) -> Result<Operator<R>> {
    let dim = (entries.len() as f64).sqrt().round() as usize;
    let values: Vec<Complex<R>> = entries.iter().map(|e| c(R::lit(e[0]), R::lit(e[1]))).collect();
    Operator::from_row_major(dim, &values)
}

fn check_unitary<R: Real>(op: &Operator<R>) -> Result<()> {
    let deviation = op.unitarity_deviation();
    if deviation > R::lit(Tolerances::for_scalar::<R>().unitary) {
        return Err(Error::NotUnitary {
            deviation: deviation.as_f64(),
        });
    }
    Ok(())
}

/// What the bath should do.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetScope {
    /// Only the central gate is specified; full-system fidelities use `1_bath`.
    #[default]
    CentralOnly,
    /// Full-system target `U_G ⊗ V_bath`, row-major `[re, im]` entries of `V_bath`.
    FullSystem { bath_target: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetGate {
    pub gate: GateKind,
    #[serde(default)]
    pub scope: TargetScope,
}

impl TargetGate {
    pub fn central(gate: GateKind) -> Self {
        Self {
            gate,
            scope: TargetScope::CentralOnly,
        }
    }

    pub fn hadamard() -> Self {
        Self::central(GateKind::Hadamard)
    }

    pub fn pi8() -> Self {
        Self::central(GateKind::Pi8)
    }

    /// The 2×2 central gate `U_G`.
    pub fn central_gate<R: Real>(&self) -> Result<Operator<R>> {
        self.gate.matrix()
    }

    /// `U_G ⊗ V_bath` on `N` bath spins; `V_bath = 1` for central-only scope.
    pub fn full_target<R: Real>(&self, n_bath: usize) -> Result<Operator<R>> {
        let g = self.central_gate::<R>()?;
        let bath_dim = 1usize << n_bath;
        let bath = match &self.scope {
            TargetScope::CentralOnly => Operator::identity(bath_dim),
            TargetScope::FullSystem { bath_target } => {
                let v = entries_to_operator::<R>(bath_target)?;
                if v.dim() != bath_dim {
                    return Err(Error::DimensionMismatch {
                        left: bath_dim,
                        right: v.dim(),
                    });
                }
                check_unitary(&v)?;
                v
            }
        };
        Ok(g.kron(&bath))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_gates_are_unitary() {
        let h = GateKind::Hadamard.matrix::<f64>().unwrap();
        assert!(h.is_unitary(1e-14));
        assert!(h.trace().norm() < 1e-15);
        let t = GateKind::Pi8.matrix::<f64>().unwrap();
        assert!((t.get(1, 1).arg() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn custom_gate_validation() {
        let x = GateKind::Custom {
            entries: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]],
        };
        assert!(x.matrix::<f64>().is_ok());
        let bad = GateKind::Custom {
            entries: vec![[1.0, 0.0], [1.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
        };
        assert!(matches!(bad.matrix::<f64>(), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn full_target_dimensions() {
        let t = TargetGate::hadamard().full_target::<f64>(2).unwrap();
        assert_eq!(t.dim(), 8);
        let scoped = TargetGate {
            gate: GateKind::Pi8,
            scope: TargetScope::FullSystem {
                bath_target: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]],
            },
        };
        assert_eq!(scoped.full_target::<f64>(1).unwrap().dim(), 4);
        assert!(scoped.full_target::<f64>(2).is_err());
    }

    #[test]
    fn json_shape() {
        let t: TargetGate = serde_json::from_str(r#"{"gate":{"kind":"hadamard"}}"#).unwrap();
        assert_eq!(t, TargetGate::hadamard());
        let t: TargetGate = serde_json::from_str(
            r#"{"gate":{"kind":"pi8"},"scope":{"full_system":{"bath_target":[[1,0],[0,0],[0,0],[1,0]]}}}"#,
        )
        .unwrap();
        assert!(matches!(t.scope, TargetScope::FullSystem { .. }));
    }
}
