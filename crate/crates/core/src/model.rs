//! The spin-star model: a central spin-½ coupled to `N` bath spins by an
//! isotropic Heisenberg interaction, driven by a field along `z` on the
//! central spin only.
//!
//! Tensor order is central spin first, then bath spins `1..=N`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{kron_all, pauli, Axis, Operator};
use crate::scalar::Real;

/// How the couplings `A_k` are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingKind {
    /// `A_k = a` for every bath spin.
    Equal { a: f64 },
    /// Explicit list, one entry per bath spin.
    Different { values: Vec<f64> },
    /// `A_k` drawn i.i.d. uniform in `[lo, hi]` from a seeded stream.
    RandomUniform { lo: f64, hi: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingScheme {
    #[serde(flatten)]
    pub kind: CouplingKind,
    /// Divide every coupling by `√N`.
    #[serde(default)]
    pub rescale: bool,
}

impl CouplingScheme {
    pub fn equal(a: f64) -> Self {
        Self {
            kind: CouplingKind::Equal { a },
            rescale: false,
        }
    }

    pub fn different(values: Vec<f64>) -> Self {
        Self {
            kind: CouplingKind::Different { values },
            rescale: false,
        }
    }

    /// Uniform draws in `[1, 2]`.
    pub fn random_uniform(seed: u64) -> Self {
        Self {
            kind: CouplingKind::RandomUniform { lo: 1.0, hi: 2.0, seed },
            rescale: false,
        }
    }

    pub fn rescaled(mut self, rescale: bool) -> Self {
        self.rescale = rescale;
        self
    }

    pub fn is_equal(&self) -> bool {
        matches!(self.kind, CouplingKind::Equal { .. })
    }

    /// Short label used in reports and CSV output.
    pub fn label(&self) -> &'static str {
        match self.kind {
            CouplingKind::Equal { .. } => "equal",
            CouplingKind::Different { .. } => "different",
            CouplingKind::RandomUniform { .. } => "random_uniform",
        }
    }

    /// Couplings for `n_bath` spins, sampled and rescaled.
    pub fn resolve(&self, n_bath: usize) -> Result<Vec<f64>> {
        let mut values = match &self.kind {
            CouplingKind::Equal { a } => vec![*a; n_bath],
            CouplingKind::Different { values } => {
                if values.len() != n_bath {
                    return Err(Error::InvalidConfig(format!(
                        "{} couplings given for {} bath spins",
                        values.len(),
                        n_bath
                    )));
                }
                values.clone()
            }
            CouplingKind::RandomUniform { lo, hi, seed } => {
                if !(lo <= hi) {
                    return Err(Error::InvalidConfig(format!("empty coupling range [{lo}, {hi}]")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..n_bath).map(|_| rng.random_range(*lo..=*hi)).collect()
            }
        };
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite coupling {bad}")));
        }
        if self.rescale && n_bath > 0 {
            let s = (n_bath as f64).sqrt();
            values.iter_mut().for_each(|v| *v /= s);
        }
        Ok(values)
    }
}

/// A configured spin star.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinStarSystem {
    n_bath: usize,
    scheme: CouplingScheme,
    couplings: Vec<f64>,
}

impl SpinStarSystem {
    pub fn new(n_bath: usize, scheme: CouplingScheme) -> Result<Self> {
        let couplings = scheme.resolve(n_bath)?;
        Ok(Self {
            n_bath,
            scheme,
            couplings,
        })
    }

    pub fn n_bath(&self) -> usize {
        self.n_bath
    }

    pub fn scheme(&self) -> &CouplingScheme {
        &self.scheme
    }

    /// Couplings after sampling and rescaling.
    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Hilbert-space dimension `2^(N+1)`.
    pub fn dim(&self) -> usize {
        1 << (self.n_bath + 1)
    }

    pub fn bath_dim(&self) -> usize {
        1 << self.n_bath
    }

    /// `op` acting on tensor site `site` (0 = central spin), identity elsewhere.
    fn on_site<R: Real>(&self, site: usize, op: &Operator<R>) -> Operator<R> {
        let factors: Vec<_> = (0..=self.n_bath)
            .map(|s| if s == site { op.clone() } else { Operator::identity(2) })
            .collect();
        kron_all(&factors)
    }

    /// `σ_α ⊗ 1_bath`.
    pub fn central_pauli<R: Real>(&self, axis: Axis) -> Operator<R> {
        self.on_site(0, &pauli::sigma(axis))
    }

    /// `σ_α^(k)` for bath spin `k ∈ 1..=N`.
    pub fn bath_pauli<R: Real>(&self, k: usize, axis: Axis) -> Result<Operator<R>> {
        if k == 0 || k > self.n_bath {
            return Err(Error::InvalidConfig(format!(
                "bath spin index {k} outside 1..={}",
                self.n_bath
            )));
        }
        Ok(self.on_site(k, &pauli::sigma(axis)))
    }

    /// `1_S ⊗ X` for a bath operator `X`.
    pub fn lift_bath<R: Real>(&self, bath_op: &Operator<R>) -> Operator<R> {
        Operator::identity(2).kron(bath_op)
    }

    /// `H₀ = σ_y + Σ_k A_k σ·σ^(k)`.
    pub fn drift_hamiltonian<R: Real>(&self) -> Operator<R> {
        let mut h = self.central_pauli::<R>(Axis::Y);
        for (k, &a) in self.couplings.iter().enumerate() {
            for axis in Axis::ALL {
                let mut factors: Vec<Operator<R>> = vec![Operator::identity(2); self.n_bath + 1];
                factors[0] = pauli::sigma(axis);
                factors[k + 1] = pauli::sigma(axis);
                h.axpy(Complex::new(R::lit(a), R::zero()), &kron_all(&factors));
            }
        }
        h
    }

    /// Control direction `σ_z ⊗ 1_bath`; the amplitude `B(t)` lives in the pulse.
    pub fn control_hamiltonian<R: Real>(&self) -> Operator<R> {
        self.central_pauli(Axis::Z)
    }

    /// Collective bath angular momentum `J_α = ½ Σ_k σ_α^(k)`, on the bath factor only.
    pub fn bath_collective<R: Real>(&self, axis: Axis) -> Result<Operator<R>> {
        if self.n_bath == 0 {
            return Err(Error::EmptyBath);
        }
        let half = Complex::new(R::lit(0.5), R::zero());
        let mut j = Operator::zeros(self.bath_dim());
        for k in 0..self.n_bath {
            let factors: Vec<Operator<R>> = (0..self.n_bath)
                .map(|s| if s == k { pauli::sigma(axis) } else { Operator::identity(2) })
                .collect();
            j.axpy(half, &kron_all(&factors));
        }
        Ok(j)
    }

    /// `1_S ⊗ J_α` on the full space.
    pub fn bath_angular_momentum<R: Real>(&self, axis: Axis) -> Result<Operator<R>> {
        Ok(self.lift_bath(&self.bath_collective(axis)?))
    }

    /// Bath ladder operator `J_± = J_x ± iJ_y` on the bath factor.
    pub fn bath_ladder<R: Real>(&self, raising: bool) -> Result<Operator<R>> {
        let jx = self.bath_collective::<R>(Axis::X)?;
        let jy = self.bath_collective::<R>(Axis::Y)?;
        let sign = if raising { R::one() } else { -R::one() };
        let mut out = jx;
        out.axpy(Complex::new(R::zero(), sign), &jy);
        Ok(out)
    }

    /// `1_S ⊗ J²`.
    pub fn bath_j_squared<R: Real>(&self) -> Result<Operator<R>> {
        let mut j2 = Operator::zeros(self.bath_dim());
        for axis in Axis::ALL {
            let j = self.bath_collective::<R>(axis)?;
            j2 += &(&j * &j);
        }
        Ok(self.lift_bath(&j2))
    }

    /// Equal-coupling drift written with ladder operators,
    /// `i(σ₋ − σ₊) + 2A(σ₋J₊ + σ₊J₋ + σ_z J_z)`.
    pub fn collective_form<R: Real>(&self) -> Result<Operator<R>> {
        if !self.scheme.is_equal() {
            return Err(Error::NotEqualCouplings);
        }
        let sp = pauli::sigma_plus::<R>();
        let sm = pauli::sigma_minus::<R>();
        let field = (&sm - &sp).times_i();
        if self.n_bath == 0 {
            return Ok(field);
        }
        let a = R::lit(self.couplings[0]);
        let jp = self.bath_ladder::<R>(true)?;
        let jm = self.bath_ladder::<R>(false)?;
        let jz = self.bath_collective::<R>(Axis::Z)?;
        let coupling = &(&sm.kron(&jp) + &sp.kron(&jm)) + &pauli::sigma::<R>(Axis::Z).kron(&jz);
        let mut h = field.kron(&Operator::identity(self.bath_dim()));
        h.axpy(Complex::new(R::lit(2.0) * a, R::zero()), &coupling);
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{commutator, eig_hermitian};

    type Op = Operator<f64>;

    #[test]
    fn no_bath_is_sigma_y() {
        let sys = SpinStarSystem::new(0, CouplingScheme::equal(1.0)).unwrap();
        assert_eq!(sys.drift_hamiltonian::<f64>(), pauli::sigma(Axis::Y));
        assert_eq!(sys.control_hamiltonian::<f64>(), pauli::sigma(Axis::Z));
        assert_eq!(sys.collective_form::<f64>().unwrap().max_abs_diff(&pauli::sigma(Axis::Y)), 0.0);
        assert!(matches!(sys.bath_angular_momentum::<f64>(Axis::X), Err(Error::EmptyBath)));
    }

    #[test]
    fn control_for_one_bath_spin() {
        let sys = SpinStarSystem::new(1, CouplingScheme::equal(1.0)).unwrap();
        assert_eq!(sys.control_hamiltonian::<f64>(), Op::diagonal(&[1.0, 1.0, -1.0, -1.0]));
        let jz = sys.bath_collective::<f64>(Axis::Z).unwrap();
        assert_eq!(jz, Op::diagonal(&[0.5, -0.5]));
    }

    #[test]
    fn drift_is_hermitian_and_traceless() {
        for n in 0..=5 {
            for scheme in [
                CouplingScheme::equal(1.0),
                CouplingScheme::random_uniform(7).rescaled(true),
            ] {
                let h = SpinStarSystem::new(n, scheme).unwrap().drift_hamiltonian::<f64>();
                assert!(h.is_hermitian(1e-12));
                assert!(h.trace().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn collective_form_matches_drift() {
        for (n, a, rescale) in [(1, 1.0, false), (2, 0.5, true), (3, 1.3, false), (4, 1.0, true)] {
            let sys = SpinStarSystem::new(n, CouplingScheme::equal(a).rescaled(rescale)).unwrap();
            let d = sys.drift_hamiltonian::<f64>();
            let cf = sys.collective_form::<f64>().unwrap();
            assert!(d.max_abs_diff(&cf) <= 1e-12, "n={n}");
        }
        let sys = SpinStarSystem::new(2, CouplingScheme::different(vec![1.0, 1.5])).unwrap();
        assert!(matches!(sys.collective_form::<f64>(), Err(Error::NotEqualCouplings)));
    }

    #[test]
    fn j_squared_conserved_for_equal_couplings() {
        for n in 1..=4 {
            let sys = SpinStarSystem::new(n, CouplingScheme::equal(1.0)).unwrap();
            let j2 = sys.bath_j_squared::<f64>().unwrap();
            let h0 = sys.drift_hamiltonian::<f64>();
            let hc = sys.control_hamiltonian::<f64>();
            assert!(commutator(&h0, &j2).unwrap().max_abs() <= 1e-12);
            assert!(commutator(&hc, &j2).unwrap().max_abs() <= 1e-12);
        }
        let sys = SpinStarSystem::new(2, CouplingScheme::different(vec![1.0, 1.5])).unwrap();
        let j2 = sys.bath_j_squared::<f64>().unwrap();
        assert!(commutator(&sys.drift_hamiltonian::<f64>(), &j2).unwrap().max_abs() > 1e-3);
    }

    #[test]
    fn two_spin_j_squared_spectrum() {
        let sys = SpinStarSystem::new(2, CouplingScheme::equal(1.0)).unwrap();
        let j2 = Operator::<f64>::zeros(4);
        let j2 = Axis::ALL.iter().fold(j2, |acc, &ax| {
            let j = sys.bath_collective::<f64>(ax).unwrap();
            &acc + &(&j * &j)
        });
        let e = eig_hermitian(&j2, 1e-12).unwrap();
        let expected = [0.0, 2.0, 2.0, 2.0];
        for (got, want) in e.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn angular_momentum_algebra() {
        for n in 1..=4 {
            let sys = SpinStarSystem::new(n, CouplingScheme::equal(1.0)).unwrap();
            let jx = sys.bath_angular_momentum::<f64>(Axis::X).unwrap();
            let jy = sys.bath_angular_momentum::<f64>(Axis::Y).unwrap();
            let jz = sys.bath_angular_momentum::<f64>(Axis::Z).unwrap();
            let lhs = commutator(&jx, &jy).unwrap();
            assert!(lhs.max_abs_diff(&jz.times_i()) <= 1e-12);
        }
    }

    #[test]
    fn coupling_resolution() {
        let s = CouplingScheme::random_uniform(42).rescaled(true);
        let a = s.resolve(4).unwrap();
        assert_eq!(a, s.resolve(4).unwrap());
        assert!(a.iter().all(|v| (0.5..=1.0).contains(v)));
        assert!(CouplingScheme::different(vec![1.0]).resolve(2).is_err());
        assert_eq!(CouplingScheme::equal(2.0).rescaled(true).resolve(4).unwrap(), vec![1.0; 4]);
        assert!(CouplingScheme::equal(1.0).rescaled(true).resolve(0).unwrap().is_empty());
    }

    #[test]
    fn scheme_json_shape() {
        let s: CouplingScheme =
            serde_json::from_str(r#"{"kind":"random_uniform","lo":1.0,"hi":2.0,"seed":3,"rescale":true}"#).unwrap();
        assert_eq!(s, CouplingScheme::random_uniform(3).rescaled(true));
        let s: CouplingScheme = serde_json::from_str(r#"{"kind":"equal","a":1.0}"#).unwrap();
        assert!(s.is_equal() && !s.rescale);
    }
}
