//! Exact gradients of the fidelities with respect to the slice amplitudes.
//!
//! For `H_m = V diag(λ) V†` the derivative of `exp(−iH_m dt)` along the
//! control `H_c` is `V (V†H_c V ∘ Φ) V†` with the divided differences
//! `Φ_jk = (e^{−iλ_j dt} − e^{−iλ_k dt}) / (λ_j − λ_k)`, which tend to
//! `−i dt e^{−iλ_j dt}` on (near-)degenerate pairs. They are evaluated as
//! `−i dt e^{−iμ dt} sinc(Δ dt / 2)` with `μ` the mean and `Δ` the gap,
//! which has no cancellation for close eigenvalues.

use num_complex::Complex;

use crate::error::Result;
use crate::operator::Operator;
use crate::scalar::Real;

use super::fidelity::Objective;
use super::propagate::{propagate, ControlProblem, Propagation};
use super::pulse::PulseSequence;

fn sinc<R: Real>(x: R) -> R {
    if x.abs() < R::lit(1e-4) {
        R::one() - x * x / R::lit(6.0)
    } else {
        x.sin() / x
    }
}

/// Divided difference of `λ ↦ e^{−iλ dt}`.
pub fn divided_difference<R: Real>(lj: R, lk: R, dt: R) -> Complex<R> {
    let half = R::lit(0.5);
    let mu = (lj + lk) * half;
    let s = sinc((lj - lk) * dt * half);
    // −i dt e^{−iμ dt} s
    let (sin, cos) = (mu * dt).sin_cos();
    Complex::new(-dt * s * sin, -dt * s * cos)
}

/// `tr(K ∂U(τ)/∂B_m)` for every slice `m`.
pub fn trace_derivatives<R: Real>(prop: &Propagation<R>, control: &Operator<R>, k: &Operator<R>) -> Vec<Complex<R>> {
    let m_slices = prop.slices.len();
    let mut out = vec![Complex::new(R::zero(), R::zero()); m_slices];
    // Λ_m = K U_M ⋯ U_{m+1}
    let mut lambda = k.clone();
    for m in (0..m_slices).rev() {
        let slice = &prop.slices[m];
        let v = slice.spectrum.eigenvectors.matrix();
        let vh = v.adjoint();
        let ev = &slice.spectrum.eigenvalues;
        let a = &vh * (prop.forward[m].matrix() * lambda.matrix()) * v;
        let hc = &vh * control.matrix() * v;
        let n = ev.len();
        let mut acc = Complex::new(R::zero(), R::zero());
        for j in 0..n {
            for kk in 0..n {
                let d = hc[(j, kk)] * divided_difference(ev[j], ev[kk], prop.dt);
                acc += a[(kk, j)] * d;
            }
        }
        out[m] = acc;
        lambda = &lambda * &slice.propagator;
    }
    out
}

/// Fidelity and its gradient from an existing propagation.
pub fn value_and_gradient_from<R: Real>(
    objective: &Objective<R>,
    control: &Operator<R>,
    prop: &Propagation<R>,
) -> Result<(R, Vec<R>)> {
    let lin = objective.linearize(prop.unitary())?;
    let grad = trace_derivatives(prop, control, &lin.k)
        .into_iter()
        .map(|t| (lin.weight * t).re)
        .collect();
    Ok((lin.value, grad))
}

/// Fidelity and exact gradient for `pulse`.
pub fn value_and_gradient<R: Real>(
    problem: &ControlProblem<R>,
    objective: &Objective<R>,
    pulse: &PulseSequence<R>,
) -> Result<(R, Vec<R>)> {
    let prop = propagate(problem, pulse);
    value_and_gradient_from(objective, problem.control(), &prop)
}

/// `∂f₁/∂B_m` against the full-system `target_full`.
pub fn gradient_f1<R: Real>(
    problem: &ControlProblem<R>,
    pulse: &PulseSequence<R>,
    target_full: &Operator<R>,
) -> Result<Vec<R>> {
    let prop = propagate(problem, pulse);
    let g = super::fidelity::normalized_overlap(prop.unitary(), target_full)?;
    let d = R::from_count(problem.dim());
    let weight = g.conj() * (R::lit(2.0) / d);
    Ok(trace_derivatives(&prop, problem.control(), &target_full.adjoint())
        .into_iter()
        .map(|t| (weight * t).re)
        .collect())
}

/// `∂f₂/∂B_m` against the 2×2 central `target_central`.
pub fn gradient_f2<R: Real>(
    problem: &ControlProblem<R>,
    pulse: &PulseSequence<R>,
    target_central: &Operator<R>,
) -> Result<Vec<R>> {
    let prop = propagate(problem, pulse);
    let q = super::fidelity::reduced_overlap(prop.unitary(), target_central, problem.n_bath())?;
    let w = crate::operator::polar_unitary(&q);
    let k = target_central.adjoint().kron(&w.adjoint());
    let d = R::from_count(problem.dim());
    Ok(trace_derivatives(&prop, problem.control(), &k)
        .into_iter()
        .map(|t| t.re / d)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grape::fidelity::{fidelity_f1, fidelity_f2, FidelityKind};
    use crate::grape::target::TargetGate;
    use crate::model::{CouplingScheme, SpinStarSystem};
    use crate::operator::{pauli, Axis};

    fn finite_difference(
        problem: &ControlProblem<f64>,
        objective: &Objective<f64>,
        pulse: &PulseSequence<f64>,
        h: f64,
    ) -> Vec<f64> {
        (0..pulse.slices())
            .map(|m| {
                let mut plus = pulse.clone();
                plus.amplitudes_mut()[m] += h;
                let mut minus = pulse.clone();
                minus.amplitudes_mut()[m] -= h;
                let fp = objective.value(propagate(problem, &plus).unitary()).unwrap();
                let fm = objective.value(propagate(problem, &minus).unitary()).unwrap();
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn divided_difference_limits() {
        let dt = 0.05;
        let exact = (Complex::from_polar(1.0, -1.3 * dt) - Complex::from_polar(1.0, -0.4 * dt)) / (1.3 - 0.4);
        assert!((divided_difference(1.3, 0.4, dt) - exact).norm() < 1e-15);
        let limit = Complex::new(0.0, -dt) * Complex::from_polar(1.0, -0.8 * dt);
        assert!((divided_difference(0.8, 0.8, dt) - limit).norm() < 1e-16);
        assert!((divided_difference(0.8, 0.8 + 1e-13, dt) - limit).norm() < 1e-14);
    }

    #[test]
    fn matches_finite_differences() {
        let systems = [
            SpinStarSystem::new(0, CouplingScheme::equal(1.0)).unwrap(),
            SpinStarSystem::new(1, CouplingScheme::equal(1.0)).unwrap(),
            SpinStarSystem::new(2, CouplingScheme::different(vec![1.0, 1.5])).unwrap(),
        ];
        for sys in &systems {
            let problem = ControlProblem::new(sys);
            let pulse = PulseSequence::new(0.05, (0..12).map(|k| (k as f64 * 0.77).sin() * 2.0).collect()).unwrap();
            for kind in [FidelityKind::F1, FidelityKind::F2] {
                let objective = Objective::new(kind, &TargetGate::hadamard(), sys.n_bath()).unwrap();
                let (_, grad) = value_and_gradient(&problem, &objective, &pulse).unwrap();
                let fd = finite_difference(&problem, &objective, &pulse, 1e-6);
                let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                for (a, b) in grad.iter().zip(&fd) {
                    assert!((a - b).abs() <= 1e-5 * scale, "{kind}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn explicit_gradient_functions_agree() {
        let sys = SpinStarSystem::new(1, CouplingScheme::equal(1.0)).unwrap();
        let problem = ControlProblem::new(&sys);
        let pulse = PulseSequence::new(0.1, vec![0.3, -0.8, 1.1, 0.0]).unwrap();
        let target = TargetGate::hadamard();
        let o1 = Objective::new(FidelityKind::F1, &target, 1).unwrap();
        let o2 = Objective::new(FidelityKind::F2, &target, 1).unwrap();
        let g1 = gradient_f1(&problem, &pulse, o1.target_full()).unwrap();
        let g2 = gradient_f2(&problem, &pulse, o2.target_central()).unwrap();
        assert_eq!(g1, value_and_gradient(&problem, &o1, &pulse).unwrap().1);
        assert_eq!(g2, value_and_gradient(&problem, &o2, &pulse).unwrap().1);
        let u = propagate(&problem, &pulse);
        let v1: f64 = fidelity_f1(u.unitary(), o1.target_full()).unwrap();
        let v2 = fidelity_f2(u.unitary(), o2.target_central(), 1).unwrap();
        assert!(v2 >= v1.sqrt() - 1e-12);
    }

    /// Zero couplings, zero pulse: each slice derivative is `−i sin(dt) σ_z`
    /// in closed form, so the whole gradient can be written with 2×2 matrices.
    #[test]
    fn decoupled_closed_form() {
        let dt = 0.05;
        let m_slices = 20;
        let tau = dt * m_slices as f64;
        let sys = SpinStarSystem::new(1, CouplingScheme::equal(0.0)).unwrap();
        let problem = ControlProblem::new(&sys);
        let pulse = PulseSequence::zeros(dt, m_slices).unwrap();

        let ry = |a: f64| {
            let (s, c) = a.sin_cos();
            &Operator::<f64>::identity(2).scale_real(c) + &pauli::sigma(Axis::Y).scale(Complex::new(0.0, -s))
        };
        let sz = pauli::sigma::<f64>(Axis::Z);

        // target at the drift-only endpoint: stationary point
        let reached = ry(tau).kron(&Operator::identity(2));
        let grad = gradient_f1(&problem, &pulse, &reached).unwrap();
        assert!(grad.iter().all(|g| g.abs() <= 1e-8));

        let h = TargetGate::hadamard().central_gate::<f64>().unwrap();
        let full = h.kron(&Operator::identity(2));
        let grad = gradient_f1(&problem, &pulse, &full).unwrap();
        let g = (&h.adjoint() * &ry(tau)).trace() / 2.0;
        for (m, got) in grad.iter().enumerate() {
            let before = ry(m as f64 * dt);
            let after = ry(tau - (m + 1) as f64 * dt);
            let du = &(&after * &sz.scale(Complex::new(0.0, -dt.sin()))) * &before;
            let dg = (&h.adjoint() * &du).trace() / 2.0;
            let want = 2.0 * (g.conj() * dg).re;
            assert!((got - want).abs() <= 1e-8, "slice {m}: {got} vs {want}");
        }
    }
}
