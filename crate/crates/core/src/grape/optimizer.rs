//! Limited-memory BFGS ascent with a backtracking (Armijo) line search.
//!
//! Amplitude bounds are enforced by clipping every trial point inside the
//! line search, so the sufficient-increase test is made against the step
//! actually taken. Coordinates held at a bound by the gradient are frozen
//! for the quasi-Newton step.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Stop when the Euclidean norm of the gradient falls below this.
    pub gradient_tol: f64,
    /// Number of curvature pairs kept.
    pub memory: usize,
    /// Sufficient-increase constant of the Armijo test.
    pub armijo: f64,
    /// Step shrink factor per rejected trial.
    pub backtrack: f64,
    /// Give up on a line search once `max |Δx|` falls below this.
    pub min_step: f64,
    /// Clip amplitudes to `[-b, b]`.
    pub amplitude_bound: Option<f64>,
    /// Stop as soon as the fidelity reaches this value.
    pub target_fidelity: Option<f64>,
    /// Stop when a single accepted step improves the value by at most
    /// `value_tol · max(1, |f|)`; `0` disables the check.
    pub value_tol: f64,
    /// Stop when the fidelity improved by less than `stall_tol` over this
    /// many iterations; `0` disables the check.
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Keep a per-iteration trace.
    pub record_trace: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_tol: 1e-9,
            memory: 60,
            armijo: 1e-4,
            backtrack: 0.5,
            min_step: 1e-13,
            amplitude_bound: None,
            target_fidelity: None,
            value_tol: 0.0,
            stall_window: 0,
            stall_tol: 1e-10,
            record_trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    TargetReached,
    IterationCap,
    Stalled,
    SmallImprovement,
    LineSearchFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub fidelity: f64,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug)]
pub struct AscentOutcome<R> {
    pub x: Vec<R>,
    pub value: R,
    pub initial_value: R,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: StopReason,
    pub trace: Vec<TraceEntry>,
}

fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).fold(R::zero(), |acc, (&x, &y)| acc + x * y)
}

fn inf_norm<R: Real>(a: &[R]) -> R {
    a.iter().fold(R::zero(), |m, x| m.max(x.abs()))
}

/// Two-loop recursion: approximate inverse-Hessian applied to `g`.
fn two_loop<R: Real>(g: &[R], pairs: &VecDeque<(Vec<R>, Vec<R>, R)>) -> Vec<R> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = *rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, &yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = *rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, &si)| *qi += (a - b) * si);
    }
    q
}

/// Maximizes a smooth function.
///
/// `evaluate(x)` returns the value and an opaque cache from which
/// `gradient(&cache)` produces the gradient; the gradient is only
/// requested at accepted points.
pub fn maximize<R, C, E, G>(
    x0: Vec<R>,
    settings: &OptimizerSettings,
    mut evaluate: E,
    mut gradient: G,
) -> Result<AscentOutcome<R>>
where
    R: Real,
    E: FnMut(&[R]) -> Result<(R, C)>,
    G: FnMut(&C) -> Result<Vec<R>>,
{
    let bound = settings.amplitude_bound.map(R::lit);
    let clip = |x: &mut [R]| {
        if let Some(b) = bound {
            x.iter_mut().for_each(|v| *v = v.max(-b).min(b));
        }
    };
    let mut x = x0;
    clip(&mut x);
    let (mut f, cache) = evaluate(&x)?;
    let mut g = gradient(&cache)?;
    let mut evaluations = 1;
    let initial_value = f;

    let gtol = R::lit(settings.gradient_tol);
    let c1 = R::lit(settings.armijo);
    let shrink = R::lit(settings.backtrack);
    let min_step = R::lit(settings.min_step);
    let target = settings.target_fidelity.map(R::lit);

    let mut pairs: VecDeque<(Vec<R>, Vec<R>, R)> = VecDeque::with_capacity(settings.memory);
    let mut history = vec![f];
    let mut trace = Vec::new();

    // gradient with components pushing against an active bound removed
    let project = |x: &[R], g: &[R]| -> Vec<R> {
        match bound {
            None => g.to_vec(),
            Some(b) => x
                .iter()
                .zip(g)
                .map(|(&xi, &gi)| {
                    if (xi >= b && gi > R::zero()) || (xi <= -b && gi < R::zero()) {
                        R::zero()
                    } else {
                        gi
                    }
                })
                .collect(),
        }
    };

    let mut record = |it: usize, f: R, pg: &[R]| {
        if settings.record_trace {
            trace.push(TraceEntry {
                iteration: it,
                fidelity: f.as_f64(),
                gradient_norm: dot(pg, pg).sqrt().as_f64(),
            });
        }
    };
    record(0, f, &project(&x, &g));

    let mut iterations = 0;
    let reason = loop {
        let pg = project(&x, &g);
        if dot(&pg, &pg).sqrt() <= gtol {
            break StopReason::GradientTolerance;
        }
        if target.is_some_and(|t| f >= t) {
            break StopReason::TargetReached;
        }
        if iterations >= settings.max_iterations {
            break StopReason::IterationCap;
        }
        let w = settings.stall_window;
        if w > 0 && history.len() > w && f - history[history.len() - 1 - w] < R::lit(settings.stall_tol) {
            break StopReason::Stalled;
        }

        let mut dir = two_loop(&pg, &pairs);
        for ((d, &p), &gi) in dir.iter_mut().zip(&pg).zip(&g) {
            if p == R::zero() && gi != R::zero() {
                *d = R::zero();
            }
        }
        if dot(&dir, &pg) <= R::zero() {
            pairs.clear();
            dir = pg.clone();
        }
        let mut alpha = if pairs.is_empty() {
            R::one() / inf_norm(&dir).max(R::lit(1e-300))
        } else {
            R::one()
        };

        let accepted = loop {
            let mut trial: Vec<R> = x.iter().zip(&dir).map(|(&xi, &di)| xi + alpha * di).collect();
            clip(&mut trial);
            let step: Vec<R> = trial.iter().zip(&x).map(|(&a, &b)| a - b).collect();
            if inf_norm(&step) < min_step {
                break None;
            }
            let slope = dot(&g, &step);
            if slope > R::zero() {
                let (f_new, cache) = evaluate(&trial)?;
                evaluations += 1;
                if f_new >= f + c1 * slope {
                    break Some((trial, step, f_new, cache));
                }
            }
            alpha *= shrink;
        };
        let Some((x_new, s, f_new, cache)) = accepted else {
            break StopReason::LineSearchFailed;
        };
        let g_new = gradient(&cache)?;
        // curvature pair for the minimization of −f
        let y: Vec<R> = g.iter().zip(&g_new).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > R::lit(1e-12) * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if pairs.len() == settings.memory.max(1) {
                pairs.pop_front();
            }
            pairs.push_back((s, y, R::one() / sy));
        }
        let gain = f_new - f;
        x = x_new;
        f = f_new;
        g = g_new;
        iterations += 1;
        history.push(f);
        record(iterations, f, &project(&x, &g));
        if settings.value_tol > 0.0 && gain <= R::lit(settings.value_tol) * f.abs().max(R::one()) {
            break StopReason::SmallImprovement;
        }
    };

    Ok(AscentOutcome {
        x,
        value: f,
        initial_value,
        iterations,
        evaluations,
        reason,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // f(x) = −Σ c_i (x_i − t_i)², maximum 0 at t
    fn quadratic(x: &[f64]) -> (f64, Vec<f64>) {
        let t = [1.0, -2.0, 0.5, 3.0];
        let c = [1.0, 10.0, 0.1, 3.0];
        let f = -x.iter().zip(t).zip(c).map(|((&xi, ti), ci)| ci * (xi - ti).powi(2)).sum::<f64>();
        let g = x.iter().zip(t).zip(c).map(|((&xi, ti), ci)| -2.0 * ci * (xi - ti)).collect();
        (f, g)
    }

    #[test]
    fn solves_quadratic() {
        let out = maximize(
            vec![0.0; 4],
            &OptimizerSettings::default(),
            |x| Ok(quadratic(x)),
            |g: &Vec<f64>| Ok(g.clone()),
        )
        .unwrap();
        assert_eq!(out.reason, StopReason::GradientTolerance);
        assert!(out.value > -1e-15);
        assert!((out.x[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn respects_bounds() {
        let settings = OptimizerSettings {
            amplitude_bound: Some(1.5),
            record_trace: true,
            ..Default::default()
        };
        let out = maximize(vec![0.0; 4], &settings, |x| Ok(quadratic(x)), |g: &Vec<f64>| Ok(g.clone())).unwrap();
        assert!(out.x.iter().all(|v| v.abs() <= 1.5));
        assert!((out.x[3] - 1.5).abs() < 1e-12 && (out.x[1] + 1.5).abs() < 1e-12);
        assert!(out.trace.windows(2).all(|w| w[1].fidelity >= w[0].fidelity));
    }

    #[test]
    fn target_stops_early() {
        let settings = OptimizerSettings {
            target_fidelity: Some(-1.0),
            ..Default::default()
        };
        let out = maximize(vec![0.0; 4], &settings, |x| Ok(quadratic(x)), |g: &Vec<f64>| Ok(g.clone())).unwrap();
        assert_eq!(out.reason, StopReason::TargetReached);
        assert!(out.value >= -1.0);
    }
}
