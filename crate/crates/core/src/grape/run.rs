use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::scalar::Real;
use crate::seed::derive_seed;

use super::fidelity::{FidelityKind, Objective};
use super::gradient::value_and_gradient_from;
use super::optimizer::{maximize, OptimizerSettings, StopReason, TraceEntry};
use super::propagate::{propagate, ControlProblem};
use super::pulse::PulseSequence;
use super::target::TargetGate;

/// Multi-start settings for one `(N, τ)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub fidelity: FidelityKind,
    pub dt: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Initial amplitudes are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub optimizer: OptimizerSettings,
    /// Stop launching restarts once one of them reaches this fidelity.
    /// Restarts then run in batches of `batch_size`, so the set of
    /// completed restarts does not depend on the thread count.
    pub stop_at: Option<f64>,
    pub batch_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            fidelity: FidelityKind::F1,
            dt: 0.05,
            restarts: 20,
            seed: 0,
            init_scale: 1.0,
            optimizer: OptimizerSettings::default(),
            stop_at: None,
            batch_size: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub index: usize,
    pub seed: u64,
    pub initial_fidelity: f64,
    pub final_fidelity: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: StopReason,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Debug)]
pub struct OptimizationRun<R: Real> {
    pub fidelity: FidelityKind,
    pub tau: f64,
    pub slices: usize,
    pub seed: u64,
    pub settings: OptimizerSettings,
    pub restarts: Vec<RestartOutcome>,
    pub best_restart: Option<usize>,
    pub best_fidelity: R,
    /// `None` only for `τ = 0`, where there is nothing to optimize.
    pub best_pulse: Option<PulseSequence<R>>,
}

impl<R: Real> OptimizationRun<R> {
    pub fn mean_fidelity(&self) -> f64 {
        if self.restarts.is_empty() {
            return self.best_fidelity.as_f64();
        }
        self.restarts.iter().map(|r| r.final_fidelity).sum::<f64>() / self.restarts.len() as f64
    }

    /// One JSON object per line: `{restart, iteration, fidelity, gradient_norm}`.
    pub fn write_trace_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            restart: usize,
            #[serde(flatten)]
            entry: &'a TraceEntry,
        }
        for r in &self.restarts {
            for entry in &r.trace {
                serde_json::to_writer(&mut w, &Line { restart: r.index, entry })?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

/// Number of slices for `tau`, which must be a non-negative multiple of `dt`.
pub fn slice_count(tau: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidConfig(format!("tau must be non-negative, got {tau}")));
    }
    let m = (tau / dt).round();
    if (m * dt - tau).abs() > 1e-9 * tau.max(1.0) {
        return Err(Error::InvalidConfig(format!("tau = {tau} is not a multiple of dt = {dt}")));
    }
    Ok(m as usize)
}

struct Finished<R> {
    outcome: RestartOutcome,
    amplitudes: Vec<R>,
    value: R,
}

fn run_restart<R: Real>(
    problem: &ControlProblem<R>,
    objective: &Objective<R>,
    config: &RunConfig,
    slices: usize,
    index: usize,
) -> Result<Finished<R>> {
    let seed = derive_seed(config.seed, &[index as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = config.init_scale;
    let x0: Vec<R> = (0..slices).map(|_| R::lit(rng.random_range(-s..=s))).collect();
    let dt = R::lit(config.dt);
    let out = maximize(
        x0,
        &config.optimizer,
        |x| {
            let prop = propagate(problem, &PulseSequence::new(dt, x.to_vec())?);
            Ok((objective.value(prop.unitary())?, prop))
        },
        |prop| Ok(value_and_gradient_from(objective, problem.control(), prop)?.1),
    )?;
    Ok(Finished {
        outcome: RestartOutcome {
            index,
            seed,
            initial_fidelity: clamp_unit(out.initial_value.as_f64()),
            final_fidelity: clamp_unit(out.value.as_f64()),
            iterations: out.iterations,
            evaluations: out.evaluations,
            reason: out.reason,
            trace: out.trace,
        },
        amplitudes: out.x,
        value: out.value.min(R::one()),
    })
}

// rounding can push a fidelity a few ulps past 1
fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Multi-start GRAPE at fixed `tau`; the best restart wins, ties going to
/// the lowest restart index.
pub fn optimize<R: Real>(
    problem: &ControlProblem<R>,
    target: &TargetGate,
    tau: f64,
    config: &RunConfig,
) -> Result<OptimizationRun<R>> {
    let slices = slice_count(tau, config.dt)?;
    if config.restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    let objective = Objective::new(config.fidelity, target, problem.n_bath())?;
    let mut run = OptimizationRun {
        fidelity: config.fidelity,
        tau,
        slices,
        seed: config.seed,
        settings: config.optimizer.clone(),
        restarts: Vec::new(),
        best_restart: None,
        best_fidelity: R::zero(),
        best_pulse: None,
    };
    if slices == 0 {
        run.best_fidelity = objective.value(&Operator::identity(problem.dim()))?;
        return Ok(run);
    }

    let batch = match config.stop_at {
        Some(_) => config.batch_size.max(1),
        None => config.restarts,
    };
    let mut best: Option<(R, Vec<R>)> = None;
    let mut start = 0;
    while start < config.restarts {
        let end = (start + batch).min(config.restarts);
        let finished: Vec<Finished<R>> = (start..end)
            .into_par_iter()
            .map(|i| run_restart(problem, &objective, config, slices, i))
            .collect::<Result<_>>()?;
        for f in finished {
            if best.as_ref().map_or(true, |(v, _)| f.value > *v) {
                run.best_restart = Some(f.outcome.index);
                best = Some((f.value, f.amplitudes));
            }
            run.restarts.push(f.outcome);
        }
        start = end;
        if let (Some(stop), Some((v, _))) = (config.stop_at, &best) {
            if v.as_f64() >= stop {
                break;
            }
        }
    }
    let (value, amplitudes) = best.expect("at least one restart ran");
    run.best_fidelity = value;
    run.best_pulse = Some(PulseSequence::new(R::lit(config.dt), amplitudes)?);
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CouplingScheme, SpinStarSystem};

    fn problem(n: usize) -> ControlProblem<f64> {
        ControlProblem::new(&SpinStarSystem::new(n, CouplingScheme::equal(1.0)).unwrap())
    }

    #[test]
    fn slice_counts() {
        assert_eq!(slice_count(5.0, 0.05).unwrap(), 100);
        assert_eq!(slice_count(0.0, 0.05).unwrap(), 0);
        assert!(slice_count(0.07, 0.05).is_err());
        assert!(slice_count(-1.0, 0.05).is_err());
    }

    #[test]
    fn zero_time_evaluates_identity() {
        let run = optimize(&problem(1), &TargetGate::hadamard(), 0.0, &RunConfig::default()).unwrap();
        assert!(run.best_pulse.is_none());
        assert!(run.best_fidelity.abs() < 1e-15);
        let run = optimize(&problem(1), &TargetGate::pi8(), 0.0, &RunConfig::default()).unwrap();
        assert!((run.best_fidelity - (2.0 + 2f64.sqrt()) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_hadamard() {
        let config = RunConfig {
            restarts: 4,
            seed: 11,
            ..Default::default()
        };
        let run = optimize(&problem(0), &TargetGate::hadamard(), 2.0, &config).unwrap();
        assert!(run.best_fidelity >= 0.999, "{}", run.best_fidelity);
        for r in &run.restarts {
            assert!(r.final_fidelity >= r.initial_fidelity);
            assert!(r.final_fidelity <= run.best_fidelity);
        }
        assert_eq!(run.restarts[run.best_restart.unwrap()].final_fidelity, run.best_fidelity);
    }

    #[test]
    fn restart_streams_are_nested() {
        let base = RunConfig {
            fidelity: FidelityKind::F2,
            seed: 5,
            optimizer: OptimizerSettings {
                max_iterations: 30,
                ..Default::default()
            },
            ..Default::default()
        };
        let small = optimize(&problem(1), &TargetGate::hadamard(), 1.0, &RunConfig { restarts: 2, ..base.clone() }).unwrap();
        let large = optimize(&problem(1), &TargetGate::hadamard(), 1.0, &RunConfig { restarts: 5, ..base }).unwrap();
        assert_eq!(small.restarts[..], large.restarts[..2]);
        assert!(large.best_fidelity >= small.best_fidelity);
    }

    #[test]
    fn early_stop_keeps_whole_batches() {
        let config = RunConfig {
            restarts: 40,
            batch_size: 3,
            stop_at: Some(0.99),
            seed: 2,
            ..Default::default()
        };
        let run = optimize(&problem(0), &TargetGate::hadamard(), 2.0, &config).unwrap();
        assert!(run.restarts.len() % 3 == 0 && run.restarts.len() < 40);
        assert!(run.best_fidelity >= 0.99);
    }

    #[test]
    fn trace_lines() {
        let config = RunConfig {
            restarts: 1,
            optimizer: OptimizerSettings {
                max_iterations: 5,
                record_trace: true,
                ..Default::default()
            },
            ..Default::default()
        };
        let run = optimize(&problem(1), &TargetGate::hadamard(), 0.5, &config).unwrap();
        let mut buf = Vec::new();
        run.write_trace_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["iteration"], 0);
        assert!(first["gradient_norm"].as_f64().unwrap() >= 0.0);
        assert_eq!(text.lines().count(), run.restarts[0].trace.len());
    }
}
