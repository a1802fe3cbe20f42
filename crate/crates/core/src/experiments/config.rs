use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grape::{FidelityKind, OptimizerSettings, TargetGate};
use crate::model::CouplingScheme;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "SPINSTAR_THREADS";

/// Evenly spaced driving times `start, start + step, …, ≤ stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// Whole number of `dt` in `value`, or an error naming `what`.
fn multiple_of(value: f64, dt: f64, what: &str) -> Result<u64> {
    let m = (value / dt).round();
    if !value.is_finite() || value < 0.0 || (m * dt - value).abs() > 1e-9 * value.max(1.0) {
        return Err(Error::InvalidConfig(format!("{what} = {value} is not a multiple of dt = {dt}")));
    }
    Ok(m as u64)
}

impl TauGrid {
    /// Grid points as slice counts, so that every point is an exact
    /// multiple of `dt`.
    pub fn slice_counts(&self, dt: f64) -> Result<Vec<u64>> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        let start = multiple_of(self.start, dt, "tau start")?;
        let step = multiple_of(self.step, dt, "tau step")?;
        if step == 0 {
            return Err(Error::InvalidConfig("tau step must be positive".into()));
        }
        if !(self.stop >= self.start) {
            return Err(Error::InvalidConfig(format!(
                "tau grid is empty: start {} > stop {}",
                self.start, self.stop
            )));
        }
        let stop = (self.stop / dt + 1e-9).floor() as u64;
        Ok((start..=stop).step_by(step as usize).collect())
    }
}

/// Restricts the τ search for one bath size to `[start, stop]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauWindow {
    pub n_bath: usize,
    pub start: f64,
    pub stop: f64,
}

/// A full sweep over bath sizes and driving times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_bath: Vec<usize>,
    pub couplings: CouplingScheme,
    pub target: TargetGate,
    pub fidelity: FidelityKind,
    pub tau: TauGrid,
    pub windows: Vec<TauWindow>,
    /// Restarts per cell; defaults to 200 for `f1` and 500 for `f2`.
    pub restarts: Option<usize>,
    pub threshold: f64,
    pub dt: f64,
    pub seed: u64,
    pub init_scale: f64,
    pub optimizer: OptimizerSettings,
    /// Largest accepted Hilbert-space dimension `2^(N+1)`.
    pub dim_cap: usize,
    /// Stop launching restarts in a cell once one reaches the threshold,
    /// and stop each restart when it does. The crossing cell, and hence
    /// `T*`, is unchanged; the cell statistics then cover only the
    /// restarts that ran.
    pub early_exit: bool,
    /// Restart batch size used with `early_exit`.
    pub batch_size: usize,
    /// Skip the remaining driving times of a bath size once `T*` is found.
    pub stop_at_tstar: bool,
    /// Fill the `wall_ms` column. Off by default so that reruns produce
    /// byte-identical files.
    pub record_wall_time: bool,
    /// Write the best pulse of every cell under `pulses/`.
    pub save_pulses: bool,
    /// CSV file name, relative to the output directory.
    pub output: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_bath: vec![0, 1, 2],
            couplings: CouplingScheme::equal(1.0).rescaled(true),
            target: TargetGate::hadamard(),
            fidelity: FidelityKind::F1,
            tau: TauGrid {
                start: 0.5,
                stop: 5.0,
                step: 0.5,
            },
            windows: Vec::new(),
            restarts: None,
            threshold: 0.995,
            dt: 0.05,
            seed: 0,
            init_scale: 1.0,
            optimizer: OptimizerSettings::default(),
            dim_cap: 128,
            early_exit: false,
            batch_size: 8,
            stop_at_tstar: false,
            record_wall_time: false,
            save_pulses: false,
            output: "sweep.csv".into(),
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn restarts(&self) -> usize {
        self.restarts.unwrap_or(match self.fidelity {
            FidelityKind::F1 => 200,
            FidelityKind::F2 => 500,
        })
    }

    /// Grid points (slice counts) for bath size `n`, after any window.
    pub fn grid_for(&self, n: usize) -> Result<Vec<u64>> {
        let base = self.tau.slice_counts(self.dt)?;
        Ok(match self.windows.iter().find(|w| w.n_bath == n) {
            None => base,
            Some(w) => {
                let lo = w.start / self.dt - 1e-9;
                let hi = w.stop / self.dt + 1e-9;
                base.into_iter().filter(|&m| (m as f64) >= lo && (m as f64) <= hi).collect()
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_bath.is_empty() {
            return bad("n_bath list is empty".into());
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return bad(format!("threshold must lie in (0, 1], got {}", self.threshold));
        }
        if self.restarts() == 0 {
            return bad("restarts must be at least 1".into());
        }
        if !(self.init_scale >= 0.0) || !self.init_scale.is_finite() {
            return bad(format!("init_scale must be non-negative, got {}", self.init_scale));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.tau.slice_counts(self.dt)?.is_empty() {
            return bad("tau grid is empty".into());
        }
        for w in &self.windows {
            if !(w.stop >= w.start) {
                return bad(format!("window for N = {} is empty", w.n_bath));
            }
        }
        if self.output.is_empty() {
            return bad("output file name is empty".into());
        }
        Ok(())
    }
}
