use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grape::{optimize, ControlProblem, FidelityKind, PulseSequence, RunConfig};
use crate::model::SpinStarSystem;
use crate::scalar::Real;
use crate::seed::derive_seed;

use super::config::SweepConfig;

/// Smallest grid `τ` whose fidelity reaches `threshold`, if any.
pub fn estimate_tstar(curve: &[(f64, f64)], threshold: f64) -> Option<f64> {
    curve
        .iter()
        .filter(|(_, f)| *f >= threshold)
        .map(|(t, _)| *t)
        .min_by(|a, b| a.total_cmp(b))
}

/// One `(N, τ)` cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n_bath: usize,
    pub tau: f64,
    pub slices: usize,
    /// Restarts that actually ran.
    pub restarts: usize,
    pub best_fidelity: f64,
    pub mean_fidelity: f64,
    pub best_restart: Option<usize>,
    pub wall_ms: Option<f64>,
    /// Path of the saved best pulse, relative to the output directory.
    pub pulse_file: Option<String>,
}

/// A row of the sweep CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_bath: usize,
    pub tau: f64,
    pub restarts: usize,
    pub best_fidelity: f64,
    pub mean_fidelity: f64,
    pub fidelity_kind: FidelityKind,
    pub scheme: String,
    pub seed: u64,
    pub wall_ms: Option<f64>,
}

/// The `summary.json` written next to the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub fidelity: FidelityKind,
    pub scheme: String,
    pub threshold: f64,
    pub seed: u64,
    pub couplings: BTreeMap<usize, Vec<f64>>,
    /// `null` where the threshold was not reached on the grid.
    pub t_star: BTreeMap<usize, Option<f64>>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub fidelity: FidelityKind,
    pub scheme: String,
    pub seed: u64,
    pub threshold: f64,
    pub couplings: BTreeMap<usize, Vec<f64>>,
    pub cells: Vec<CellResult>,
    /// Best pulse per cell, aligned with `cells`; filled when pulses are saved.
    pub best_pulses: Vec<Option<PulseSequence<f64>>>,
}

impl SweepResult {
    /// `(τ, best fidelity)` for bath size `n`.
    pub fn curve(&self, n: usize) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter(|c| c.n_bath == n)
            .map(|c| (c.tau, c.best_fidelity))
            .collect()
    }

    pub fn t_star(&self, n: usize) -> Option<f64> {
        estimate_tstar(&self.curve(n), self.threshold)
    }

    pub fn summary(&self) -> SweepSummary {
        SweepSummary {
            fidelity: self.fidelity,
            scheme: self.scheme.clone(),
            threshold: self.threshold,
            seed: self.seed,
            couplings: self.couplings.clone(),
            t_star: self.couplings.keys().map(|&n| (n, self.t_star(n))).collect(),
        }
    }

    pub fn rows(&self) -> Vec<SweepRow> {
        self.cells
            .iter()
            .map(|c| SweepRow {
                n_bath: c.n_bath,
                tau: c.tau,
                restarts: c.restarts,
                best_fidelity: c.best_fidelity,
                mean_fidelity: c.mean_fidelity,
                fidelity_kind: self.fidelity,
                scheme: self.scheme.clone(),
                seed: self.seed,
                wall_ms: c.wall_ms,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the CSV, `summary.json` and any saved pulses under `dir`.
    pub fn write_outputs(&self, dir: &Path, csv_name: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let csv_path = dir.join(csv_name);
        self.write_csv(fs::File::create(&csv_path)?)?;
        written.push(csv_path);
        let summary_path = dir.join("summary.json");
        let mut f = fs::File::create(&summary_path)?;
        serde_json::to_writer_pretty(&mut f, &self.summary())?;
        f.write_all(b"\n")?;
        written.push(summary_path);
        for (cell, pulse) in self.cells.iter().zip(&self.best_pulses) {
            if let (Some(name), Some(p)) = (&cell.pulse_file, pulse) {
                let path = dir.join(name);
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent)?;
                }
                p.write_csv(fs::File::create(&path)?)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// Reads a sweep CSV back.
pub fn read_sweep_csv<Rd: Read>(reader: Rd) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Grid value of `m` slices, free of accumulated rounding.
fn tau_of(m: u64, dt: f64) -> f64 {
    (m as f64 * dt * 1e9).round() / 1e9
}

/// Runs every `(N, τ)` cell of `config`.
pub fn run_sweep<R: Real>(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with::<R>(config, |_| {})
}

/// Like [`run_sweep`], calling `on_cell` after each finished cell.
pub fn run_sweep_with<R: Real>(config: &SweepConfig, mut on_cell: impl FnMut(&CellResult)) -> Result<SweepResult> {
    config.validate()?;
    let mut systems = Vec::with_capacity(config.n_bath.len());
    for &n in &config.n_bath {
        let dim = 2usize.checked_shl(n as u32).filter(|_| n < 63).unwrap_or(usize::MAX);
        if dim > config.dim_cap {
            return Err(Error::ResourceLimit(format!(
                "N = {n} needs Hilbert dimension 2^{} above the cap {}",
                n + 1,
                config.dim_cap
            )));
        }
        systems.push(SpinStarSystem::new(n, config.couplings.clone())?);
    }

    let mut optimizer = config.optimizer.clone();
    if config.early_exit {
        let t = optimizer.target_fidelity.map_or(config.threshold, |t| t.min(config.threshold));
        optimizer.target_fidelity = Some(t);
    }
    let base = RunConfig {
        fidelity: config.fidelity,
        dt: config.dt,
        restarts: config.restarts(),
        seed: config.seed,
        init_scale: config.init_scale,
        optimizer,
        stop_at: config.early_exit.then_some(config.threshold),
        batch_size: config.batch_size,
    };

    let mut result = SweepResult {
        fidelity: config.fidelity,
        scheme: config.couplings.label().to_string(),
        seed: config.seed,
        threshold: config.threshold,
        couplings: BTreeMap::new(),
        cells: Vec::new(),
        best_pulses: Vec::new(),
    };
    for sys in &systems {
        let n = sys.n_bath();
        result.couplings.insert(n, sys.couplings().to_vec());
        let problem = ControlProblem::<R>::new(sys);
        for m in config.grid_for(n)? {
            let tau = tau_of(m, config.dt);
            let run_config = RunConfig {
                seed: derive_seed(config.seed, &[n as u64, m]),
                ..base.clone()
            };
            let start = Instant::now();
            let run = optimize(&problem, &config.target, tau, &run_config)?;
            let wall_ms = config.record_wall_time.then(|| start.elapsed().as_secs_f64() * 1e3);
            let best_pulse = run
                .best_pulse
                .as_ref()
                .map(|p| PulseSequence::new(p.dt().as_f64(), p.amplitudes().iter().map(|a| a.as_f64()).collect()))
                .transpose()?;
            let save = config.save_pulses && best_pulse.is_some();
            let cell = CellResult {
                n_bath: n,
                tau,
                slices: m as usize,
                restarts: run.restarts.len().max(1),
                best_fidelity: run.best_fidelity.as_f64(),
                mean_fidelity: run.mean_fidelity(),
                best_restart: run.best_restart,
                wall_ms,
                pulse_file: save.then(|| format!("pulses/n{n}_m{m}.csv")),
            };
            on_cell(&cell);
            let crossed = cell.best_fidelity >= config.threshold;
            result.cells.push(cell);
            result.best_pulses.push(if save { best_pulse } else { None });
            if crossed && config.stop_at_tstar {
                break;
            }
        }
    }
    Ok(result)
}
