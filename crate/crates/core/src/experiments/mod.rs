//! Sweep harness: fidelity-versus-time curves and minimum gate time estimates.

pub mod config;
pub mod sweep;

pub use config::{SweepConfig, TauGrid, TauWindow, THREADS_ENV};
pub use sweep::{estimate_tstar, read_sweep_csv, run_sweep, run_sweep_with, CellResult, SweepResult, SweepRow, SweepSummary};

use crate::error::{Error, Result};

/// Worker pool with `threads` workers, falling back to the
/// `SPINSTAR_THREADS` variable and then to one worker per core.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let threads = match threads {
        Some(t) => t,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?,
            Err(_) => 0,
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}
