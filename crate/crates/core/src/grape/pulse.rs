use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Piecewise-constant control field: amplitude `B_m` held for `dt` in slice `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence<R: Real> {
    dt: R,
    amplitudes: Vec<R>,
}

impl<R: Real> PulseSequence<R> {
    pub fn new(dt: R, amplitudes: Vec<R>) -> Result<Self> {
        if !(dt > R::zero()) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!("slice duration must be positive, got {dt}")));
        }
        if amplitudes.is_empty() {
            return Err(Error::InvalidConfig("pulse needs at least one slice".into()));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfig("non-finite pulse amplitude".into()));
        }
        Ok(Self { dt, amplitudes })
    }

    pub fn zeros(dt: R, slices: usize) -> Result<Self> {
        Self::new(dt, vec![R::zero(); slices])
    }

    pub fn dt(&self) -> R {
        self.dt
    }

    pub fn slices(&self) -> usize {
        self.amplitudes.len()
    }

    /// Total duration `M·dt`.
    pub fn tau(&self) -> R {
        self.dt * R::from_count(self.amplitudes.len())
    }

    pub fn amplitudes(&self) -> &[R] {
        &self.amplitudes
    }

    #[cfg(test)]
    pub(crate) fn amplitudes_mut(&mut self) -> &mut [R] {
        &mut self.amplitudes
    }

    pub fn max_abs_amplitude(&self) -> R {
        self.amplitudes.iter().fold(R::zero(), |m, a| m.max(a.abs()))
    }

    /// Writes `slice_index,amplitude` rows with a header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (i, a) in self.amplitudes.iter().enumerate() {
            w.serialize(PulseRow {
                slice_index: i,
                amplitude: a.as_f64(),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv). Rows may be
    /// in any order but must cover `0..M` exactly once.
    pub fn read_csv<Rd: Read>(reader: Rd, dt: R) -> Result<Self> {
        let mut rows: Vec<PulseRow> = csv::Reader::from_reader(reader)
            .deserialize()
            .collect::<std::result::Result<_, _>>()?;
        rows.sort_by_key(|r| r.slice_index);
        if rows.iter().enumerate().any(|(i, r)| r.slice_index != i) {
            return Err(Error::InvalidConfig("pulse CSV slice indices are not 0..M".into()));
        }
        Self::new(dt, rows.iter().map(|r| R::lit(r.amplitude)).collect())
    }

    pub fn to_json(&self) -> PulseJson {
        PulseJson {
            dt: self.dt.as_f64(),
            tau: self.tau().as_f64(),
            amplitudes: self.amplitudes.iter().map(|a| a.as_f64()).collect(),
        }
    }

    pub fn from_json(json: &PulseJson) -> Result<Self> {
        Self::new(R::lit(json.dt), json.amplitudes.iter().map(|&a| R::lit(a)).collect())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PulseRow {
    slice_index: usize,
    amplitude: f64,
}

/// JSON form of a pulse. `tau` is informational and ignored on read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseJson {
    pub dt: f64,
    #[serde(default)]
    pub tau: f64,
    pub amplitudes: Vec<f64>,
}
