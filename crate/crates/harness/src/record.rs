//! Sweep output: one CSV row per finished cell plus a JSON sidecar.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// CSV column order, fixed.
pub const CSV_COLUMNS: [&str; 13] = [
    "kc",
    "l",
    "rho",
    "snr",
    "i_cond_nats",
    "i_cond_stderr",
    "penalty_ratio",
    "penalty_stderr",
    "rate_upper_nats",
    "entropy_cap_nats",
    "threshold_snr",
    "wall_time_s",
    "seed",
];

/// One finished cell. `i_cond_nats` is the integral as estimated, before
/// any entropy cap, so that saturation stays observable downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub kc: usize,
    pub l: usize,
    pub rho: f64,
    pub snr: f64,
    pub i_cond_nats: f64,
    pub i_cond_stderr: f64,
    pub penalty_ratio: f64,
    pub penalty_stderr: f64,
    pub rate_upper_nats: f64,
    pub entropy_cap_nats: f64,
    pub threshold_snr: f64,
    pub wall_time_s: f64,
    pub seed: u64,
}

impl SweepRecord {
    /// `min(i_cond, entropy cap)`.
    pub fn capped_penalty_nats(&self) -> f64 {
        self.i_cond_nats.min(self.entropy_cap_nats)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.rho,
            self.snr,
            self.i_cond_nats,
            self.i_cond_stderr,
            self.penalty_ratio,
            self.penalty_stderr,
            self.rate_upper_nats,
            self.entropy_cap_nats,
            self.threshold_snr,
            self.wall_time_s,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Mmse curve of one cell, as stored in the sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub snr_grid: Vec<f64>,
    pub mmse: Vec<f64>,
    pub mmse_stderr: Vec<f64>,
}

/// Everything known about one cell, including failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub index: usize,
    pub kc: usize,
    pub l: usize,
    pub rho: f64,
    pub seed: u64,
    pub posterior: Option<String>,
    pub unconverged_posteriors: usize,
    pub curve: Option<CurveSummary>,
    pub record: Option<SweepRecord>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    /// How per-cell and per-trial seeds follow from the root seed.
    pub seed_scheme: String,
    pub config: String,
    pub cells: Vec<CellReport>,
}

/// Appends rows to a CSV file, flushing after each one.
pub struct CsvSink {
    writer: csv::Writer<File>,
}

impl CsvSink {
    /// Creates (truncates) the file and writes the header.
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| HarnessError::Write {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        let file = File::create(path).map_err(|source| HarnessError::Write {
            path: path.to_path_buf(),
            source,
        })?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        writer.write_record(CSV_COLUMNS)?;
        writer.flush().map_err(|source| HarnessError::Write {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self { writer })
    }

    pub fn push(&mut self, record: &SweepRecord) -> Result<()> {
        self.writer.serialize(record)?;
        self.writer.flush().map_err(|e| HarnessError::Runtime(e.to_string()))
    }
}

pub fn write_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut sink = CsvSink::create(path)?;
    records.iter().try_for_each(|r| sink.push(r))
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(HarnessError::Runtime(format!(
            "{}: unexpected columns {:?}",
            path.display(),
            headers.iter().collect::<Vec<_>>()
        )));
    }
    reader.deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

/// Rewrites the sidecar through a temporary file so readers never see a
/// half-written document.
pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    let write_err = |source| HarnessError::Write {
        path: tmp.clone(),
        source,
    };
    let mut file = File::create(&tmp).map_err(write_err)?;
    serde_json::to_writer_pretty(&mut file, sidecar)?;
    file.write_all(b"\n").map_err(write_err)?;
    drop(file);
    std::fs::rename(&tmp, path).map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}
