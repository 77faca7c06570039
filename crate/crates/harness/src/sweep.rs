use std::time::Instant;

use spreadlab::posterior::MmseCurveEstimate;
use spreadlab::rate::{summarize_penalty, trapezoid_weights};
use spreadlab::seed::derive_seed;
use spreadlab::{
    channel_entropy_nats, gen_signal, mmse_curve, snr_grid, threshold_snr, McmcConfig, MmseOptions, Signal,
};

use crate::config::SweepConfig;
use crate::error::{HarnessError, Result};
use crate::record::{write_sidecar, CellReport, CsvSink, CurveSummary, Sidecar, SweepRecord};

pub const SEED_SCHEME: &str = "splitmix64 path hashing: cell = derive(root, [cell index]); \
signal = derive(cell, [0]); trials = derive(cell, [1]); channel, noise and MCMC seeds of \
trial t at grid point g = derive(trials, [t, 0]), derive(trials, [t, 1]), derive(trials, [t, 2, g])";

/// Seed of cell `index`; depends on nothing but the root seed and the index.
pub fn cell_seed(root: u64, index: usize) -> u64 {
    derive_seed(root, &[index as u64])
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Integrates each trial's error curve on its own, so the standard error of
/// the penalty reflects the common random numbers shared along the grid.
fn integrate_per_trial(estimate: &MmseCurveEstimate<f64>, target: f64) -> Result<(f64, f64)> {
    let weights = trapezoid_weights(&estimate.curve.snr_grid, target)?;
    let per_trial: Vec<f64> = estimate
        .per_trial
        .iter()
        .map(|row| 0.5 * row.iter().zip(&weights).map(|(e, w)| e * w).sum::<f64>())
        .collect();
    Ok(mean_stderr(&per_trial))
}

/// Runs cell `index` of `config` in isolation.
pub fn run_cell(config: &SweepConfig, index: usize) -> CellReport {
    let cells = config.cells();
    let (kc, l, rho) = cells[index];
    let seed = cell_seed(config.seed, index);
    let mut report = CellReport {
        index,
        kc,
        l,
        rho,
        seed,
        posterior: None,
        unconverged_posteriors: 0,
        curve: None,
        record: None,
        error: None,
    };
    if let Err(e) = fill_cell(config, &mut report) {
        report.error = Some(e.to_string());
    }
    report
}

fn fill_cell(config: &SweepConfig, report: &mut CellReport) -> Result<()> {
    let started = Instant::now();
    let (kc, l, rho, seed) = (report.kc, report.l, report.rho, report.seed);
    let threshold = threshold_snr(kc, l)?;
    let target = rho * threshold;
    let grid = snr_grid(target, config.snr_grid_points)?;
    let x: Signal = gen_signal(config.signal_kind, kc, derive_seed(seed, &[0]))?;
    let opts = MmseOptions {
        gain_model: config.gain_model,
        mcmc: McmcConfig {
            chains: config.chains,
            samples: config.mcmc_samples,
            ..McmcConfig::default()
        },
        ..MmseOptions::new(l)
    };
    let estimate = mmse_curve(&x, &grid, config.trials, derive_seed(seed, &[1]), &opts)?;
    report.posterior = Some(format!("{:?}", estimate.mode).to_lowercase());
    report.unconverged_posteriors = estimate.unconverged;
    report.curve = Some(CurveSummary {
        snr_grid: estimate.curve.snr_grid.clone(),
        mmse: estimate.curve.values.clone(),
        mmse_stderr: estimate.curve.stderrs.clone(),
    });

    let (i_raw, i_se) = integrate_per_trial(&estimate, target)?;
    let cap = channel_entropy_nats(kc, l, config.gain_model)?;
    let rates = summarize_penalty(i_raw, i_se, target, kc, cap, estimate.curve.values[0] / kc as f64);
    let record = SweepRecord {
        kc,
        l,
        rho,
        snr: target,
        i_cond_nats: rates.i_cond_raw_nats,
        i_cond_stderr: rates.i_cond_stderr,
        penalty_ratio: rates.penalty_ratio,
        penalty_stderr: rates.penalty_stderr,
        rate_upper_nats: rates.rate_upper_nats,
        entropy_cap_nats: cap,
        threshold_snr: threshold,
        wall_time_s: if config.record_wall_time {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        },
        seed,
    };
    if !record.is_finite() {
        return Err(HarnessError::Runtime(format!("non-finite record {record:?}")));
    }
    report.record = Some(record);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub cells: Vec<CellReport>,
}

impl SweepOutcome {
    /// Records of the cells that finished, in cell order.
    pub fn records(&self) -> Vec<SweepRecord> {
        self.cells.iter().filter_map(|c| c.record.clone()).collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellReport> {
        self.cells.iter().filter(|c| c.error.is_some())
    }
}

/// Runs every cell in order. The CSV gains a row and the sidecar is
/// rewritten after each cell, so an interrupted sweep loses at most the cell
/// in flight. Failed cells are reported in the sidecar only.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config
        .validate()
        .map_err(|message| HarnessError::Config {
            path: config.output.clone(),
            message,
        })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    pool.install(|| {
        let mut sink = CsvSink::create(&config.output)?;
        let mut sidecar = Sidecar {
            tool: "spreadlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed_scheme: SEED_SCHEME.into(),
            config: config.to_text(),
            cells: Vec::new(),
        };
        for index in 0..config.cells().len() {
            let cell = run_cell(config, index);
            if let Some(record) = &cell.record {
                sink.push(record)?;
            }
            sidecar.cells.push(cell);
            write_sidecar(&config.sidecar_path(), &sidecar)?;
        }
        Ok(SweepOutcome { cells: sidecar.cells })
    })
}
