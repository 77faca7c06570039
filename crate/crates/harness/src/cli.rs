use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use spreadlab::prooflab::{run_battery, BatteryConfig};
use spreadlab::{gen_signal, mmse_at, MmseOptions, Signal, SignalKind};

use crate::config::{parse_gain_model, SweepConfig};
use crate::error::{HarnessError, Result};
use crate::{selftest, sweep};

#[derive(Debug, Parser)]
#[command(name = "spreadlab", version, about = "Spreading signals over sparse multipath channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every cell of a sweep config, writing CSV rows and a JSON sidecar.
    Sweep {
        /// Flat `key = value` config file.
        config: PathBuf,
    },
    /// Monte Carlo mmse of one (K_c, L, snr) point with iid binary chips.
    Mmse {
        #[arg(long)]
        kc: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        snr: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "rademacher")]
        gain_model: String,
    },
    /// Proof-term diagnostics at snr = rho·threshold.
    Prooflab {
        #[arg(long)]
        kc: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fast identity checks.
    Selftest,
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 1 for invalid input, 2 when a run fails.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let shown = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{shown}");
                    0
                }
                _ => {
                    let _ = write!(err, "{shown}");
                    1
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io(e: std::io::Error) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Sweep { config } => {
            let config = SweepConfig::load(&config)?;
            let outcome = sweep::run_sweep(&config)?;
            for cell in &outcome.cells {
                match (&cell.record, &cell.error) {
                    (Some(r), _) => writeln!(
                        out,
                        "cell {:>3}  K_c={:<5} L={:<3} rho={:<6} I={:.4}±{:.4}  ratio={:.4}±{:.4}  cap={:.3}",
                        cell.index,
                        r.kc,
                        r.l,
                        r.rho,
                        r.i_cond_nats,
                        r.i_cond_stderr,
                        r.penalty_ratio,
                        r.penalty_stderr,
                        r.entropy_cap_nats
                    ),
                    (None, err) => writeln!(
                        out,
                        "cell {:>3}  K_c={:<5} L={:<3} rho={:<6} failed: {}",
                        cell.index,
                        cell.kc,
                        cell.l,
                        cell.rho,
                        err.as_deref().unwrap_or("unknown")
                    ),
                }
                .map_err(io)?;
            }
            writeln!(
                out,
                "wrote {} rows to {} and {}",
                outcome.records().len(),
                config.output.display(),
                config.sidecar_path().display()
            )
            .map_err(io)?;
            Ok(if outcome.failures().next().is_some() { 2 } else { 0 })
        }
        Command::Mmse {
            kc,
            l,
            snr,
            trials,
            seed,
            gain_model,
        } => {
            let gain_model = parse_gain_model(&gain_model).map_err(|m| HarnessError::Core(spreadlab::Error::InvalidParameter(m)))?;
            if !(snr >= 0.0 && snr.is_finite()) {
                return Err(spreadlab::Error::InvalidParameter(format!("snr must be finite and nonnegative, got {snr}")).into());
            }
            let x: Signal = gen_signal(SignalKind::IidBinary, kc, spreadlab::seed::derive_seed(seed, &[0]))?;
            let opts = MmseOptions {
                gain_model,
                ..MmseOptions::new(l)
            };
            let (m, se) = mmse_at(&x, snr, trials, spreadlab::seed::derive_seed(seed, &[1]), &opts)?;
            let mode = format!("{:?}", opts.mode(kc)).to_lowercase();
            writeln!(out, "kc={kc} l={l} snr={snr} trials={trials} posterior={mode} mmse={m} stderr={se}").map_err(io)?;
            Ok(0)
        }
        Command::Prooflab {
            kc,
            l,
            rho,
            trials,
            seed,
        } => {
            let report = run_battery(&BatteryConfig::new(kc, l, rho, trials, seed))?;
            let lines = [
                ("kc", kc.to_string()),
                ("l", l.to_string()),
                ("rho", rho.to_string()),
                ("snr", report.snr.to_string()),
                ("trials_used", report.trials.len().to_string()),
                ("trials_skipped", report.skipped.to_string()),
                ("max_decomposition_error", report.max_decomposition_error.to_string()),
                ("a_bound_pass_fraction", report.a_bound_pass_fraction.to_string()),
                ("mean_cond7_fraction", report.mean_cond7_fraction.to_string()),
                ("mean_c_kstar_ratio", report.mean_c_kstar_ratio.to_string()),
                ("median_log_j", report.median_log_j.to_string()),
                ("exp_bound_exponent", report.exp_bound_exponent.to_string()),
            ];
            for (k, v) in lines {
                writeln!(out, "{k:<24} {v}").map_err(io)?;
            }
            Ok(0)
        }
        Command::Selftest => {
            let failures = selftest::run(out).map_err(io)?;
            Ok(if failures == 0 { 0 } else { 2 })
        }
    }
}
