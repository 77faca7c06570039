use rand::Rng;
use rayon::prelude::*;

use super::{ab_c_terms, decompose_exponent, direct_exponent, exp_bound_exponent, j_ratio, order_stat_mean, sample_k_set};
use crate::channel::{check_condition7, sample_channel, GainModel, DEFAULT_B3};
use crate::error::{invalid, Result};
use crate::link::transmit;
use crate::posterior::Hypothesis;
use crate::rate::threshold_snr;
use crate::seed::{derive_seed, rng_from_seed};
use crate::signals::{gen_signal, SignalKind};

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryConfig {
    pub kc: usize,
    pub l: usize,
    /// `snr = rho·threshold_snr(K_c, L)`.
    pub rho: f64,
    pub trials: usize,
    pub seed: u64,
    pub b3: f64,
    pub signal_kind: SignalKind,
    pub gain_model: GainModel,
}

impl BatteryConfig {
    pub fn new(kc: usize, l: usize, rho: f64, trials: usize, seed: u64) -> Self {
        BatteryConfig {
            kc,
            l,
            rho,
            trials,
            seed,
            b3: DEFAULT_B3,
            signal_kind: SignalKind::IidBinary,
            gain_model: GainModel::Rademacher,
        }
    }

    pub fn snr(&self) -> Result<f64> {
        Ok(self.rho * threshold_snr(self.kc, self.l)?)
    }
}

/// One trial of the battery: the true channel is the anchor and the pivot is
/// a random tap of it that keeps its interference sum
/// within `B₃·√K_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDiagnostics {
    pub pivot: usize,
    pub decomposition_error: f64,
    pub a_pivot: f64,
    pub a_bound: f64,
    pub b_pivot: f64,
    pub cond7_fraction: f64,
    pub c_kstar: f64,
    pub c_kstar_expected: f64,
    pub log_abs_j: f64,
    pub group_size: usize,
}

impl TrialDiagnostics {
    pub fn a_within_bound(&self) -> bool {
        self.a_pivot.abs() <= self.a_bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryReport {
    pub config: BatteryConfig,
    pub snr: f64,
    pub trials: Vec<TrialDiagnostics>,
    /// Trials whose channel had no tap within the interference bound.
    pub skipped: usize,
    pub max_decomposition_error: f64,
    pub a_bound_pass_fraction: f64,
    pub mean_cond7_fraction: f64,
    /// Mean of `c_{k*}` over its order-statistics prediction.
    pub mean_c_kstar_ratio: f64,
    pub median_log_j: f64,
    pub exp_bound_exponent: f64,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    values.sum::<f64>() / n as f64
}

fn run_trial(cfg: &BatteryConfig, snr: f64, t: u64) -> Result<Option<TrialDiagnostics>> {
    let (kc, l) = (cfg.kc, cfg.l);
    let x = gen_signal::<f64>(cfg.signal_kind, kc, derive_seed(cfg.seed, &[t, 0]))?;
    let h = sample_channel::<f64>(kc, l, cfg.gain_model, derive_seed(cfg.seed, &[t, 1]))?;
    let obs = transmit(&x, &h, snr, derive_seed(cfg.seed, &[t, 2]))?;

    let passing = check_condition7(&x, &h, cfg.b3)?;
    let candidates: Vec<usize> = h.support().iter().copied().filter(|i| passing.contains(i)).collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[t, 3]));
    let pivot = candidates[rng.random_range(0..candidates.len())];

    let anchor = Hypothesis::from(&h);
    let k_set = sample_k_set(kc, &anchor, pivot, derive_seed(cfg.seed, &[t, 4]))?;
    let probe = k_set[rng.random_range(0..k_set.len())];
    let split = decompose_exponent(&obs, &anchor, pivot, probe)?;
    let direct = direct_exponent(&obs, &anchor, pivot, probe)?;
    let abc = ab_c_terms(&obs, &anchor, pivot, pivot)?;
    let jr = j_ratio(&obs, &anchor, pivot, &k_set)?;

    let b1 = cfg.gain_model.magnitude_bounds().1;
    let hi = anchor.gain_at(pivot).unwrap_or_default();
    let sigma = (hi * hi * snr * x.energy()).sqrt();
    Ok(Some(TrialDiagnostics {
        pivot,
        decomposition_error: (split.total - direct).abs(),
        a_pivot: abc.a,
        a_bound: b1 * cfg.b3 * snr * (kc as f64 / l as f64).sqrt(),
        b_pivot: abc.b,
        cond7_fraction: passing.len() as f64 / kc as f64,
        c_kstar: jr.c_kstar,
        c_kstar_expected: if sigma > 0.0 {
            order_stat_mean(jr.group_size.max(2), sigma)?
        } else {
            0.0
        },
        log_abs_j: jr.log_abs_j,
        group_size: jr.group_size,
    }))
}

/// Runs the prooflab diagnostics over independent `(X, H̃, Z)` draws.
pub fn run_battery(cfg: &BatteryConfig) -> Result<BatteryReport> {
    if cfg.trials == 0 {
        return Err(invalid("battery needs at least one trial"));
    }
    if !(cfg.rho >= 0.0 && cfg.rho.is_finite()) {
        return Err(invalid(format!("rho must be finite and nonnegative, got {}", cfg.rho)));
    }
    if cfg.l == 0 || cfg.l >= cfg.kc {
        return Err(invalid(format!("need 1 ≤ L < K_c, got L = {}, K_c = {}", cfg.l, cfg.kc)));
    }
    let snr = cfg.snr()?;
    let outcomes = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, snr, t))
        .collect::<Result<Vec<_>>>()?;
    let skipped = outcomes.iter().filter(|o| o.is_none()).count();
    let trials: Vec<TrialDiagnostics> = outcomes.into_iter().flatten().collect();

    let max_decomposition_error = trials.iter().map(|d| d.decomposition_error).fold(0.0, f64::max);
    let a_bound_pass_fraction = if trials.is_empty() {
        f64::NAN
    } else {
        trials.iter().filter(|d| d.a_within_bound()).count() as f64 / trials.len() as f64
    };
    let mean_cond7_fraction = mean(trials.iter().map(|d| d.cond7_fraction));
    let ratios: Vec<f64> = trials
        .iter()
        .filter(|d| d.c_kstar_expected > 0.0)
        .map(|d| d.c_kstar / d.c_kstar_expected)
        .collect();
    let mean_c_kstar_ratio = mean(ratios.into_iter());
    let mut log_j: Vec<f64> = trials.iter().map(|d| d.log_abs_j).collect();
    let median_log_j = median(&mut log_j);
    let b1 = cfg.gain_model.magnitude_bounds().1;

    Ok(BatteryReport {
        config: cfg.clone(),
        snr,
        skipped,
        max_decomposition_error,
        a_bound_pass_fraction,
        mean_cond7_fraction,
        mean_c_kstar_ratio,
        median_log_j,
        exp_bound_exponent: exp_bound_exponent(cfg.kc, cfg.l, snr, b1),
        trials,
    })
}
