use rayon::prelude::*;

use super::exact::{enumeration_count, exact_posterior_with_budget, EXACT_BUDGET};
use super::mcmc::{McmcConfig, McmcSampler};
use super::{Hypothesis, PosteriorMode};
use crate::channel::{sample_channel, GainModel};
use crate::error::{invalid, Result};
use crate::link::{circulant_apply, transmit_with_noise};
use crate::rate::MmseCurve;
use crate::scalar::{norm_sq, Real};
use crate::seed::{derive_seed, rng_from_seed};
use crate::signals::SpreadSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct MmseOptions {
    pub l: usize,
    pub gain_model: GainModel,
    /// Sampler settings; the seed is replaced per trial and grid point.
    pub mcmc: McmcConfig,
    /// Exact enumeration is used whenever the hypothesis count fits.
    pub exact_budget: f64,
    /// Extra sampling rounds granted when chains disagree.
    pub max_extensions: usize,
    pub parallel: bool,
}

impl MmseOptions {
    pub fn new(l: usize) -> Self {
        Self {
            l,
            gain_model: GainModel::Rademacher,
            mcmc: McmcConfig::default(),
            exact_budget: EXACT_BUDGET,
            max_extensions: 2,
            parallel: true,
        }
    }

    pub fn mode(&self, kc: usize) -> PosteriorMode {
        if enumeration_count(kc, self.l, self.gain_model) <= self.exact_budget {
            PosteriorMode::Exact
        } else {
            PosteriorMode::Mcmc
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmseCurveEstimate<R> {
    pub curve: MmseCurve<R>,
    /// `per_trial[t][g]`: squared error of trial `t` at grid point `g`.
    pub per_trial: Vec<Vec<R>>,
    pub mode: PosteriorMode,
    /// Posteriors whose chains still disagreed after every extension.
    pub unconverged: usize,
}

struct TrialOutcome<R> {
    errors: Vec<R>,
    unconverged: usize,
}

/// One trial: a fresh `(H̃, Z)` shared by every grid point. MCMC chains at
/// grid point `g` start where the chains of point `g − 1` ended.
fn run_trial<R: Real>(
    x: &SpreadSignal<R>,
    grid: &[R],
    trial: u64,
    seed: u64,
    opts: &MmseOptions,
) -> Result<TrialOutcome<R>> {
    let kc = x.kc();
    let h = sample_channel::<R>(kc, opts.l, opts.gain_model, derive_seed(seed, &[trial, 0]))?;
    let mut rng = rng_from_seed(derive_seed(seed, &[trial, 1]));
    let noise: Vec<R> = (0..kc).map(|_| R::standard_normal(&mut rng)).collect();
    let truth = h.dense();
    let mode = opts.mode(kc);

    let mut warm: Option<Vec<Hypothesis<R>>> = None;
    let mut unconverged = 0;
    let mut errors = Vec::with_capacity(grid.len());
    for (g, &snr) in grid.iter().enumerate() {
        let obs = transmit_with_noise(x, &h, snr, noise.clone())?;
        let hhat = match mode {
            PosteriorMode::Exact => {
                exact_posterior_with_budget(&obs.received, x, snr, opts.l, opts.gain_model, opts.exact_budget)?
                    .hhat
            }
            PosteriorMode::Mcmc => {
                let cfg = McmcConfig {
                    seed: derive_seed(seed, &[trial, 2, g as u64]),
                    ..opts.mcmc.clone()
                };
                let mut sampler = match &warm {
                    Some(states) => {
                        McmcSampler::warm(&obs.received, x, snr, opts.l, opts.gain_model, &cfg, states)?
                    }
                    None => McmcSampler::new(&obs.received, x, snr, opts.l, opts.gain_model, &cfg)?,
                };
                sampler.extend(cfg.samples);
                let mut rounds = 0;
                while !sampler.converged() && rounds < opts.max_extensions {
                    sampler.extend(cfg.samples);
                    rounds += 1;
                }
                if !sampler.converged() {
                    unconverged += 1;
                }
                warm = Some(sampler.states());
                sampler.summary().hhat
            }
        };
        let diff: Vec<R> = truth.iter().zip(&hhat).map(|(&a, &b)| a - b).collect();
        errors.push(norm_sq(&circulant_apply(x, &diff)?));
    }
    Ok(TrialOutcome { errors, unconverged })
}

fn run_trials<R: Real>(
    x: &SpreadSignal<R>,
    grid: &[R],
    trials: usize,
    seed: u64,
    opts: &MmseOptions,
) -> Result<(Vec<Vec<R>>, usize)> {
    if trials < 1 {
        return Err(invalid("need at least one trial"));
    }
    if grid.is_empty() || grid.iter().any(|s| !(*s >= R::zero())) {
        return Err(invalid("snr grid must be nonempty and nonnegative"));
    }
    let outcomes: Vec<TrialOutcome<R>> = if opts.parallel {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| run_trial(x, grid, t, seed, opts))
            .collect::<Result<_>>()?
    } else {
        (0..trials as u64)
            .map(|t| run_trial(x, grid, t, seed, opts))
            .collect::<Result<_>>()?
    };
    let unconverged = outcomes.iter().map(|o| o.unconverged).sum();
    Ok((outcomes.into_iter().map(|o| o.errors).collect(), unconverged))
}

/// Sample mean and standard error; the error is zero for a single sample.
pub(crate) fn mean_stderr<R: Real>(values: impl ExactSizeIterator<Item = R> + Clone) -> (R, R) {
    let n = values.len();
    let mean = values.clone().sum::<R>() / R::from_count(n);
    if n < 2 {
        return (mean, R::zero());
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<R>() / R::from_count(n - 1);
    (mean, (var / R::from_count(n)).sqrt())
}

/// Monte Carlo mmse curve `E‖x·H̃ − x·Ĥ(Y; snr)‖²` over `grid` (which must
/// start at 0), with common random numbers across grid points.
pub fn mmse_curve<R: Real>(
    x: &SpreadSignal<R>,
    grid: &[R],
    trials: usize,
    seed: u64,
    opts: &MmseOptions,
) -> Result<MmseCurveEstimate<R>> {
    let (per_trial, unconverged) = run_trials(x, grid, trials, seed, opts)?;
    let (values, stderrs) = (0..grid.len())
        .map(|g| mean_stderr(per_trial.iter().map(|row| row[g])))
        .unzip();
    Ok(MmseCurveEstimate {
        curve: MmseCurve::new(grid.to_vec(), values, stderrs)?,
        per_trial,
        mode: opts.mode(x.kc()),
        unconverged,
    })
}

/// Monte Carlo mmse at a single snr: `(estimate, standard error)`.
///
/// Cold-started MCMC chains anneal during burn-in, so a lone high-snr point
/// does not rely on warm starts.
pub fn mmse_at<R: Real>(
    x: &SpreadSignal<R>,
    snr: R,
    trials: usize,
    seed: u64,
    opts: &MmseOptions,
) -> Result<(R, R)> {
    let (per_trial, _) = run_trials(x, &[snr], trials, seed, opts)?;
    Ok(mean_stderr(per_trial.iter().map(|row| row[0])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{gen_signal, SignalKind};

    #[test]
    fn zero_snr_mmse_is_kc() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, 16, 1).unwrap();
        let (m, se) = mmse_at(&x, 0.0, 2000, 3, &MmseOptions::new(2)).unwrap();
        assert!((m - 16.0).abs() <= 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn high_snr_mmse_is_small() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, 16, 1).unwrap();
        let (m, _) = mmse_at(&x, 1e3, 200, 4, &MmseOptions::new(1)).unwrap();
        assert!(m <= 0.05 * 16.0, "{m}");
    }

    #[test]
    fn mmse_is_monotone_in_snr() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, 16, 2).unwrap();
        let grid = [0.0, 0.5, 1.0, 2.0, 4.0];
        let est = mmse_curve(&x, &grid, 1000, 5, &MmseOptions::new(2)).unwrap();
        let v = &est.curve.values;
        let se = &est.curve.stderrs;
        for g in 1..grid.len() {
            let pooled = (se[g] * se[g] + se[g - 1] * se[g - 1]).sqrt();
            assert!(v[g] <= v[g - 1] + 3.0 * pooled, "{v:?}");
        }
        assert!(v[4] < v[0]);
    }

    #[test]
    fn orthogonality_principle() {
        // E⟨xH̃ − xĤ, xĤ⟩ = 0 for the conditional mean
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, 16, 7).unwrap();
        let snr = 1.0;
        let trials = 4000u64;
        let vals: Vec<f64> = (0..trials)
            .map(|t| {
                let h = sample_channel::<f64>(16, 2, GainModel::Rademacher, 10 * t).unwrap();
                let obs = crate::link::transmit(&x, &h, snr, 10 * t + 1).unwrap();
                let post = crate::posterior::exact_posterior(&obs.received, &x, snr, 2, GainModel::Rademacher)
                    .unwrap();
                let est = circulant_apply(&x, &post.hhat).unwrap();
                let err: Vec<f64> = circulant_apply(&x, &h.dense())
                    .unwrap()
                    .iter()
                    .zip(&est)
                    .map(|(a, b)| a - b)
                    .collect();
                crate::scalar::dot(&err, &est)
            })
            .collect();
        let (m, se) = mean_stderr(vals.iter().copied());
        assert!(m.abs() <= 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn mcmc_path_agrees_with_exact_path() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, 16, 3).unwrap();
        let grid = [0.0, 1.0];
        let exact = mmse_curve(&x, &grid, 300, 8, &MmseOptions::new(2)).unwrap();
        let mut opts = MmseOptions::new(2);
        opts.exact_budget = 0.0;
        let sampled = mmse_curve(&x, &grid, 300, 8, &opts).unwrap();
        assert_eq!(sampled.mode, PosteriorMode::Mcmc);
        for g in 0..2 {
            // identical (H̃, Z) per trial: compare trial by trial
            let gap = exact
                .per_trial
                .iter()
                .zip(&sampled.per_trial)
                .map(|(a, b)| (a[g] - b[g]).abs())
                .sum::<f64>()
                / 300.0;
            assert!(gap < 0.05 * 16.0, "grid {g}: mean |Δ| {gap}");
        }
    }

    #[test]
    fn results_do_not_depend_on_threading() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, 32, 3).unwrap();
        let mut opts = MmseOptions::new(3);
        opts.exact_budget = 0.0;
        opts.mcmc.samples = 300;
        let a = mmse_curve(&x, &[0.0, 0.5], 8, 1, &opts).unwrap();
        opts.parallel = false;
        let b = mmse_curve(&x, &[0.0, 0.5], 8, 1, &opts).unwrap();
        assert_eq!(a, b);
    }
}
