//! Fast identity checks runnable from the command line.

use std::io::Write;

use spreadlab::channel::channel_entropy_nats;
use spreadlab::posterior::exact_posterior;
use spreadlab::prooflab::{
    build_swap_partition, j_ratio, order_stat_mean, order_stat_var, run_battery, sample_k_set, BatteryConfig,
};
use spreadlab::rate::threshold_from_ratio;
use spreadlab::signals::DEFAULT_B4;
use spreadlab::{
    gen_signal, mmse_at, sample_channel, transmit, transmit_with_noise, Channel, GainModel, Hypothesis, MmseOptions,
    Signal, SignalKind,
};

type Check = fn() -> Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn core<T>(r: spreadlab::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn zero_snr_mmse() -> Result<(), String> {
    let x: Signal = core(gen_signal(SignalKind::IidBinary, 16, 1))?;
    let (m, se) = core(mmse_at(&x, 0.0, 400, 2, &MmseOptions::new(2)))?;
    ensure((m - 16.0).abs() <= 3.0 * se, || format!("mmse(0) = {m} ± {se}, expected 16"))
}

fn scalar_posterior_is_tanh() -> Result<(), String> {
    let x = core(Signal::from_samples(vec![1.0]))?;
    for (y, snr) in [(0.3, 1.0), (-1.2, 2.5), (2.0, 0.1)] {
        let post = core(exact_posterior(&[y], &x, snr, 1, GainModel::Rademacher))?;
        let want = (f64::sqrt(snr) * y).tanh();
        ensure((post.hhat[0] - want).abs() < 1e-12, || format!("Ĥ = {} vs tanh = {want}", post.hhat[0]))?;
    }
    Ok(())
}

fn silent_link_is_noise() -> Result<(), String> {
    let x: Signal = core(gen_signal(SignalKind::IidBinary, 32, 3))?;
    let h: Channel = core(sample_channel(32, 4, GainModel::Rademacher, 4))?;
    let obs = core(transmit(&x, &h, 0.0, 5))?;
    ensure(obs.received == obs.noise, || "Y ≠ Z at snr 0".into())?;
    let quiet = core(transmit_with_noise(&x, &h, 1.0, vec![0.0; 32]))?;
    ensure(quiet.received == quiet.clean(), || "Y ≠ xH̃ without noise".into())
}

fn binary_signals_spread() -> Result<(), String> {
    let x: Signal = core(gen_signal(SignalKind::IidBinary, 256, 6))?;
    let check = core(x.check_spreading(DEFAULT_B4))?;
    ensure(check.passed, || format!("off-peak {} > {}", check.max_offpeak, check.bound))
}

fn entropy_and_threshold() -> Result<(), String> {
    let h = core(channel_entropy_nats(4, 1, GainModel::Rademacher))?;
    ensure((h - 8f64.ln()).abs() < 1e-12, || format!("H(4, 1) = {h}"))?;
    let t = threshold_from_ratio(std::f64::consts::E);
    ensure((t - (-1f64).exp()).abs() < 1e-15, || format!("threshold(e) = {t}"))
}

fn exponent_decomposition() -> Result<(), String> {
    let report = core(run_battery(&BatteryConfig::new(32, 3, 1.0, 50, 8)))?;
    ensure(report.max_decomposition_error < 1e-9, || {
        format!("decomposition error {}", report.max_decomposition_error)
    })
}

fn order_statistics() -> Result<(), String> {
    let a = core(order_stat_mean(1000, 1.0))?;
    let b = core(order_stat_mean(1000, 2.0))?;
    ensure((b - 2.0 * a).abs() < 1e-12, || format!("mean not linear in σ: {a} {b}"))?;
    let (v3, v6) = (core(order_stat_var(1_000, 1.0))?, core(order_stat_var(1_000_000, 1.0))?);
    ensure(v6 < v3, || format!("variance did not shrink: {v3} {v6}"))
}

fn swap_partitions() -> Result<(), String> {
    let single = core(build_swap_partition(4, 1, 0, 1))?;
    ensure(single.groups.len() == 1 && single.groups[0].members.len() == 4, || {
        "K_c = 4, L = 1 should give one group of four".into()
    })?;
    for i in 0..12 {
        let p = core(build_swap_partition(12, 2, i, i as u64))?;
        let mut all: Vec<Vec<usize>> = p.groups.iter().flat_map(|g| g.members.clone()).collect();
        let n = all.len();
        all.sort();
        all.dedup();
        ensure(n == 66 && all.len() == 66, || format!("pivot {i}: {n} members, {} distinct", all.len()))?;
    }
    Ok(())
}

fn uniform_j_at_zero_snr() -> Result<(), String> {
    let x: Signal = core(gen_signal(SignalKind::IidBinary, 64, 9))?;
    let h: Channel = core(sample_channel(64, 4, GainModel::Rademacher, 10))?;
    let obs = core(transmit(&x, &h, 0.0, 11))?;
    let anchor = Hypothesis::from(&h);
    let i = anchor.support()[0];
    let k_set = core(sample_k_set(64, &anchor, i, 12))?;
    let jr = core(j_ratio(&obs, &anchor, i, &k_set))?;
    let want = anchor.gain_at(i).unwrap_or_default() / k_set.len() as f64;
    ensure((jr.j - want).abs() < 1e-12, || format!("J = {} vs {want}", jr.j))
}

pub const CHECKS: [(&str, Check); 10] = [
    ("mmse at zero snr equals K_c", zero_snr_mmse),
    ("scalar posterior mean is tanh", scalar_posterior_is_tanh),
    ("link reduces to noise and to xH", silent_link_is_noise),
    ("binary signals satisfy the spreading bound", binary_signals_spread),
    ("entropy and threshold closed forms", entropy_and_threshold),
    ("eight-term exponent identity", exponent_decomposition),
    ("order statistics scaling", order_statistics),
    ("swap partitions cover every support once", swap_partitions),
    ("J is uniform at zero snr", uniform_j_at_zero_snr),
    ("path rule gives integer square roots", || {
        let rule = spreadlab::PathRule::default();
        ensure(rule.paths(64) == 8 && rule.paths(128) == 12, || "⌈√K_c⌉ off".into())
    }),
];

/// Runs every check, printing one line each; returns the number of failures.
pub fn run(out: &mut dyn Write) -> std::io::Result<usize> {
    let mut failures = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(()) => writeln!(out, "[ok]   {name}")?,
            Err(msg) => {
                failures += 1;
                writeln!(out, "[FAIL] {name}: {msg}")?;
            }
        }
    }
    writeln!(out, "{} of {} checks passed", CHECKS.len() - failures, CHECKS.len())?;
    Ok(failures)
}
