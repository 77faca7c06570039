//! Acceptance suite. Each criterion prints one `[PASS]` or `[FAIL]` line;
//! the process exits nonzero if any fails.

use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use spreadlab::posterior::expected_mmse_quadrature;
use spreadlab::prooflab::{
    build_swap_partition, decompose_exponent, direct_exponent, order_stat_mean, order_stat_var, run_battery,
    BatteryConfig, BatteryReport,
};
use spreadlab::rate::trapezoid;
use spreadlab::seed::{derive_seed, rng_from_seed};
use spreadlab::{
    exact_posterior, gen_signal, mcmc_posterior, mmse_at, sample_channel, transmit, GainModel, Hypothesis,
    McmcConfig, MmseOptions, Signal, SignalKind, SpreadSignal,
};
use spreadlab_harness::{run_sweep, SweepConfig, SweepRecord};

type Check = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `u ↦ ln cosh u` without overflow.
fn ln_cosh(u: f64) -> f64 {
    u.abs() + (-2.0 * u.abs()).exp().ln_1p() - std::f64::consts::LN_2
}

/// `s − E ln cosh(s + √s·Z)` by trapezoid on a wide normal grid.
fn binary_mi(s: f64) -> f64 {
    let (n, half) = (4001, 12.0);
    let step = 2.0 * half / (n - 1) as f64;
    let norm = (2.0 * std::f64::consts::PI).sqrt().recip();
    let e: f64 = (0..n)
        .map(|j| {
            let z = -half + step * j as f64;
            norm * (-0.5 * z * z).exp() * step * ln_cosh(s + s.sqrt() * z)
        })
        .sum();
    s - e
}

fn criterion1() -> Check {
    let x = SpreadSignal::<f64>::from_samples(vec![1.0]).map_err(err)?;
    let h = 0.005;
    let grid: Vec<f64> = (0..=800).map(|j| j as f64 * h).collect();
    let mmse = grid
        .par_iter()
        .map(|&s| expected_mmse_quadrature(&x, s, 1, GainModel::Rademacher, 401))
        .collect::<spreadlab::Result<Vec<f64>>>()
        .map_err(err)?;
    let mut worst: f64 = 0.0;
    for s in [0.25, 1.0, 4.0] {
        let i = 0.5 * trapezoid(&grid, &mmse, s).map_err(err)?;
        worst = worst.max((i - binary_mi(s)).abs());
    }
    verdict(worst <= 1e-3, format!("max |I-MMSE − direct MI| = {worst:.2e} nats"))
}

fn criterion2() -> Check {
    let mut worst: f64 = 0.0;
    for instance in 0..3u64 {
        let seed = derive_seed(2, &[instance]);
        let x: Signal = gen_signal(SignalKind::IidBinary, 16, derive_seed(seed, &[0])).map_err(err)?;
        let h = sample_channel(16, 2, GainModel::Rademacher, derive_seed(seed, &[1])).map_err(err)?;
        let obs = transmit(&x, &h, 1.0, derive_seed(seed, &[2])).map_err(err)?;
        let exact = exact_posterior(&obs.received, &x, 1.0, 2, GainModel::Rademacher).map_err(err)?;
        let cfg = McmcConfig {
            samples: 25_000,
            seed: derive_seed(seed, &[3]),
            ..McmcConfig::default()
        };
        let mcmc = mcmc_posterior(&obs.received, &x, 1.0, 2, GainModel::Rademacher, &cfg).map_err(err)?;
        let gap = exact.hhat.iter().zip(&mcmc.hhat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    verdict(worst <= 0.02, format!("sup |Ĥ_mcmc − Ĥ_exact| = {worst:.4} over 3 instances, 4×25000 samples"))
}

fn criterion3() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (kc, l) in [(16, 2), (64, 8)] {
        let x: Signal = gen_signal(SignalKind::IidBinary, kc, derive_seed(3, &[kc as u64, 0])).map_err(err)?;
        let (m, se) = mmse_at(&x, 0.0, 400, derive_seed(3, &[kc as u64, 1]), &MmseOptions::new(l)).map_err(err)?;
        ok &= (m - kc as f64).abs() <= 3.0 * se;
        parts.push(format!("K_c={kc}: {m:.2}±{se:.2}"));
    }
    verdict(ok, format!("mmse(0) {}", parts.join(", ")))
}

fn criterion4() -> Check {
    let worst = (0..1000u64)
        .into_par_iter()
        .map(|t| -> spreadlab::Result<f64> {
            let seed = derive_seed(4, &[t]);
            let x: Signal = gen_signal(SignalKind::IidBinary, 32, derive_seed(seed, &[0]))?;
            let h = sample_channel(32, 3, GainModel::Rademacher, derive_seed(seed, &[1]))?;
            let snr = 0.05 + (t % 20) as f64 * 0.25;
            let obs = transmit(&x, &h, snr, derive_seed(seed, &[2]))?;
            let anchor = Hypothesis::from(&h);
            let i = h.support()[(t % 3) as usize];
            let k = (0..32).map(|j| (t as usize + j) % 32).find(|k| !h.support().contains(k)).unwrap();
            let split = decompose_exponent(&obs, &anchor, i, k)?;
            Ok((split.total - direct_exponent(&obs, &anchor, i, k)?).abs())
        })
        .collect::<spreadlab::Result<Vec<f64>>>()
        .map_err(err)?
        .into_iter()
        .fold(0.0, f64::max);
    verdict(worst <= 1e-9, format!("max |Σt − direct| = {worst:.2e} over 1000 instances"))
}

fn criterion5() -> Check {
    let m = 10_000usize;
    let maxima: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(5, &[r]));
            (0..m).map(|_| StandardNormal.sample(&mut rng)).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let n = maxima.len() as f64;
    let mean = maxima.iter().sum::<f64>() / n;
    let var = maxima.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let (pm, pv) = (order_stat_mean(m, 1.0).map_err(err)?, order_stat_var(m, 1.0).map_err(err)?);
    let rel = (var - pv).abs() / pv;
    verdict(
        (mean - pm).abs() <= 0.05 && rel <= 0.25,
        format!("mean {mean:.4} vs {pm:.4}, variance {var:.4} vs {pv:.4} ({:.0}% off)", 100.0 * rel),
    )
}

fn criterion6(report: &BatteryReport) -> Check {
    verdict(
        report.a_bound_pass_fraction >= 0.99,
        format!(
            "|a_i| within bound in {:.0}% of {} trials ({} skipped)",
            100.0 * report.a_bound_pass_fraction,
            report.trials.len(),
            report.skipped
        ),
    )
}

fn pooled(a: &SweepRecord, b: &SweepRecord) -> f64 {
    (a.penalty_stderr.powi(2) + b.penalty_stderr.powi(2)).sqrt()
}

fn cell(records: &[SweepRecord], kc: usize, rho: f64) -> Result<&SweepRecord, String> {
    records
        .iter()
        .find(|r| r.kc == kc && r.rho == rho)
        .ok_or_else(|| format!("sweep cell K_c={kc}, rho={rho} missing"))
}

fn criterion7(records: &[SweepRecord]) -> Check {
    let row: Vec<&SweepRecord> = [64, 128, 256].iter().map(|&k| cell(records, k, 0.1)).collect::<Result<_, _>>()?;
    let monotone = row.windows(2).all(|w| w[1].penalty_ratio >= w[0].penalty_ratio - 3.0 * pooled(w[0], w[1]));
    let shown: Vec<String> = row
        .iter()
        .map(|r| format!("{}:{:.3}±{:.3}", r.kc, r.penalty_ratio, r.penalty_stderr))
        .collect();
    verdict(monotone && row[2].penalty_ratio >= 0.7, format!("ratio at rho=0.1 {}", shown.join(" ")))
}

fn criterion8(records: &[SweepRecord]) -> Check {
    let (lo, hi) = (cell(records, 256, 0.1)?, cell(records, 256, 10.0)?);
    let gap = lo.penalty_ratio - hi.penalty_ratio;
    verdict(
        gap >= 3.0 * pooled(lo, hi),
        format!("K_c=256 ratio(0.1) − ratio(10) = {gap:.3}, {:.1} pooled stderr", gap / pooled(lo, hi)),
    )
}

fn criterion9(records: &[SweepRecord]) -> Check {
    let excess = records
        .iter()
        .map(|r| (r.i_cond_nats - r.entropy_cap_nats) / r.i_cond_stderr.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        !records.is_empty() && excess <= 3.0,
        format!("largest (I − cap)/stderr over {} cells = {excess:.2}", records.len()),
    )
}

fn criterion10() -> Check {
    let mut balanced = 0;
    for pivot in 0..12 {
        let p = build_swap_partition(12, 2, pivot, derive_seed(10, &[pivot as u64])).map_err(err)?;
        let mut seen = std::collections::BTreeSet::new();
        for g in &p.groups {
            if g.members.first() != Some(&g.anchor) || g.members.len() != g.k_set.len() {
                return Err(format!("pivot {pivot}: malformed group"));
            }
            if !g.anchor.contains(&pivot) {
                return Err(format!("pivot {pivot}: anchor {:?} has no tap at the pivot", g.anchor));
            }
            for (member, &k) in g.members.iter().zip(&g.k_set) {
                let mut moved: Vec<usize> = g.anchor.iter().map(|&j| if j == pivot { k } else { j }).collect();
                moved.sort_unstable();
                if &moved != member || !seen.insert(member.clone()) {
                    return Err(format!("pivot {pivot}: groups overlap or members are not swaps"));
                }
            }
        }
        if seen.len() != 66 || seen.iter().any(|s| s.len() != 2 || s[0] >= s[1] || s[1] >= 12) {
            return Err(format!("pivot {pivot}: {} supports covered, expected all 66", seen.len()));
        }
        balanced += p.balanced as usize;
    }
    Ok(format!("12 pivots, each an exact disjoint cover of 66 supports, {balanced} balanced"))
}

fn criterion11(small: &BatteryReport, large: &BatteryReport) -> Check {
    verdict(
        large.median_log_j < small.median_log_j,
        format!(
            "median log J: K_c=256 {:.3} ({} trials), K_c=1024 {:.3} ({} trials)",
            small.median_log_j,
            small.trials.len(),
            large.median_log_j,
            large.trials.len()
        ),
    )
}

fn sweep() -> Result<Vec<SweepRecord>, String> {
    let dir = std::env::temp_dir().join(format!("spreadlab-acceptance-{}", std::process::id()));
    let text = format!(
        "kc_grid = 64, 128, 256\nl_alpha = 0.5\nrho_list = 0.1, 10\ntrials = 120\nseed = 7\nsnr_grid_points = 12\noutput = {}\n",
        dir.join("sweep.csv").display()
    );
    let config = SweepConfig::parse(&text)?;
    let outcome = run_sweep(&config).map_err(err)?;
    let _ = std::fs::remove_dir_all(&dir);
    if let Some(failed) = outcome.failures().next() {
        return Err(format!("cell {} failed: {:?}", failed.index, failed.error));
    }
    Ok(outcome.records())
}

fn report(n: usize, name: &str, started: Instant, check: Check) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let (tag, detail, ok) = match check {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("[{tag}] criterion {n}: {name}: {detail} ({secs:.1} s)");
    ok
}

fn main() {
    // `cargo test -- --list` and filters from the libtest driver are ignored
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut ok = true;
    let timed = |f: &dyn Fn() -> Check| (Instant::now(), f());

    let (t, c) = timed(&criterion1);
    ok &= report(1, "I-MMSE on the scalar binary channel", t, c);
    let (t, c) = timed(&criterion2);
    ok &= report(2, "MCMC matches exact posterior", t, c);
    let (t, c) = timed(&criterion3);
    ok &= report(3, "mmse at zero snr equals K_c", t, c);
    let (t, c) = timed(&criterion4);
    ok &= report(4, "exponent decomposition", t, c);
    let (t, c) = timed(&criterion5);
    ok &= report(5, "Gaussian maximum order statistics", t, c);

    let t = Instant::now();
    let large = run_battery(&BatteryConfig::new(1024, 32, 0.1, 100, 6));
    ok &= report(6, "a-term bound", t, large.as_ref().map_err(err).and_then(criterion6));

    let t = Instant::now();
    let records = sweep();
    let shared = |f: fn(&[SweepRecord]) -> Check| records.as_ref().map_err(Clone::clone).and_then(|r| f(r));
    ok &= report(7, "penalty ratio trend below threshold", t, shared(criterion7));
    ok &= report(8, "regime separation", t, shared(criterion8));
    ok &= report(9, "entropy cap", t, shared(criterion9));

    let (t, c) = timed(&criterion10);
    ok &= report(10, "swap partition", t, c);

    let t = Instant::now();
    let small = run_battery(&BatteryConfig::new(256, 16, 0.1, 100, 11));
    let c = match (&small, &large) {
        (Ok(s), Ok(l)) => criterion11(s, l),
        (Err(e), _) | (_, Err(e)) => Err(err(e)),
    };
    ok &= report(11, "J-ratio trend", t, c);

    if !ok {
        std::process::exit(1);
    }
}
