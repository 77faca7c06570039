use rand::Rng;

use super::check_move;
use crate::error::{invalid, Result};
use crate::fft::cyclic_correlate;
use crate::link::{circulant_apply, LinkObservation};
use crate::posterior::Hypothesis;
use crate::scalar::{log_sum_exp, norm_sq, Real};
use crate::seed::rng_from_seed;

/// Posterior ratio of an anchor against its relocations within one swap group.
#[derive(Debug, Clone, PartialEq)]
pub struct JRatio<R> {
    /// `H_i·e^{E(i)} / Σ_{k∈K(H)} e^{E(k)}`.
    pub j: R,
    pub log_abs_j: R,
    /// `ln|H_i| + E(i)`.
    pub log_nominator: R,
    /// `ln Σ_{k∈K(H)} e^{E(k)}`.
    pub log_denominator: R,
    /// Largest noise term `c_k = √snr·H_i·⟨Z, X̄ᵏ⟩` over `K(H)`.
    pub c_kstar: R,
    pub kstar: usize,
    /// `|K(H)|`.
    pub group_size: usize,
}

/// Evaluates `J(H)` for `anchor` over the positions `k_set`, which must hold
/// `i` and otherwise only empty positions of the anchor.
///
/// With `R₀ = Y − √snr·x·(H − I(H_i, i))` every exponent is
/// `E(k) = −½(‖R₀‖² − 2√snr·H_i·⟨R₀, X̄ᵏ⟩ + snr·H_i²·r[0])`,
/// so one cyclic correlation covers the whole group.
pub fn j_ratio<R: Real>(
    obs: &LinkObservation<R>,
    anchor: &Hypothesis<R>,
    i: usize,
    k_set: &[usize],
) -> Result<JRatio<R>> {
    let kc = obs.kc();
    if !k_set.contains(&i) {
        return Err(invalid(format!("K(H) must contain the pivot {i}")));
    }
    let mut hi = R::zero();
    for &k in k_set {
        hi = check_move(anchor, kc, i, k)?;
    }

    let amp = obs.snr.sqrt();
    let mut rest = anchor.dense(kc);
    rest[i] = R::zero();
    let fit = circulant_apply(&obs.signal, &rest)?;
    let r0: Vec<R> = obs.received.iter().zip(&fit).map(|(&y, &f)| y - amp * f).collect();
    let base = norm_sq(&r0);
    let x = obs.signal.samples();
    let proj = cyclic_correlate(&r0, x);
    let noise_proj = cyclic_correlate(&obs.noise, x);
    let energy = obs.snr * hi * hi * obs.signal.energy();
    let two = R::lit(2.0);
    let half = R::lit(0.5);

    let exponent = |k: usize| -half * (base - two * amp * hi * proj[k] + energy);
    let exponents: Vec<R> = k_set.iter().map(|&k| exponent(k)).collect();
    let log_denominator = log_sum_exp(&exponents);
    let log_nominator = hi.abs().ln() + exponent(i);
    let log_abs_j = log_nominator - log_denominator;

    let (kstar, c_kstar) = k_set
        .iter()
        .map(|&k| (k, amp * hi * noise_proj[k]))
        .fold((i, R::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });

    Ok(JRatio {
        j: hi.signum() * log_abs_j.exp(),
        log_abs_j,
        log_nominator,
        log_denominator,
        c_kstar,
        kstar,
        group_size: k_set.len(),
    })
}

/// Draws `K(H)` without enumerating a partition: the pivot plus each empty
/// position independently with probability `1/L`, which reproduces the mean
/// group size `1 + (K_c − L)/L` of a balanced partition.
pub fn sample_k_set<R: Real>(kc: usize, anchor: &Hypothesis<R>, i: usize, seed: u64) -> Result<Vec<usize>> {
    check_move(anchor, kc, i, i)?;
    let p = 1.0 / anchor.l() as f64;
    let mut rng = rng_from_seed(seed);
    let mut k_set = vec![i];
    k_set.extend((0..kc).filter(|&k| anchor.gain_at(k).is_none() && rng.random_bool(p)));
    Ok(k_set)
}

/// Exponent of the large-bandwidth bound on `J(H)`:
/// `3B₁²·K_c·snr/L − √(K_c·snr/L)·√(2 ln(K_c/L))`.
pub fn exp_bound_exponent(kc: usize, l: usize, snr: f64, b1: f64) -> f64 {
    let ratio = kc as f64 / l as f64;
    let s = ratio * snr;
    3.0 * b1 * b1 * s - s.sqrt() * (2.0 * ratio.ln()).sqrt()
}
