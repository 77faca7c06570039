use itertools::Itertools;

use super::{GainAlphabet, Hypothesis, Likelihood, PosteriorMode, PosteriorSummary};
use crate::channel::{ln_binomial, GainModel};
use crate::error::{invalid, Error, Result};
use crate::link::apply_sparse;
use crate::scalar::{normalize_log_weights, Real};
use crate::signals::SpreadSignal;

/// Largest hypothesis count enumerated by [`exact_posterior`].
pub const EXACT_BUDGET: f64 = 1e7;

/// Weight vectors are kept only up to this many hypotheses.
pub const WEIGHT_RETENTION_LIMIT: usize = 1 << 16;

/// `C(K_c, L)·|A|^L`, as a float since it overflows quickly.
pub fn enumeration_count(kc: usize, l: usize, gain_model: GainModel) -> f64 {
    (ln_binomial(kc, l) + l as f64 * (gain_model.alphabet_size() as f64).ln()).exp()
}

fn check_shape(kc: usize, l: usize) -> Result<()> {
    if l < 1 || l > kc {
        return Err(invalid(format!("need 1 ≤ L ≤ K_c, got L = {l}, K_c = {kc}")));
    }
    Ok(())
}

/// Calls `visit(support, gains)` for every hypothesis: supports in
/// lexicographic order, gain tuples in odometer order with the first tap
/// slowest.
fn for_each_hypothesis<R: Real>(
    kc: usize,
    l: usize,
    alphabet: &GainAlphabet<R>,
    mut visit: impl FnMut(&[usize], &[R]),
) {
    let a = alphabet.len();
    let mut digits = vec![0usize; l];
    let mut gains = vec![alphabet.values()[0]; l];
    for support in (0..kc).combinations(l) {
        digits.iter_mut().for_each(|d| *d = 0);
        loop {
            for (g, &d) in gains.iter_mut().zip(&digits) {
                *g = alphabet.values()[d];
            }
            visit(&support, &gains);
            // odometer increment, last slot fastest
            let mut pos = l;
            let wrapped = loop {
                if pos == 0 {
                    break true;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < a {
                    break false;
                }
                digits[pos] = 0;
            };
            if wrapped {
                break;
            }
        }
    }
}

/// All hypotheses in enumeration order (the order of
/// [`PosteriorSummary::weights`]).
pub fn hypotheses<R: Real>(kc: usize, l: usize, gain_model: GainModel) -> Result<Vec<Hypothesis<R>>> {
    check_shape(kc, l)?;
    let count = enumeration_count(kc, l, gain_model);
    if count > EXACT_BUDGET {
        return Err(Error::EnumerationBudget {
            count,
            budget: EXACT_BUDGET,
        });
    }
    let alphabet = GainAlphabet::for_model(gain_model, l);
    let mut out = Vec::with_capacity(count.round() as usize);
    for_each_hypothesis(kc, l, &alphabet, |s, g| {
        out.push(Hypothesis {
            support: s.to_vec(),
            gains: g.to_vec(),
        })
    });
    Ok(out)
}

/// Exact posterior mean by enumerating every hypothesis.
///
/// Weights are accumulated in the log domain with a running maximum, so the
/// exponentially different likelihoods never under- or overflow. `L = K_c`
/// is accepted (a fully occupied support), which lets the scalar channel
/// `K_c = L = 1` be handled by the same code.
pub fn exact_posterior<R: Real>(
    y: &[R],
    x: &SpreadSignal<R>,
    snr: R,
    l: usize,
    gain_model: GainModel,
) -> Result<PosteriorSummary<R>> {
    exact_posterior_with_budget(y, x, snr, l, gain_model, EXACT_BUDGET)
}

pub fn exact_posterior_with_budget<R: Real>(
    y: &[R],
    x: &SpreadSignal<R>,
    snr: R,
    l: usize,
    gain_model: GainModel,
    budget: f64,
) -> Result<PosteriorSummary<R>> {
    let kc = x.kc();
    check_shape(kc, l)?;
    let count = enumeration_count(kc, l, gain_model);
    if count > budget {
        return Err(Error::EnumerationBudget { count, budget });
    }
    let lik = Likelihood::new(y, x, snr)?;
    let alphabet = GainAlphabet::for_model(gain_model, l);
    let keep = count.round() as usize <= WEIGHT_RETENTION_LIMIT;

    let mut max_ll = R::neg_infinity();
    let mut mass = R::zero();
    let mut acc = vec![R::zero(); kc];
    let mut log_weights = Vec::new();
    let mut n = 0usize;
    for_each_hypothesis(kc, l, &alphabet, |support, gains| {
        let ll = lik.log_likelihood(support, gains);
        n += 1;
        if keep {
            log_weights.push(ll);
        }
        if ll > max_ll {
            let rescale = (max_ll - ll).exp();
            mass = mass * rescale;
            acc.iter_mut().for_each(|v| *v = *v * rescale);
            max_ll = ll;
        }
        let w = (ll - max_ll).exp();
        mass = mass + w;
        for (&j, &g) in support.iter().zip(gains) {
            acc[j] = acc[j] + w * g;
        }
    });

    let hhat = acc.into_iter().map(|v| v / mass).collect();
    let half_kc_log_2pi = R::from_count(kc) * R::lit(0.5) * (R::lit(2.0) * R::PI()).ln();
    let log_evidence = max_ll + mass.ln() - R::from_count(n).ln() - half_kc_log_2pi;
    Ok(PosteriorSummary {
        hhat,
        mode: PosteriorMode::Exact,
        log_evidence: Some(log_evidence),
        weights: keep.then(|| normalize_log_weights(&log_weights)),
        ess: None,
        acceptance_rate: None,
        chain_gap: None,
        samples: n,
    })
}

/// `E‖x·H − x·Ĥ(Y)‖²` at one snr by deterministic integration, for
/// `K_c = 1` only: the expectation over `H` is an exact sum over the prior and
/// the expectation over `Z` a trapezoid rule on `[−12, 12]` with `nodes`
/// points (spectrally accurate for Gaussian integrands).
pub fn expected_mmse_quadrature<R: Real>(
    x: &SpreadSignal<R>,
    snr: R,
    l: usize,
    gain_model: GainModel,
    nodes: usize,
) -> Result<R> {
    if x.kc() != 1 {
        return Err(invalid("quadrature mmse is only available for K_c = 1"));
    }
    if nodes < 3 {
        return Err(invalid("need at least 3 quadrature nodes"));
    }
    let prior = hypotheses::<R>(1, l, gain_model)?;
    let p = R::from_count(prior.len()).recip();
    let half_width = R::lit(12.0);
    let step = R::lit(2.0) * half_width / R::from_count(nodes - 1);
    let norm = (R::lit(2.0) * R::PI()).sqrt().recip();
    let amp = snr.sqrt();
    let mut total = R::zero();
    for h in &prior {
        let clean = apply_sparse(x.samples(), h.taps());
        for node in 0..nodes {
            let z = -half_width + step * R::from_count(node);
            let weight = norm * (-R::lit(0.5) * z * z).exp() * step;
            let y = [amp * clean[0] + z];
            let post = exact_posterior(&y, x, snr, l, gain_model)?;
            let est = apply_sparse(x.samples(), post.hhat.iter().copied().enumerate());
            let err = clean[0] - est[0];
            total = total + p * weight * err * err;
        }
    }
    Ok(total)
}
