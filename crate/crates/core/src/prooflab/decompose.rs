use super::check_move;
use crate::error::{Error, Result};
use crate::link::{circulant_apply, dot_shifted, LinkObservation};
use crate::posterior::Hypothesis;
use crate::scalar::{dot, norm_sq, Real};

/// The exponent `−½‖Y − √snr·x·H^{i→k}‖²` split into eight lines.
///
/// With `D = H^{i→k} − I(H_i, k)` (the anchor without its tap at `i`) and
/// `E = I(H_i, k)` (the moved tap alone):
///
/// | term | value |
/// |------|-------|
/// | t1 | `−½‖Y‖²` |
/// | t2 | `−½‖√snr·xD‖²` |
/// | t3 | `−½‖√snr·xE‖²` |
/// | t4 | `−⟨√snr·xD, √snr·xE⟩` |
/// | t5 | `⟨√snr·xH̃, √snr·xD⟩` |
/// | t6 | `⟨√snr·xH̃, √snr·xE⟩` |
/// | t7 | `⟨Z, √snr·xD⟩` |
/// | t8 | `⟨Z, √snr·xE⟩` |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentDecomposition<R> {
    pub terms: [R; 8],
    pub total: R,
}

fn validate<R: Real>(obs: &LinkObservation<R>, h: &Hypothesis<R>) -> Result<()> {
    if let Some(&j) = h.support().iter().find(|&&j| j >= obs.kc()) {
        return Err(Error::DimensionMismatch {
            expected: obs.kc(),
            got: j + 1,
        });
    }
    Ok(())
}

/// Evaluates every line literally from dense vectors.
pub fn decompose_exponent<R: Real>(
    obs: &LinkObservation<R>,
    h: &Hypothesis<R>,
    i: usize,
    k: usize,
) -> Result<ExponentDecomposition<R>> {
    validate(obs, h)?;
    let kc = obs.kc();
    let hi = check_move(h, kc, i, k)?;
    let amp = obs.snr.sqrt();
    let scaled = |v: Vec<R>| -> Vec<R> { v.into_iter().map(|e| amp * e).collect() };

    let mut rest = h.dense(kc);
    rest[i] = R::zero();
    let mut moved = vec![R::zero(); kc];
    moved[k] = hi;

    let xd = scaled(circulant_apply(&obs.signal, &rest)?);
    let xe = scaled(circulant_apply(&obs.signal, &moved)?);
    let xh = scaled(circulant_apply(&obs.signal, &obs.channel.dense())?);
    let half = R::lit(0.5);
    let terms = [
        -half * norm_sq(&obs.received),
        -half * norm_sq(&xd),
        -half * norm_sq(&xe),
        -dot(&xd, &xe),
        dot(&xh, &xd),
        dot(&xh, &xe),
        dot(&obs.noise, &xd),
        dot(&obs.noise, &xe),
    ];
    Ok(ExponentDecomposition {
        terms,
        total: terms.iter().copied().sum(),
    })
}

/// `−½‖Y − √snr·x·H^{i→k}‖²` evaluated as a single quadratic form.
pub fn direct_exponent<R: Real>(
    obs: &LinkObservation<R>,
    h: &Hypothesis<R>,
    i: usize,
    k: usize,
) -> Result<R> {
    validate(obs, h)?;
    check_move(h, obs.kc(), i, k)?;
    let moved = h.relocate(i, k)?;
    let fit = circulant_apply(&obs.signal, &moved.dense(obs.kc()))?;
    let amp = obs.snr.sqrt();
    let r2: R = obs
        .received
        .iter()
        .zip(&fit)
        .map(|(&y, &f)| (y - amp * f) * (y - amp * f))
        .sum();
    Ok(-R::lit(0.5) * r2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcTerms<R> {
    /// Cross-talk between the moved tap and the rest of the anchor (t4).
    pub a: R,
    /// Match between the moved tap and the true channel (t6).
    pub b: R,
    /// Noise picked up by the moved tap (t8).
    pub c: R,
}

/// `a_k`, `b_k`, `c_k` from autocorrelation sums:
///
/// * `a_k = −snr·H_i·Σ_{j≠k} D_j ⟨X̄ʲ, X̄ᵏ⟩`
/// * `b_k = snr·H_i·Σ_j H̃_j ⟨X̄ʲ, X̄ᵏ⟩`
/// * `c_k = √snr·H_i·⟨Z, X̄ᵏ⟩`
pub fn ab_c_terms<R: Real>(
    obs: &LinkObservation<R>,
    h: &Hypothesis<R>,
    i: usize,
    k: usize,
) -> Result<AbcTerms<R>> {
    validate(obs, h)?;
    let kc = obs.kc();
    let hi = check_move(h, kc, i, k)?;
    let r = obs.signal.empirical_autocorr();
    let lag = |j: usize| r[(k + kc - j) % kc];
    let snr = obs.snr;
    let a = -snr
        * hi
        * h.taps()
            .filter(|&(j, _)| j != i)
            .fold(R::zero(), |acc, (j, g)| acc + g * lag(j));
    let b = snr * hi * obs.channel.taps().fold(R::zero(), |acc, (j, g)| acc + g * lag(j));
    let c = snr.sqrt() * hi * dot_shifted(&obs.noise, obs.signal.samples(), k);
    Ok(AbcTerms { a, b, c })
}
