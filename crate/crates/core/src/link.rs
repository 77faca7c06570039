//! Received-signal synthesis over one coherence period.
//!
//! The convolution with the channel is taken cyclically, so the channel acts
//! through the circulant matrix `x` whose k-th column is the shift `X̄ᵏ`:
//! `Y = √snr·x·H̃ + Z`.

use crate::channel::ChannelRealization;
use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::scalar::Real;
use crate::seed::rng_from_seed;
use crate::signals::SpreadSignal;

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `x·v`, the cyclic convolution of the signal with `v`.
pub fn circulant_apply<R: Real>(x: &SpreadSignal<R>, v: &[R]) -> Result<Vec<R>> {
    check_len(x.kc(), v.len())?;
    Ok(if x.kc() > fft::FAST_PATH_THRESHOLD {
        fft::cyclic_convolve(x.samples(), v)
    } else {
        fft::cyclic_convolve_direct(x.samples(), v)
    })
}

/// Reference O(K_c²) evaluation of [`circulant_apply`].
pub fn circulant_apply_direct<R: Real>(x: &SpreadSignal<R>, v: &[R]) -> Result<Vec<R>> {
    check_len(x.kc(), v.len())?;
    Ok(fft::cyclic_convolve_direct(x.samples(), v))
}

/// `x·v` for a vector given by its nonzero entries; O(K_c·nnz).
pub fn apply_sparse<R: Real>(
    x: &[R],
    taps: impl IntoIterator<Item = (usize, R)>,
) -> Vec<R> {
    let kc = x.len();
    let mut out = vec![R::zero(); kc];
    for (k, g) in taps {
        add_shifted(&mut out, x, k, g);
    }
    out
}

/// `out += g·X̄ᵏ`.
#[inline]
pub(crate) fn add_shifted<R: Real>(out: &mut [R], x: &[R], k: usize, g: R) {
    let kc = x.len();
    // X̄ᵏ[n] = X[n − k]: the tail of X lands first
    let (head, tail) = out.split_at_mut(k);
    for (o, &v) in head.iter_mut().zip(&x[kc - k..]) {
        *o = *o + g * v;
    }
    for (o, &v) in tail.iter_mut().zip(&x[..kc - k]) {
        *o = *o + g * v;
    }
}

/// `⟨v, X̄ᵏ⟩`.
#[inline]
pub(crate) fn dot_shifted<R: Real>(v: &[R], x: &[R], k: usize) -> R {
    let kc = x.len();
    let (head, tail) = v.split_at(k);
    let a = head
        .iter()
        .zip(&x[kc - k..])
        .fold(R::zero(), |acc, (&p, &q)| acc + p * q);
    tail.iter()
        .zip(&x[..kc - k])
        .fold(a, |acc, (&p, &q)| acc + p * q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkObservation<R> {
    pub signal: SpreadSignal<R>,
    pub channel: ChannelRealization<R>,
    pub snr: R,
    pub noise: Vec<R>,
    pub received: Vec<R>,
}

impl<R: Real> LinkObservation<R> {
    pub fn kc(&self) -> usize {
        self.signal.kc()
    }

    /// Noise-free part `x·H̃` (without the `√snr` factor).
    pub fn clean(&self) -> Vec<R> {
        apply_sparse(self.signal.samples(), self.channel.taps())
    }
}

/// Draws IID standard normal noise from `noise_seed` and forms `Y`.
pub fn transmit<R: Real>(
    signal: &SpreadSignal<R>,
    channel: &ChannelRealization<R>,
    snr: R,
    noise_seed: u64,
) -> Result<LinkObservation<R>> {
    let mut rng = rng_from_seed(noise_seed);
    let noise = (0..signal.kc()).map(|_| R::standard_normal(&mut rng)).collect();
    transmit_with_noise(signal, channel, snr, noise)
}

/// Forms `Y = √snr·x·H̃ + Z` for a caller-supplied `Z`.
pub fn transmit_with_noise<R: Real>(
    signal: &SpreadSignal<R>,
    channel: &ChannelRealization<R>,
    snr: R,
    noise: Vec<R>,
) -> Result<LinkObservation<R>> {
    if !(snr >= R::zero()) {
        return Err(invalid("snr must be nonnegative"));
    }
    check_len(signal.kc(), channel.kc())?;
    check_len(signal.kc(), noise.len())?;
    let amp = snr.sqrt();
    let mut received = noise.clone();
    for (k, g) in channel.taps() {
        add_shifted(&mut received, signal.samples(), k, amp * g);
    }
    Ok(LinkObservation {
        signal: signal.clone(),
        channel: channel.clone(),
        snr,
        noise,
        received,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, GainModel};
    use crate::scalar::norm_sq;
    use crate::signals::{gen_signal, SignalKind};

    fn unit(kc: usize, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; kc];
        v[k] = 1.0;
        v
    }

    #[test]
    fn unit_vectors_extract_columns() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidGaussian, 12, 4).unwrap();
        assert_eq!(circulant_apply(&x, &unit(12, 0)).unwrap(), x.samples());
        for k in 0..12 {
            let col = circulant_apply(&x, &unit(12, k)).unwrap();
            for (a, b) in col.iter().zip(x.cyclic_shift(k as i64)) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!((norm_sq(&col) - x.energy()).abs() < 1e-9);
        }
        assert!(circulant_apply(&x, &[1.0; 3]).is_err());
    }

    #[test]
    fn fast_path_matches_direct_sum() {
        for kc in [64usize, 600, 1024] {
            let x: SpreadSignal<f64> = gen_signal(SignalKind::IidGaussian, kc, kc as u64).unwrap();
            let v: SpreadSignal<f64> = gen_signal(SignalKind::IidGaussian, kc, 99).unwrap();
            let fast = circulant_apply(&x, v.samples()).unwrap();
            let direct = circulant_apply_direct(&x, v.samples()).unwrap();
            let scale = norm_sq(&direct).sqrt();
            for (a, b) in fast.iter().zip(&direct) {
                assert!((a - b).abs() <= 1e-8 * scale);
            }
            let sparse = apply_sparse(x.samples(), v.samples().iter().copied().enumerate());
            for (a, b) in sparse.iter().zip(&direct) {
                assert!((a - b).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn zero_snr_passes_noise_through() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, 32, 1).unwrap();
        let h = sample_channel(32, 4, GainModel::Rademacher, 2).unwrap();
        let obs = transmit(&x, &h, 0.0, 3).unwrap();
        assert_eq!(obs.received, obs.noise);
        assert!(transmit(&x, &h, -1.0, 3).is_err());
    }

    #[test]
    fn noiseless_single_tap_scales_signal() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, 16, 1).unwrap();
        let h = ChannelRealization::from_taps(16, &[(0, 1.0)], GainModel::Rademacher).unwrap();
        let obs = transmit_with_noise(&x, &h, 4.0, vec![0.0; 16]).unwrap();
        let expect: Vec<f64> = x.samples().iter().map(|v| 2.0 * v).collect();
        assert_eq!(obs.received, expect);
    }

    #[test]
    fn received_energy_matches_expectation() {
        let kc = 256;
        let snr = 2.0;
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, kc, 8).unwrap();
        let trials = 1000;
        let mean: f64 = (0..trials)
            .map(|t| {
                let h = sample_channel(kc, 16, GainModel::Rademacher, 10_000 + t).unwrap();
                norm_sq(&transmit(&x, &h, snr, t).unwrap().received)
            })
            .sum::<f64>()
            / trials as f64;
        let expect = kc as f64 * (1.0 + snr * x.energy() / kc as f64);
        assert!((mean / expect - 1.0).abs() < 0.02, "{mean} vs {expect}");
    }

    #[test]
    fn transmit_is_linear_in_the_channel() {
        let kc = 40;
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidGaussian, kc, 5).unwrap();
        let a = ChannelRealization::from_taps(kc, &[(1, 0.3), (7, -0.2)], GainModel::Rademacher).unwrap();
        let b = ChannelRealization::from_taps(kc, &[(7, 0.5), (30, 1.1)], GainModel::Rademacher).unwrap();
        let sum = ChannelRealization::from_taps(kc, &[(1, 0.3), (7, 0.3), (30, 1.1)], GainModel::Rademacher)
            .unwrap();
        let z = vec![0.0; kc];
        let ya = transmit_with_noise(&x, &a, 3.0, z.clone()).unwrap().received;
        let yb = transmit_with_noise(&x, &b, 3.0, z.clone()).unwrap().received;
        let ys = transmit_with_noise(&x, &sum, 3.0, z).unwrap().received;
        for i in 0..kc {
            assert!((ya[i] + yb[i] - ys[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_helpers_match_explicit_shifts() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidGaussian, 9, 2).unwrap();
        let v: SpreadSignal<f64> = gen_signal(SignalKind::IidGaussian, 9, 3).unwrap();
        for k in 0..9 {
            let shifted = x.cyclic_shift(k as i64);
            let d = dot_shifted(v.samples(), x.samples(), k);
            assert!((d - crate::scalar::dot(v.samples(), &shifted)).abs() < 1e-12);
        }
    }
}
