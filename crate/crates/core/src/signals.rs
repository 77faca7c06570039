//! Spreading signals: generation, cyclic shifts and empirical autocorrelation.
//!
//! A signal is one coherence period of `K_c` real samples with average
//! per-sample energy one. Shifts are cyclic: `shift(X, i)[n] = X[(n − i) mod K_c]`,
//! and the inner product of two shifts only depends on their lag,
//! `⟨shift(X, i), shift(X, j)⟩ = r[(j − i) mod K_c]`.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::fft;
use crate::scalar::{norm_sq, Real};
use crate::seed::rng_from_seed;

/// Default spreading constant: ±1 sequences pass with high probability at
/// desk-scale lengths.
pub const DEFAULT_B4: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// IID ±1 chips.
    IidBinary,
    /// IID standard normal samples.
    IidGaussian,
    /// Pulse position modulation: one pulse of amplitude `√frame` per frame.
    Ppm { frame: usize },
    /// Samples supplied by the caller.
    Custom,
}

impl SignalKind {
    /// Declared energy slack ε in `‖X‖² ≤ (1+ε)·K_c`, where the generator can
    /// guarantee one. The Gaussian generator only meets the bound in
    /// probability.
    pub fn energy_slack(&self) -> Option<f64> {
        match self {
            SignalKind::IidBinary | SignalKind::Ppm { .. } => Some(0.0),
            SignalKind::IidGaussian | SignalKind::Custom => None,
        }
    }

    /// Checks that this kind can produce a signal of length `kc`.
    pub fn admits(&self, kc: usize) -> Result<()> {
        if kc < 2 {
            return Err(invalid(format!("K_c must be at least 2, got {kc}")));
        }
        if let SignalKind::Ppm { frame } = *self {
            if frame == 0 || kc % frame != 0 {
                return Err(invalid(format!(
                    "PPM frame length {frame} does not divide K_c = {kc}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSignal<R> {
    samples: Vec<R>,
    kind: SignalKind,
}

impl<R: Real> SpreadSignal<R> {
    /// Wraps caller-provided samples.
    pub fn from_samples(samples: Vec<R>) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("signal must have at least one sample"));
        }
        Ok(Self {
            samples,
            kind: SignalKind::Custom,
        })
    }

    pub fn samples(&self) -> &[R] {
        &self.samples
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn kc(&self) -> usize {
        self.samples.len()
    }

    pub fn energy(&self) -> R {
        norm_sq(&self.samples)
    }

    /// `out[n] = X[(n − i) mod K_c]` for any integer `i`.
    pub fn cyclic_shift(&self, i: i64) -> Vec<R> {
        let kc = self.kc();
        let shift = i.rem_euclid(kc as i64) as usize;
        (0..kc)
            .map(|n| self.samples[(n + kc - shift) % kc])
            .collect()
    }

    /// `r[l] = ⟨X̄⁰, X̄ˡ⟩` for `l = 0..K_c`.
    ///
    /// Lengths above [`fft::FAST_PATH_THRESHOLD`] go through the transform.
    pub fn empirical_autocorr(&self) -> Vec<R> {
        if self.kc() > fft::FAST_PATH_THRESHOLD {
            fft::cyclic_correlate(&self.samples, &self.samples)
        } else {
            self.autocorr_direct()
        }
    }

    /// O(K_c²) reference for [`Self::empirical_autocorr`].
    pub fn autocorr_direct(&self) -> Vec<R> {
        fft::cyclic_correlate_direct(&self.samples, &self.samples)
    }

    /// Spreading check `max_{l≠0} |r[l]| ≤ B₄·√K_c`.
    pub fn check_spreading(&self, b4: R) -> Result<SpreadingCheck<R>> {
        if !(b4 > R::zero()) {
            return Err(invalid("B4 must be positive"));
        }
        let r = self.empirical_autocorr();
        let bound = b4 * R::from_count(self.kc()).sqrt();
        let mut offending = Vec::new();
        let mut max_offpeak = R::zero();
        for (lag, &v) in r.iter().enumerate().skip(1) {
            max_offpeak = max_offpeak.max(v.abs());
            if v.abs() > bound {
                offending.push(lag);
            }
        }
        Ok(SpreadingCheck {
            passed: offending.is_empty(),
            offending_lags: offending,
            max_offpeak,
            bound,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingCheck<R> {
    pub passed: bool,
    pub offending_lags: Vec<usize>,
    pub max_offpeak: R,
    pub bound: R,
}

/// Generates a signal of `kc` samples, deterministic in `seed`.
pub fn gen_signal<R: Real>(kind: SignalKind, kc: usize, seed: u64) -> Result<SpreadSignal<R>> {
    kind.admits(kc)?;
    let mut rng = rng_from_seed(seed);
    let samples = match kind {
        SignalKind::IidBinary => (0..kc)
            .map(|_| if rng.random::<bool>() { R::one() } else { -R::one() })
            .collect(),
        SignalKind::IidGaussian => (0..kc).map(|_| R::standard_normal(&mut rng)).collect(),
        SignalKind::Ppm { frame } => {
            let amp = R::from_count(frame).sqrt();
            let mut s = vec![R::zero(); kc];
            for start in (0..kc).step_by(frame) {
                s[start + rng.random_range(0..frame)] = amp;
            }
            s
        }
        SignalKind::Custom => {
            return Err(invalid("custom signals are built with SpreadSignal::from_samples"))
        }
    };
    Ok(SpreadSignal { samples, kind })
}
