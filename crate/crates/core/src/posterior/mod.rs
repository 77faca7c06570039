//! MMSE channel estimation: `Ĥ = E[H | Y, x]`.
//!
//! The prior is uniform over hypotheses (support × gain alphabet), so the
//! posterior weight of `H` is proportional to `exp(−½‖Y − √snr·x·H‖²)`.
//! Small instances are enumerated exactly; larger ones are sampled with a
//! Metropolis–Hastings walk whose tap move is the `i → k` relocation.

mod exact;
mod mcmc;
mod mmse;

pub use exact::{
    enumeration_count, exact_posterior, exact_posterior_with_budget, expected_mmse_quadrature,
    hypotheses, EXACT_BUDGET, WEIGHT_RETENTION_LIMIT,
};
pub use mcmc::{mcmc_posterior, McmcConfig, McmcSampler};
pub use mmse::{mmse_at, mmse_curve, MmseCurveEstimate, MmseOptions};

use crate::channel::{ChannelRealization, GainModel, GAIN_GRID_POINTS};
use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::scalar::{norm_sq, Real};
use crate::signals::SpreadSignal;

/// A candidate channel: distinct sorted tap positions with their gains.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis<R> {
    support: Vec<usize>,
    gains: Vec<R>,
}

impl<R: Real> Hypothesis<R> {
    pub fn new(taps: &[(usize, R)]) -> Result<Self> {
        let mut taps = taps.to_vec();
        taps.sort_by_key(|t| t.0);
        if taps.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("hypothesis taps must be distinct"));
        }
        Ok(Self {
            support: taps.iter().map(|t| t.0).collect(),
            gains: taps.iter().map(|t| t.1).collect(),
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn gains(&self) -> &[R] {
        &self.gains
    }

    pub fn l(&self) -> usize {
        self.support.len()
    }

    pub fn taps(&self) -> impl Iterator<Item = (usize, R)> + '_ {
        self.support.iter().copied().zip(self.gains.iter().copied())
    }

    pub fn gain_at(&self, pos: usize) -> Option<R> {
        self.support
            .binary_search(&pos)
            .ok()
            .map(|slot| self.gains[slot])
    }

    pub fn dense(&self, kc: usize) -> Vec<R> {
        let mut v = vec![R::zero(); kc];
        for (j, g) in self.taps() {
            v[j] = g;
        }
        v
    }

    pub fn norm_sq(&self) -> R {
        self.gains.iter().map(|&g| g * g).sum()
    }

    /// `H^{i→k}`: the tap at `i` moved to the empty position `k`
    /// (`k = i` returns the hypothesis unchanged).
    pub fn relocate(&self, i: usize, k: usize) -> Result<Self> {
        let g = self
            .gain_at(i)
            .ok_or_else(|| invalid(format!("no tap at position {i}")))?;
        if k == i {
            return Ok(self.clone());
        }
        if self.gain_at(k).is_some() {
            return Err(invalid(format!("position {k} is already occupied")));
        }
        let taps: Vec<(usize, R)> = self
            .taps()
            .map(|(j, h)| if j == i { (k, g) } else { (j, h) })
            .collect();
        Self::new(&taps)
    }
}

impl<R: Real> From<&ChannelRealization<R>> for Hypothesis<R> {
    fn from(h: &ChannelRealization<R>) -> Self {
        Self {
            support: h.support().to_vec(),
            gains: h.gains().to_vec(),
        }
    }
}

/// Gain values a hypothesis may take, all equally likely a priori.
#[derive(Debug, Clone, PartialEq)]
pub struct GainAlphabet<R> {
    values: Vec<R>,
}

impl<R: Real> GainAlphabet<R> {
    /// Rademacher: `{±1/√L}`. Bounded-uniform: both signs times
    /// [`GAIN_GRID_POINTS`] evenly spaced magnitudes on `[B₁, B₂]/√L`,
    /// endpoints included.
    pub fn for_model(model: GainModel, l: usize) -> Self {
        let scale = R::from_count(l).sqrt().recip();
        let values = match model {
            GainModel::Rademacher => vec![-scale, scale],
            GainModel::BoundedUniform => {
                let (lo, hi) = model.magnitude_bounds();
                let step = (hi - lo) / (GAIN_GRID_POINTS - 1) as f64;
                let mags: Vec<R> = (0..GAIN_GRID_POINTS)
                    .map(|m| R::lit(lo + step * m as f64) * scale)
                    .collect();
                mags.iter().rev().map(|&m| -m).chain(mags.iter().copied()).collect()
            }
        };
        Self { values }
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_binary(&self) -> bool {
        self.values.len() == 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorMode {
    Exact,
    Mcmc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary<R> {
    /// Posterior mean `Ĥ`, length `K_c`.
    pub hhat: Vec<R>,
    pub mode: PosteriorMode,
    /// `ln p(Y | x)` including the Gaussian normalization (exact mode).
    pub log_evidence: Option<R>,
    /// Normalized weights in [`hypotheses`] order, kept when the hypothesis
    /// count is at most [`WEIGHT_RETENTION_LIMIT`] (exact mode).
    pub weights: Option<Vec<R>>,
    /// Effective sample size of the log-likelihood trace (MCMC mode).
    pub ess: Option<R>,
    pub acceptance_rate: Option<R>,
    /// Largest per-coordinate gap between chain means (MCMC mode).
    pub chain_gap: Option<R>,
    pub samples: usize,
}

impl<R: Real> PosteriorSummary<R> {
    pub fn hhat_norm(&self) -> R {
        norm_sq(&self.hhat).sqrt()
    }
}

/// Sufficient statistics of `‖Y − √snr·x·H‖²` for sparse `H`.
///
/// With `c[k] = ⟨Y, X̄ᵏ⟩` and the autocorrelation `r`,
/// `‖Y − √snr·xH‖² = ‖Y‖² − 2√snr Σ g_a c[s_a] + snr Σ_ab g_a g_b r[s_b − s_a]`.
#[derive(Debug, Clone)]
pub(crate) struct Likelihood<'a, R> {
    pub x: &'a [R],
    pub y: &'a [R],
    pub snr: R,
    pub amp: R,
    pub autocorr: Vec<R>,
    pub corr: Vec<R>,
    pub y_norm_sq: R,
}

impl<'a, R: Real> Likelihood<'a, R> {
    pub fn new(y: &'a [R], x: &'a SpreadSignal<R>, snr: R) -> Result<Self> {
        if y.len() != x.kc() {
            return Err(Error::DimensionMismatch {
                expected: x.kc(),
                got: y.len(),
            });
        }
        if !(snr >= R::zero()) {
            return Err(invalid("snr must be nonnegative"));
        }
        let corr = if x.kc() > fft::FAST_PATH_THRESHOLD {
            fft::cyclic_correlate(y, x.samples())
        } else {
            fft::cyclic_correlate_direct(y, x.samples())
        };
        Ok(Self {
            x: x.samples(),
            y,
            snr,
            amp: snr.sqrt(),
            autocorr: x.empirical_autocorr(),
            corr,
            y_norm_sq: norm_sq(y),
        })
    }

    pub fn kc(&self) -> usize {
        self.x.len()
    }

    /// `−½‖Y − √snr·x·H‖²`.
    pub fn log_likelihood(&self, support: &[usize], gains: &[R]) -> R {
        let kc = self.kc();
        let mut cross = R::zero();
        let mut quad = R::zero();
        for (a, (&sa, &ga)) in support.iter().zip(gains).enumerate() {
            cross = cross + ga * self.corr[sa];
            quad = quad + ga * ga * self.autocorr[0];
            for (&sb, &gb) in support[a + 1..].iter().zip(&gains[a + 1..]) {
                quad = quad + R::lit(2.0) * ga * gb * self.autocorr[(sb + kc - sa) % kc];
            }
        }
        -R::lit(0.5) * (self.y_norm_sq - R::lit(2.0) * self.amp * cross + self.snr * quad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::apply_sparse;
    use crate::signals::{gen_signal, SignalKind};

    #[test]
    fn likelihood_matches_direct_residual() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidGaussian, 20, 1).unwrap();
        let y: SpreadSignal<f64> = gen_signal(SignalKind::IidGaussian, 20, 2).unwrap();
        let lik = Likelihood::new(y.samples(), &x, 1.7).unwrap();
        let support = [2usize, 5, 19];
        let gains = [0.4, -1.1, 0.25];
        let fitted = apply_sparse(x.samples(), support.iter().copied().zip(gains.iter().copied()));
        let direct: f64 = -0.5
            * y.samples()
                .iter()
                .zip(&fitted)
                .map(|(a, b)| (a - 1.7f64.sqrt() * b).powi(2))
                .sum::<f64>();
        assert!((lik.log_likelihood(&support, &gains) - direct).abs() < 1e-9);
    }

    #[test]
    fn alphabets() {
        let a = GainAlphabet::<f64>::for_model(GainModel::Rademacher, 4);
        assert_eq!(a.values(), &[-0.5, 0.5]);
        let b = GainAlphabet::<f64>::for_model(GainModel::BoundedUniform, 4);
        assert_eq!(b.len(), 18);
        assert!((b.values()[9] - 0.25).abs() < 1e-12);
        let sum: f64 = b.values().iter().sum();
        assert!(sum.abs() < 1e-12);
    }

    #[test]
    fn relocation() {
        let h = Hypothesis::new(&[(3, 0.5), (1, -0.5)]).unwrap();
        assert_eq!(h.support(), &[1, 3]);
        let moved = h.relocate(3, 0).unwrap();
        assert_eq!(moved.support(), &[0, 1]);
        assert_eq!(moved.gain_at(0), Some(0.5));
        assert_eq!(h.relocate(3, 3).unwrap(), h);
        assert!(h.relocate(2, 0).is_err());
        assert!(h.relocate(3, 1).is_err());
    }
}
