//! Sparse block-coherent channels.
//!
//! A realization has `L` nonzero taps out of `K_c`, support uniform over all
//! `C(K_c, L)` subsets, gains IID zero mean with variance `1/L` so that
//! `E‖H̃‖² = 1`.

use rand::seq::index;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::seed::rng_from_seed;
use crate::signals::SpreadSignal;

/// Default bound on interference sums, in units of `√K_c`.
pub const DEFAULT_B3: f64 = 6.0;

/// Magnitude floor of bounded-uniform gains, in units of `1/√L`.
pub const BOUNDED_UNIFORM_B1: f64 = 0.5;

/// Magnitude levels per sign used when bounded-uniform gains are discretized.
pub const GAIN_GRID_POINTS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainModel {
    /// `±1/√L` with equal probability.
    #[default]
    Rademacher,
    /// Random sign times a magnitude uniform on `[B₁, B₂]/√L`, with `B₂`
    /// fixed by `E[gain²] = 1/L`.
    BoundedUniform,
}

impl GainModel {
    /// Magnitude bounds `(B₁, B₂)` in units of `1/√L`.
    pub fn magnitude_bounds(&self) -> (f64, f64) {
        match self {
            GainModel::Rademacher => (1.0, 1.0),
            GainModel::BoundedUniform => (BOUNDED_UNIFORM_B1, bounded_uniform_upper()),
        }
    }

    /// Number of distinct gain values the posterior works with.
    pub fn alphabet_size(&self) -> usize {
        match self {
            GainModel::Rademacher => 2,
            GainModel::BoundedUniform => 2 * GAIN_GRID_POINTS,
        }
    }

    fn draw<R: Real, G: Rng + ?Sized>(&self, l: usize, rng: &mut G) -> R {
        let sign = if rng.random::<bool>() { R::one() } else { -R::one() };
        let scale = R::from_count(l).sqrt().recip();
        match self {
            GainModel::Rademacher => sign * scale,
            GainModel::BoundedUniform => {
                let (lo, hi) = self.magnitude_bounds();
                let u = R::unit(rng);
                sign * scale * (R::lit(lo) + u * R::lit(hi - lo))
            }
        }
    }
}

/// Solves `(b³ − B₁³) / (3(b − B₁)) = 1` for the upper magnitude bound.
pub fn bounded_uniform_upper() -> f64 {
    let b1 = BOUNDED_UNIFORM_B1;
    let f = |b: f64| b * b * b - b1 * b1 * b1 - 3.0 * (b - b1);
    let (mut lo, mut hi) = (1.0, 2.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<R> {
    kc: usize,
    support: Vec<usize>,
    gains: Vec<R>,
    gain_model: GainModel,
}

impl<R: Real> ChannelRealization<R> {
    /// Builds a realization from explicit taps. The support is sorted and
    /// must be distinct and inside `[0, kc)`; `L ≤ K_c` is allowed here so that
    /// degenerate test channels can be expressed.
    pub fn from_taps(kc: usize, taps: &[(usize, R)], gain_model: GainModel) -> Result<Self> {
        let mut taps = taps.to_vec();
        taps.sort_by_key(|t| t.0);
        if taps.is_empty() {
            return Err(invalid("channel needs at least one tap"));
        }
        if taps.windows(2).any(|w| w[0].0 == w[1].0) || taps.last().unwrap().0 >= kc {
            return Err(invalid("tap positions must be distinct and below K_c"));
        }
        Ok(Self {
            kc,
            support: taps.iter().map(|t| t.0).collect(),
            gains: taps.iter().map(|t| t.1).collect(),
            gain_model,
        })
    }

    pub fn kc(&self) -> usize {
        self.kc
    }

    pub fn l(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn gains(&self) -> &[R] {
        &self.gains
    }

    pub fn gain_model(&self) -> GainModel {
        self.gain_model
    }

    pub fn taps(&self) -> impl Iterator<Item = (usize, R)> + '_ {
        self.support.iter().copied().zip(self.gains.iter().copied())
    }

    pub fn dense(&self) -> Vec<R> {
        let mut v = vec![R::zero(); self.kc];
        for (j, g) in self.taps() {
            v[j] = g;
        }
        v
    }

    pub fn norm_sq(&self) -> R {
        self.gains.iter().map(|&g| g * g).sum()
    }
}

/// Draws a channel with `l` taps out of `kc`.
pub fn sample_channel<R: Real>(
    kc: usize,
    l: usize,
    gain_model: GainModel,
    seed: u64,
) -> Result<ChannelRealization<R>> {
    if l < 1 || l >= kc {
        return Err(invalid(format!("need 1 ≤ L < K_c, got L = {l}, K_c = {kc}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut support = index::sample(&mut rng, kc, l).into_vec();
    support.sort_unstable();
    let gains = (0..l).map(|_| gain_model.draw(l, &mut rng)).collect();
    Ok(ChannelRealization {
        kc,
        support,
        gains,
        gain_model,
    })
}

/// Cross-tap interference `S_i = Σ_{j≠i} H̃_j ⟨X̄ⁱ, X̄ʲ⟩` for every `i`.
pub fn interference_sums<R: Real>(x: &SpreadSignal<R>, h: &ChannelRealization<R>) -> Result<Vec<R>> {
    if x.kc() != h.kc() {
        return Err(Error::DimensionMismatch {
            expected: x.kc(),
            got: h.kc(),
        });
    }
    let kc = x.kc();
    let r = x.empirical_autocorr();
    Ok((0..kc)
        .map(|i| {
            h.taps()
                .filter(|&(j, _)| j != i)
                .fold(R::zero(), |acc, (j, g)| acc + g * r[(j + kc - i) % kc])
        })
        .collect())
}

/// Indices `i` whose interference sum obeys `|S_i| ≤ B₃·√K_c`.
pub fn check_condition7<R: Real>(
    x: &SpreadSignal<R>,
    h: &ChannelRealization<R>,
    b3: R,
) -> Result<Vec<usize>> {
    let bound = b3 * R::from_count(x.kc()).sqrt();
    Ok(interference_sums(x, h)?
        .into_iter()
        .enumerate()
        .filter(|(_, s)| s.abs() <= bound)
        .map(|(i, _)| i)
        .collect())
}

/// `ln C(n, k)` through log-gamma, finite for any size.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Entropy of the channel law in nats: `ln C(K_c, L) + L·ln |A|`, with `A`
/// the gain alphabet of the posterior (2 signs for Rademacher; 2 signs times
/// [`GAIN_GRID_POINTS`] magnitudes for the discretized bounded-uniform law).
pub fn channel_entropy_nats(kc: usize, l: usize, gain_model: GainModel) -> Result<f64> {
    if l < 1 || l >= kc {
        return Err(invalid(format!("need 1 ≤ L < K_c, got L = {l}, K_c = {kc}")));
    }
    Ok(ln_binomial(kc, l) + l as f64 * (gain_model.alphabet_size() as f64).ln())
}

/// How the number of paths grows with `K_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathRule {
    /// `L = ⌈K_c^α⌉`.
    Power { alpha: f64 },
    Fixed(usize),
}

impl Default for PathRule {
    fn default() -> Self {
        PathRule::Power { alpha: 0.5 }
    }
}

impl PathRule {
    pub fn paths(&self, kc: usize) -> usize {
        match *self {
            PathRule::Power { alpha } => {
                let v = (kc as f64).powf(alpha);
                // exact powers (√64 = 8) must not be pushed up by rounding noise
                let r = v.round();
                if (v - r).abs() < 1e-9 {
                    r as usize
                } else {
                    v.ceil() as usize
                }
            }
            PathRule::Fixed(l) => l,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSchedule {
    pub kc_grid: Vec<usize>,
    pub rule: PathRule,
}

impl ScalingSchedule {
    pub fn new(kc_grid: Vec<usize>, rule: PathRule) -> Result<Self> {
        let s = Self { kc_grid, rule };
        s.validate()?;
        Ok(s)
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.kc_grid.iter().map(|&kc| (kc, self.rule.paths(kc)))
    }

    /// Grid strictly increasing, `1 ≤ L < K_c`, `L` non-decreasing and
    /// `L/K_c` strictly decreasing along the grid.
    pub fn validate(&self) -> Result<()> {
        if self.kc_grid.is_empty() {
            return Err(invalid("K_c grid is empty"));
        }
        let pts: Vec<(usize, usize)> = self.points().collect();
        for &(kc, l) in &pts {
            if l < 1 || l >= kc {
                return Err(invalid(format!("schedule gives L = {l} at K_c = {kc}")));
            }
        }
        for w in pts.windows(2) {
            let ((k0, l0), (k1, l1)) = (w[0], w[1]);
            if k1 <= k0 {
                return Err(invalid("K_c grid must be strictly increasing"));
            }
            if l1 < l0 || (l1 as f64 / k1 as f64) >= (l0 as f64 / k0 as f64) {
                return Err(invalid(format!(
                    "schedule is not sub-linear between K_c = {k0} and K_c = {k1}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for ScalingSchedule {
    fn default() -> Self {
        Self {
            kc_grid: vec![64, 128, 256, 512],
            rule: PathRule::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{gen_signal, SignalKind};
    use std::collections::HashMap;

    #[test]
    fn sample_rejects_dense_channels() {
        assert!(sample_channel::<f64>(4, 4, GainModel::Rademacher, 0).is_err());
        assert!(sample_channel::<f64>(4, 0, GainModel::Rademacher, 0).is_err());
        let h: ChannelRealization<f64> = sample_channel(4, 2, GainModel::Rademacher, 0).unwrap();
        assert!((h.norm_sq() - 1.0).abs() < 1e-15);
        assert!(h.gains().iter().all(|g| (g.abs() - 0.5f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn supports_are_uniform_over_subsets() {
        // 120 supports, 1e5 draws: each count within 3 binomial standard errors
        // (with a Bonferroni-style allowance for the maximum over 120 cells).
        let draws = 100_000;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for seed in 0..draws {
            let h: ChannelRealization<f64> =
                sample_channel(16, 2, GainModel::Rademacher, seed).unwrap();
            *counts.entry(h.support().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 120);
        let p = 1.0 / 120.0;
        let mean = draws as f64 * p;
        let se = (draws as f64 * p * (1.0 - p)).sqrt();
        let worst = counts.values().map(|&c| (c as f64 - mean).abs() / se).fold(0.0, f64::max);
        assert!(worst < 4.0, "worst deviation {worst} se");
        let chi2: f64 = counts.values().map(|&c| (c as f64 - mean).powi(2) / mean).sum();
        // 119 dof: mean 119, sd ≈ 15.4; 99.9% quantile ≈ 173
        assert!(chi2 < 173.0, "chi2 {chi2}");

        let mut marginal = [0usize; 16];
        for (s, c) in &counts {
            for &j in s {
                marginal[j] += c;
            }
        }
        let m = draws as f64 * 2.0 / 16.0;
        let chi2m: f64 = marginal.iter().map(|&c| (c as f64 - m).powi(2) / m).sum();
        // tap counts sum to 2·draws, 15 dof: 99.9% quantile ≈ 37.7
        assert!(chi2m < 37.7, "marginal chi2 {chi2m}");
    }

    #[test]
    fn bounded_uniform_second_moment() {
        let b2 = bounded_uniform_upper();
        assert!((b2 - 1.4265).abs() < 1e-3, "{b2}");
        let l = 7;
        let mut rng = rng_from_seed(1);
        let n = 100_000;
        let mut m2 = 0.0;
        for _ in 0..n {
            let g: f64 = GainModel::BoundedUniform.draw(l, &mut rng);
            let mag = g.abs() * (l as f64).sqrt();
            assert!((0.5..=b2).contains(&mag));
            m2 += g * g;
        }
        assert!((m2 / n as f64 * l as f64 - 1.0).abs() < 0.01);
    }

    #[test]
    fn channel_energy_is_one_on_average() {
        for model in [GainModel::Rademacher, GainModel::BoundedUniform] {
            let n = 20_000;
            let e: f64 = (0..n)
                .map(|s| sample_channel::<f64>(64, 8, model, s).unwrap().norm_sq())
                .sum::<f64>()
                / n as f64;
            assert!((e - 1.0).abs() < 0.01, "{model:?}: {e}");
        }
    }

    #[test]
    fn condition7_examples() {
        let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, 16, 0).unwrap();
        let h = ChannelRealization::from_taps(16, &[(0, 1.0)], GainModel::Rademacher).unwrap();
        assert!(check_condition7(&x, &h, 6.0).unwrap().contains(&0));

        let ones = SpreadSignal::from_samples(vec![1.0; 16]).unwrap();
        let g = 0.5f64.sqrt();
        let h = ChannelRealization::from_taps(16, &[(3, g), (9, -g)], GainModel::Rademacher).unwrap();
        // i off the support sees both taps and they cancel; on the support the
        // single remaining tap contributes 16·g ≈ 11.3 ≤ 6·4.
        assert_eq!(check_condition7(&ones, &h, 6.0).unwrap().len(), 16);
    }

    #[test]
    fn condition7_holds_almost_everywhere_for_binary_signals() {
        let mut fracs = Vec::new();
        for s in 0..100 {
            let x: SpreadSignal<f64> = gen_signal(SignalKind::IidBinary, 1024, 1000 + s).unwrap();
            let h: ChannelRealization<f64> =
                sample_channel(1024, 32, GainModel::Rademacher, 2000 + s).unwrap();
            fracs.push(check_condition7(&x, &h, DEFAULT_B3).unwrap().len() as f64 / 1024.0);
        }
        assert!(fracs.iter().all(|&f| f >= 0.99), "{fracs:?}");
    }

    #[test]
    fn entropy_values() {
        let e = channel_entropy_nats(2, 1, GainModel::Rademacher).unwrap();
        assert!((e - 2.0 * 2f64.ln()).abs() < 1e-12);
        let e = channel_entropy_nats(16, 2, GainModel::Rademacher).unwrap();
        assert!((e - (120f64.ln() + 2.0 * 2f64.ln())).abs() < 1e-12);
        assert!((e - 6.1738).abs() < 1e-3);
        assert!(
            channel_entropy_nats(32, 2, GainModel::Rademacher).unwrap()
                > channel_entropy_nats(16, 2, GainModel::Rademacher).unwrap()
        );
        let big = channel_entropy_nats(1 << 20, 1000, GainModel::BoundedUniform).unwrap();
        assert!(big.is_finite());
        assert!(channel_entropy_nats(4, 4, GainModel::Rademacher).is_err());
    }

    #[test]
    fn default_schedule_is_sublinear() {
        let s = ScalingSchedule::default();
        s.validate().unwrap();
        let ls: Vec<usize> = s.points().map(|p| p.1).collect();
        assert_eq!(ls, vec![8, 12, 16, 23]);
        assert!(ScalingSchedule::new(vec![64, 32], PathRule::default()).is_err());
        assert!(ScalingSchedule::new(vec![16, 32], PathRule::Power { alpha: 1.0 }).is_err());
    }
}
