use rand::seq::index;
use rand::Rng;

use super::{GainAlphabet, Hypothesis, Likelihood, PosteriorMode, PosteriorSummary};
use crate::channel::GainModel;
use crate::error::{invalid, Error, Result};
use crate::link::{add_shifted, dot_shifted};
use crate::scalar::{norm_sq, Real};
use crate::seed::{derive_seed, rng_from_seed, SimRng};
use crate::signals::SpreadSignal;

const EMPTY: usize = usize::MAX;
const REFRESH_EVERY: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    /// Independent chains; at least 2 so the cross-chain gap is defined.
    pub chains: usize,
    /// Burn-in proposals per chain; `None` means `10·K_c`.
    pub burnin: Option<usize>,
    /// Post-burn-in proposals per chain.
    pub samples: usize,
    pub seed: u64,
    /// Allowed cross-chain gap, in units of the nominal tap size `1/√L`.
    pub gap_tolerance: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            burnin: None,
            samples: 5_000,
            seed: 0,
            gap_tolerance: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
struct Chain<R> {
    rng: SimRng,
    support: Vec<usize>,
    gains: Vec<R>,
    slot_of: Vec<usize>,
    residual: Vec<R>,
    ll: R,
    since_refresh: usize,
    proposed: usize,
    accepted: usize,
    sum: Vec<R>,
    draws: usize,
    trace: Vec<R>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Relocate { slot: usize, to: usize, value: usize },
    Flip { slot: usize },
    Redraw { slot: usize, value: usize },
}

/// Tempered log-weights `β·(amp·g·c − ½snr·g²·r[0])` of every gain value for
/// a tap whose residual correlation (with the tap itself removed) is `c`.
struct GainConditional<R> {
    log_w: [R; MAX_ALPHABET],
    len: usize,
    log_z: R,
}

const MAX_ALPHABET: usize = 32;

impl<R: Real> GainConditional<R> {
    fn new(lik: &Likelihood<'_, R>, alphabet: &GainAlphabet<R>, c: R, beta: R) -> Self {
        let half = R::lit(0.5);
        let r0 = lik.autocorr[0];
        let mut log_w = [R::zero(); MAX_ALPHABET];
        let values = alphabet.values();
        let mut peak = R::neg_infinity();
        for (w, &g) in log_w.iter_mut().zip(values) {
            *w = beta * (lik.amp * g * c - half * lik.snr * g * g * r0);
            peak = peak.max(*w);
        }
        let total: R = log_w[..values.len()].iter().map(|&w| (w - peak).exp()).sum();
        Self {
            log_w,
            len: values.len(),
            log_z: peak + total.ln(),
        }
    }

    fn sample(&self, rng: &mut SimRng) -> usize {
        let mut u = R::unit(rng);
        for (n, &w) in self.log_w[..self.len].iter().enumerate() {
            u = u - (w - self.log_z).exp();
            if u < R::zero() {
                return n;
            }
        }
        self.len - 1
    }
}

fn unscaled_ll<R: Real>(lik: &Likelihood<'_, R>, g: R, c: R) -> R {
    lik.amp * g * c - R::lit(0.5) * lik.snr * g * g * lik.autocorr[0]
}

impl<R: Real> Chain<R> {
    fn new(lik: &Likelihood<'_, R>, start: &Hypothesis<R>, rng: SimRng) -> Self {
        let kc = lik.kc();
        let mut slot_of = vec![EMPTY; kc];
        for (slot, &j) in start.support().iter().enumerate() {
            slot_of[j] = slot;
        }
        let mut chain = Self {
            rng,
            support: start.support().to_vec(),
            gains: start.gains().to_vec(),
            slot_of,
            residual: Vec::new(),
            ll: R::zero(),
            since_refresh: 0,
            proposed: 0,
            accepted: 0,
            sum: vec![R::zero(); kc],
            draws: 0,
            trace: Vec::new(),
        };
        chain.refresh(lik);
        chain
    }

    /// Recomputes the residual from scratch to shed accumulated rounding.
    fn refresh(&mut self, lik: &Likelihood<'_, R>) {
        let mut res = lik.y.to_vec();
        for (&j, &g) in self.support.iter().zip(&self.gains) {
            add_shifted(&mut res, lik.x, j, -lik.amp * g);
        }
        self.ll = -R::lit(0.5) * norm_sq(&res);
        self.residual = res;
        self.since_refresh = 0;
    }

    /// Correlation of `X̄ᵏ` with the residual after removing the tap in `slot`.
    fn leave_one_out_corr(&self, lik: &Likelihood<'_, R>, slot: usize, k: usize) -> R {
        let kc = lik.kc();
        let i = self.support[slot];
        let lag = (k + kc - i) % kc;
        dot_shifted(&self.residual, lik.x, k) + lik.amp * self.gains[slot] * lik.autocorr[lag]
    }

    fn apply(&mut self, lik: &Likelihood<'_, R>, alphabet: &GainAlphabet<R>, mv: Move, dll: R) {
        match mv {
            Move::Relocate { slot, to, value } => {
                let i = self.support[slot];
                let g = self.gains[slot];
                let g_new = alphabet.values()[value];
                add_shifted(&mut self.residual, lik.x, i, lik.amp * g);
                add_shifted(&mut self.residual, lik.x, to, -lik.amp * g_new);
                self.slot_of[i] = EMPTY;
                self.slot_of[to] = slot;
                self.support[slot] = to;
                self.gains[slot] = g_new;
            }
            Move::Flip { slot } => {
                let i = self.support[slot];
                let g = self.gains[slot];
                add_shifted(&mut self.residual, lik.x, i, R::lit(2.0) * lik.amp * g);
                self.gains[slot] = -g;
            }
            Move::Redraw { slot, value } => {
                let i = self.support[slot];
                let d = alphabet.values()[value] - self.gains[slot];
                add_shifted(&mut self.residual, lik.x, i, -lik.amp * d);
                self.gains[slot] = alphabet.values()[value];
            }
        }
        self.ll = self.ll + dll;
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_EVERY {
            self.refresh(lik);
        }
    }

    /// One Metropolis–Hastings step targeting the likelihood raised to `beta`.
    ///
    /// A relocation draws the new gain from its conditional at the target
    /// position, so it is accepted with the ratio of the gain-marginal
    /// weights at the two positions. A redraw is an exact Gibbs update of one
    /// gain. A sign flip is a plain symmetric proposal.
    fn step(&mut self, lik: &Likelihood<'_, R>, alphabet: &GainAlphabet<R>, beta: R) -> (Move, bool) {
        let kc = lik.kc();
        let l = self.support.len();
        let slot = self.rng.random_range(0..l);
        let g = self.gains[slot];
        let i = self.support[slot];
        let c_from = self.leave_one_out_corr(lik, slot, i);

        let (mv, log_ratio, dll) = if l < kc && self.rng.random::<bool>() {
            let to = loop {
                let k = self.rng.random_range(0..kc);
                if self.slot_of[k] == EMPTY {
                    break k;
                }
            };
            let c_to = self.leave_one_out_corr(lik, slot, to);
            let cond_to = GainConditional::new(lik, alphabet, c_to, beta);
            let cond_from = GainConditional::new(lik, alphabet, c_from, beta);
            let value = cond_to.sample(&mut self.rng);
            let dll = unscaled_ll(lik, alphabet.values()[value], c_to) - unscaled_ll(lik, g, c_from);
            (Move::Relocate { slot, to, value }, cond_to.log_z - cond_from.log_z, dll)
        } else if alphabet.is_binary() || self.rng.random::<bool>() {
            let dll = unscaled_ll(lik, -g, c_from) - unscaled_ll(lik, g, c_from);
            (Move::Flip { slot }, beta * dll, dll)
        } else {
            let cond = GainConditional::new(lik, alphabet, c_from, beta);
            let value = cond.sample(&mut self.rng);
            let dll = unscaled_ll(lik, alphabet.values()[value], c_from) - unscaled_ll(lik, g, c_from);
            (Move::Redraw { slot, value }, R::zero(), dll)
        };

        let accept = log_ratio >= R::zero() || R::unit(&mut self.rng).ln() < log_ratio;
        if accept {
            self.apply(lik, alphabet, mv, dll);
        }
        (mv, accept)
    }

    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += usize::from(accepted);
        for (&j, &g) in self.support.iter().zip(&self.gains) {
            self.sum[j] = self.sum[j] + g;
        }
        self.draws += 1;
        self.trace.push(self.ll);
    }

    fn state(&self) -> Hypothesis<R> {
        let taps: Vec<(usize, R)> = self
            .support
            .iter()
            .copied()
            .zip(self.gains.iter().copied())
            .collect();
        Hypothesis::new(&taps).expect("chain support stays distinct")
    }

    fn mean(&self) -> Vec<R> {
        let n = R::from_count(self.draws.max(1));
        self.sum.iter().map(|&s| s / n).collect()
    }
}

/// Batch-means effective sample size of one trace.
fn batch_means_ess<R: Real>(trace: &[R]) -> R {
    let n = trace.len();
    if n < 4 {
        return R::from_count(n);
    }
    let b = (n as f64).sqrt().floor() as usize;
    let nb = n / b;
    let used = &trace[..nb * b];
    let mean = used.iter().copied().sum::<R>() / R::from_count(used.len());
    let var = used.iter().map(|&v| (v - mean) * (v - mean)).sum::<R>() / R::from_count(used.len() - 1);
    if !(var > R::epsilon() * (R::one() + mean.abs())) {
        return R::from_count(n);
    }
    let batch_var = used
        .chunks(b)
        .map(|c| {
            let m = c.iter().copied().sum::<R>() / R::from_count(b);
            (m - mean) * (m - mean)
        })
        .sum::<R>()
        / R::from_count(nb - 1);
    let ess = R::from_count(n) * var / (R::from_count(b) * batch_var);
    ess.min(R::from_count(n))
}

/// Multi-chain Metropolis–Hastings sampler over hypotheses.
///
/// Moves: relocate one tap to a uniformly chosen empty position, flip one
/// gain's sign, and (non-binary alphabets only) redraw one gain uniformly.
/// Cold-started chains begin at prior draws and anneal the likelihood from
/// zero to full weight over the first half of burn-in; warm-started chains
/// skip the annealing.
#[derive(Debug, Clone)]
pub struct McmcSampler<'a, R> {
    lik: Likelihood<'a, R>,
    alphabet: GainAlphabet<R>,
    l: usize,
    chains: Vec<Chain<R>>,
    tolerance: R,
}

impl<'a, R: Real> McmcSampler<'a, R> {
    /// Cold start: prior draws, annealed burn-in.
    pub fn new(
        y: &'a [R],
        x: &'a SpreadSignal<R>,
        snr: R,
        l: usize,
        gain_model: GainModel,
        config: &McmcConfig,
    ) -> Result<Self> {
        let alphabet = GainAlphabet::for_model(gain_model, l);
        let kc = x.kc();
        if l < 1 || l > kc {
            return Err(invalid(format!("need 1 ≤ L ≤ K_c, got L = {l}, K_c = {kc}")));
        }
        let starts: Vec<Hypothesis<R>> = (0..config.chains)
            .map(|c| {
                let mut rng = rng_from_seed(derive_seed(config.seed, &[c as u64, 0]));
                let mut support = index::sample(&mut rng, kc, l).into_vec();
                support.sort_unstable();
                let taps: Vec<(usize, R)> = support
                    .into_iter()
                    .map(|j| (j, alphabet.values()[rng.random_range(0..alphabet.len())]))
                    .collect();
                Hypothesis::new(&taps).expect("sampled support is distinct")
            })
            .collect();
        Self::build(y, x, snr, l, alphabet, config, &starts, true)
    }

    /// Warm start: chain `c` begins at `starts[c % starts.len()]`.
    pub fn warm(
        y: &'a [R],
        x: &'a SpreadSignal<R>,
        snr: R,
        l: usize,
        gain_model: GainModel,
        config: &McmcConfig,
        starts: &[Hypothesis<R>],
    ) -> Result<Self> {
        if starts.is_empty() {
            return Err(invalid("warm start needs at least one state"));
        }
        if starts.iter().any(|h| h.l() != l || h.support().iter().any(|&j| j >= x.kc())) {
            return Err(invalid("warm-start states must have L taps inside [0, K_c)"));
        }
        let alphabet = GainAlphabet::for_model(gain_model, l);
        let starts: Vec<Hypothesis<R>> = (0..config.chains)
            .map(|c| starts[c % starts.len()].clone())
            .collect();
        Self::build(y, x, snr, l, alphabet, config, &starts, false)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        y: &'a [R],
        x: &'a SpreadSignal<R>,
        snr: R,
        l: usize,
        alphabet: GainAlphabet<R>,
        config: &McmcConfig,
        starts: &[Hypothesis<R>],
        anneal: bool,
    ) -> Result<Self> {
        if config.chains < 2 {
            return Err(invalid("MCMC needs at least 2 chains"));
        }
        let lik = Likelihood::new(y, x, snr)?;
        let chains = starts
            .iter()
            .enumerate()
            .map(|(c, h)| Chain::new(&lik, h, rng_from_seed(derive_seed(config.seed, &[c as u64, 1]))))
            .collect();
        let mut sampler = Self {
            lik,
            alphabet,
            l,
            chains,
            tolerance: R::lit(config.gap_tolerance) / R::from_count(l).sqrt(),
        };
        sampler.burn_in(config.burnin.unwrap_or(10 * x.kc()), anneal);
        Ok(sampler)
    }

    fn burn_in(&mut self, steps: usize, anneal: bool) {
        let ramp = (steps / 2).max(1);
        let (lik, alphabet) = (&self.lik, &self.alphabet);
        for chain in &mut self.chains {
            for t in 0..steps {
                let beta = if anneal {
                    R::one().min(R::from_count(t + 1) / R::from_count(ramp))
                } else {
                    R::one()
                };
                chain.step(lik, alphabet, beta);
            }
            chain.refresh(lik);
        }
    }

    /// Runs `samples` more recorded proposals on every chain.
    pub fn extend(&mut self, samples: usize) {
        let (lik, alphabet) = (&self.lik, &self.alphabet);
        for chain in &mut self.chains {
            for _ in 0..samples {
                let (_, accepted) = chain.step(lik, alphabet, R::one());
                chain.record(accepted);
            }
        }
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Current state of every chain, for warm-starting a neighbouring problem.
    pub fn states(&self) -> Vec<Hypothesis<R>> {
        self.chains.iter().map(Chain::state).collect()
    }

    pub fn tolerance(&self) -> R {
        self.tolerance
    }

    pub fn chain_gap(&self) -> R {
        let means: Vec<Vec<R>> = self.chains.iter().map(Chain::mean).collect();
        (0..self.lik.kc())
            .map(|j| {
                let (lo, hi) = means.iter().fold((R::infinity(), R::neg_infinity()), |(lo, hi), m| {
                    (lo.min(m[j]), hi.max(m[j]))
                });
                hi - lo
            })
            .fold(R::zero(), R::max)
    }

    pub fn converged(&self) -> bool {
        self.chain_gap() <= self.tolerance
    }

    pub fn summary(&self) -> PosteriorSummary<R> {
        let kc = self.lik.kc();
        let draws: usize = self.chains.iter().map(|c| c.draws).sum();
        let n = R::from_count(draws.max(1));
        let hhat = (0..kc)
            .map(|j| self.chains.iter().map(|c| c.sum[j]).sum::<R>() / n)
            .collect();
        let proposed: usize = self.chains.iter().map(|c| c.proposed).sum();
        let accepted: usize = self.chains.iter().map(|c| c.accepted).sum();
        let ess = self.chains.iter().map(|c| batch_means_ess(&c.trace)).sum();
        PosteriorSummary {
            hhat,
            mode: PosteriorMode::Mcmc,
            log_evidence: None,
            weights: None,
            ess: Some(ess),
            acceptance_rate: Some(R::from_count(accepted) / R::from_count(proposed.max(1))),
            chain_gap: Some(self.chain_gap()),
            samples: draws,
        }
    }
}

/// Posterior mean by MCMC with `config.samples` recorded proposals per chain.
///
/// Returns [`Error::NotConverged`] when the chains disagree by more than the
/// configured tolerance; callers that want to keep sampling use
/// [`McmcSampler`] directly.
pub fn mcmc_posterior<R: Real>(
    y: &[R],
    x: &SpreadSignal<R>,
    snr: R,
    l: usize,
    gain_model: GainModel,
    config: &McmcConfig,
) -> Result<PosteriorSummary<R>> {
    let mut sampler = McmcSampler::new(y, x, snr, l, gain_model, config)?;
    sampler.extend(config.samples);
    let gap = sampler.chain_gap();
    if gap > sampler.tolerance() {
        return Err(Error::NotConverged {
            gap: gap.as_f64(),
            tolerance: sampler.tolerance().as_f64(),
        });
    }
    Ok(sampler.summary())
}
