//! Numerical laboratory for spreading signals over sparse multipath channels.
//!
//! The crate covers one coherence period of a real baseband link,
//! `Y = √snr·x·H̃ + Z`, where `x` is the circulant matrix of a spreading signal
//! and `H̃` an `L`-sparse channel. On top of the link model it computes the
//! MMSE channel estimate (exact enumeration or MCMC), integrates mmse curves
//! into the channel-uncertainty penalty through the I-MMSE identity, and
//! exposes the term-by-term quantities behind the vanishing-rate argument
//! for low SNR ([`prooflab`]).
//!
//! All math is generic over [`Real`]; the aliases below fix `f64`.

pub mod channel;
pub mod error;
mod fft;
pub mod link;
pub mod posterior;
pub mod prooflab;
pub mod rate;
pub mod scalar;
pub mod seed;
pub mod signals;

pub use channel::{
    channel_entropy_nats, check_condition7, sample_channel, ChannelRealization, GainModel,
    PathRule, ScalingSchedule,
};
pub use error::{Error, Result};
pub use link::{circulant_apply, transmit, transmit_with_noise, LinkObservation};
pub use posterior::{
    exact_posterior, mcmc_posterior, mmse_at, mmse_curve, Hypothesis, McmcConfig, MmseOptions,
    PosteriorMode, PosteriorSummary,
};
pub use rate::{mutual_info_immse, penalty_and_rate, snr_grid, threshold_snr, MmseCurve, RateSummary};
pub use scalar::Real;
pub use signals::{gen_signal, SignalKind, SpreadSignal};

pub type Signal = SpreadSignal<f64>;
pub type Channel = ChannelRealization<f64>;
pub type Observation = LinkObservation<f64>;
pub type Posterior = PosteriorSummary<f64>;
pub type Curve = MmseCurve<f64>;
pub type Rates = RateSummary<f64>;
