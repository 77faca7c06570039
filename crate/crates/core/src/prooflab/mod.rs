//! Term-by-term machinery behind the vanishing-rate argument.
//!
//! For an anchor hypothesis `H` with a tap at `i`, the posterior ratio
//! `J(H)` compares the exponent at `H` with the exponents of its relocations
//! `H^{i→k}`, `k ∈ K(H)`. This module evaluates the eight-term split of those
//! exponents, the dominant `a/b/c` terms, Gaussian order statistics for the
//! noise maximum, the random swap-group partition of the support space, and
//! `J(H)` itself.

mod battery;
mod decompose;
mod jratio;
mod order_stats;
mod partition;

pub use battery::{run_battery, BatteryConfig, BatteryReport, TrialDiagnostics};
pub use decompose::{ab_c_terms, decompose_exponent, direct_exponent, AbcTerms, ExponentDecomposition};
pub use jratio::{exp_bound_exponent, j_ratio, sample_k_set, JRatio};
pub use order_stats::{order_stat_mean, order_stat_var, EULER_GAMMA};
pub use partition::{build_swap_partition, SwapGroup, SwapPartition, PARTITION_BUDGET};

use crate::error::{invalid, Result};
use crate::posterior::Hypothesis;
use crate::scalar::Real;

/// Checks that `H` has a tap at `i` and that `k` is `i` or an empty slot.
pub(crate) fn check_move<R: Real>(h: &Hypothesis<R>, kc: usize, i: usize, k: usize) -> Result<R> {
    let hi = h
        .gain_at(i)
        .ok_or_else(|| invalid(format!("anchor has no tap at {i}")))?;
    if k >= kc || (k != i && h.gain_at(k).is_some()) {
        return Err(invalid(format!("k = {k} is neither {i} nor an empty position")));
    }
    Ok(hi)
}
