//! From mmse curves to rates.
//!
//! The I-MMSE identity gives the channel-uncertainty penalty
//! `I(Y; H̃ | x) = ½ ∫₀^snr mmse(s) ds` (nats). The data rate is then bounded
//! by the coherent rate minus that penalty, `I(Y; x) ≤ ½·K_c·snr − I(Y; H̃ | x)`.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Points of [`snr_grid`] below the target, as a fraction of the target.
pub const GRID_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct MmseCurve<R> {
    pub snr_grid: Vec<R>,
    pub values: Vec<R>,
    pub stderrs: Vec<R>,
}

impl<R: Real> MmseCurve<R> {
    pub fn new(snr_grid: Vec<R>, values: Vec<R>, stderrs: Vec<R>) -> Result<Self> {
        if snr_grid.is_empty() || snr_grid.len() != values.len() || values.len() != stderrs.len() {
            return Err(invalid("curve vectors must be nonempty and of equal length"));
        }
        if snr_grid[0] != R::zero() {
            return Err(invalid("snr grid must start at 0"));
        }
        if snr_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("snr grid must be strictly increasing"));
        }
        if values.iter().chain(&stderrs).any(|v| !(*v >= R::zero())) {
            return Err(invalid("mmse values and errors must be nonnegative"));
        }
        Ok(Self {
            snr_grid,
            values,
            stderrs,
        })
    }

    /// Curve with no Monte Carlo error.
    pub fn exact(snr_grid: Vec<R>, values: Vec<R>) -> Result<Self> {
        let n = values.len();
        Self::new(snr_grid, values, vec![R::zero(); n])
    }

    pub fn max_snr(&self) -> R {
        *self.snr_grid.last().expect("curve is nonempty")
    }
}

/// Trapezoid weights of every grid value for `∫₀^target`, with linear
/// interpolation inside the interval containing `target`.
pub fn trapezoid_weights<R: Real>(grid: &[R], target: R) -> Result<Vec<R>> {
    let last = *grid.last().ok_or_else(|| invalid("empty grid"))?;
    if !(target >= R::zero()) || target > last {
        return Err(Error::OutsideGrid {
            target: target.as_f64(),
            max: last.as_f64(),
        });
    }
    let half = R::lit(0.5);
    let mut w = vec![R::zero(); grid.len()];
    for n in 1..grid.len() {
        let (a, b) = (grid[n - 1], grid[n]);
        if a >= target {
            break;
        }
        let end = b.min(target);
        // value at `end` interpolated between grid[n−1] and grid[n]
        let t = (end - a) / (b - a);
        let len = end - a;
        w[n - 1] = w[n - 1] + half * len * (R::one() + (R::one() - t));
        w[n] = w[n] + half * len * t;
    }
    Ok(w)
}

/// `∫₀^target f` by the trapezoid rule on `grid`.
pub fn trapezoid<R: Real>(grid: &[R], values: &[R], target: R) -> Result<R> {
    Ok(trapezoid_weights(grid, target)?
        .iter()
        .zip(values)
        .map(|(&w, &v)| w * v)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImmseIntegral<R> {
    pub nats: R,
    /// `½ Σ w_g·stderr_g`: the error if every point's error had the same sign.
    pub error_bound: R,
}

/// `I = ½ ∫₀^target mmse(s) ds` over the curve.
pub fn mutual_info_immse<R: Real>(curve: &MmseCurve<R>, snr_target: R) -> Result<ImmseIntegral<R>> {
    let w = trapezoid_weights(&curve.snr_grid, snr_target)?;
    let half = R::lit(0.5);
    let dot = |v: &[R]| w.iter().zip(v).map(|(&a, &b)| a * b).sum::<R>();
    Ok(ImmseIntegral {
        nats: half * dot(&curve.values),
        error_bound: half * dot(&curve.stderrs),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSummary<R> {
    /// I-MMSE integral as computed.
    pub i_cond_raw_nats: R,
    /// `min(raw, entropy cap)`.
    pub i_cond_nats: R,
    pub i_cond_stderr: R,
    /// `raw / (½·K_c·snr)`.
    pub penalty_ratio: R,
    pub penalty_stderr: R,
    /// `max(0, ½·K_c·snr − raw)`.
    pub rate_upper_nats: R,
    pub entropy_cap_nats: R,
    /// `½·K_c·snr`.
    pub coherent_nats: R,
}

/// Builds a [`RateSummary`] from an already integrated penalty.
///
/// At `snr_target = 0` the ratio is undefined; `mmse_at_zero / K_c` (its
/// limit) must then be supplied through `ratio_at_zero`.
pub fn summarize_penalty<R: Real>(
    i_raw: R,
    i_stderr: R,
    snr_target: R,
    kc: usize,
    entropy_cap_nats: R,
    ratio_at_zero: R,
) -> RateSummary<R> {
    let coherent = R::lit(0.5) * R::from_count(kc) * snr_target;
    let (ratio, ratio_se) = if coherent > R::zero() {
        (i_raw / coherent, i_stderr / coherent)
    } else {
        (ratio_at_zero, R::zero())
    };
    RateSummary {
        i_cond_raw_nats: i_raw,
        i_cond_nats: i_raw.min(entropy_cap_nats),
        i_cond_stderr: i_stderr,
        penalty_ratio: ratio,
        penalty_stderr: ratio_se,
        rate_upper_nats: (coherent - i_raw).max(R::zero()),
        entropy_cap_nats,
        coherent_nats: coherent,
    }
}

pub fn penalty_and_rate<R: Real>(
    curve: &MmseCurve<R>,
    snr_target: R,
    kc: usize,
    entropy_cap_nats: R,
) -> Result<RateSummary<R>> {
    let i = mutual_info_immse(curve, snr_target)?;
    let at_zero = curve.values[0] / R::from_count(kc);
    Ok(summarize_penalty(
        i.nats,
        i.error_bound,
        snr_target,
        kc,
        entropy_cap_nats,
        at_zero,
    ))
}

/// `ln(K_c/L) / (K_c/L)`, the snr separating the regime where spreading
/// signals lose all rate from the one where a positive rate survives.
pub fn threshold_snr(kc: usize, l: usize) -> Result<f64> {
    if l < 1 || kc <= l {
        return Err(invalid(format!("need K_c > L ≥ 1, got K_c = {kc}, L = {l}")));
    }
    Ok(threshold_from_ratio(kc as f64 / l as f64))
}

/// `ln(q)/q` for a path-density ratio `q = K_c/L`.
pub fn threshold_from_ratio(q: f64) -> f64 {
    q.ln() / q
}

/// `points` snr values: 0, then a geometric progression from
/// `GRID_FLOOR·target` up to `target`.
pub fn snr_grid(target: f64, points: usize) -> Result<Vec<f64>> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(invalid("snr target must be positive and finite"));
    }
    if points < 2 {
        return Err(invalid("snr grid needs at least 2 points"));
    }
    let mut grid = vec![0.0];
    let steps = points - 1;
    if steps == 1 {
        grid.push(target);
        return Ok(grid);
    }
    let ratio = GRID_FLOOR.powf(-1.0 / (steps - 1) as f64);
    let first = GRID_FLOOR * target;
    grid.extend((0..steps).map(|n| first * ratio.powi(n as i32)));
    *grid.last_mut().unwrap() = target;
    Ok(grid)
}
