//! Asymptotics of the maximum of `M` IID `N(0, σ²)` variables.

use crate::error::{invalid, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn check(m: usize, sigma: f64) -> Result<()> {
    if m < 2 {
        return Err(invalid(format!("need M ≥ 2, got {m}")));
    }
    if !(sigma > 0.0) {
        return Err(invalid("sigma must be positive"));
    }
    Ok(())
}

/// `σ·(√(2 ln M) − (ln ln M + ln 4π − 2C) / (2√(2 ln M)))`, Cramér's
/// expansion of the expected maximum (C is Euler's constant).
pub fn order_stat_mean(m: usize, sigma: f64) -> Result<f64> {
    check(m, sigma)?;
    let ln_m = (m as f64).ln();
    let a = (2.0 * ln_m).sqrt();
    let shift = (ln_m.ln() + (4.0 * std::f64::consts::PI).ln() - 2.0 * EULER_GAMMA) / (2.0 * a);
    Ok(sigma * (a - shift))
}

/// `π²σ² / (12 ln M)`.
pub fn order_stat_var(m: usize, sigma: f64) -> Result<f64> {
    check(m, sigma)?;
    Ok(std::f64::consts::PI.powi(2) * sigma * sigma / (12.0 * (m as f64).ln()))
}
