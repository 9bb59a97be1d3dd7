//! Growth-exponent fits.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Least-squares slope of `ln y` against `ln t` over samples with
/// `t_lo ≤ t ≤ t_hi` and `t, y > 0`.
pub fn power_law_exponent<T: Real>(times: &[T], values: &[T], t_lo: T, t_hi: T) -> Result<T> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, y)| **t >= t_lo && **t <= t_hi && **t > T::zero() && **y > T::zero())
        .map(|(t, y)| (t.as_f64().ln(), y.as_f64().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParameter {
            field: "times",
            reason: format!("need at least two positive samples in [{t_lo}, {t_hi}]"),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter { field: "times", reason: "all samples at one time".into() });
    }
    Ok(T::lit(sxy / sxx))
}
