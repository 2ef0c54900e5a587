//! Regret envelopes for overlaying on empirical regret curves.

use crate::error::{Error, Result};

/// `c * sqrt(users^2 * horizon * ln horizon)`, the user-level envelope.
pub fn regret_bound_ul(users: usize, horizon: f64, c: f64) -> Result<f64> {
    if users == 0 {
        return Err(Error::invalid("users", "must be >= 1"));
    }
    if !horizon.is_finite() || horizon < 1.0 {
        return Err(Error::invalid("horizon", format!("must be >= 1, got {horizon}")));
    }
    if !c.is_finite() || c < 0.0 {
        return Err(Error::invalid("c", format!("must be finite and >= 0, got {c}")));
    }
    let i = users as f64;
    Ok(c * (i * i * horizon * horizon.ln()).sqrt())
}

/// `sum_j 4 sigma^2 ln T (1 - 2/T) / gap_j`, the system-level envelope.
///
/// The optimal action has a zero gap and must be left out of `gaps`.
pub fn regret_bound_sl(sigma_max: f64, gaps: &[f64], horizon: f64) -> Result<f64> {
    if !sigma_max.is_finite() || sigma_max < 0.0 {
        return Err(Error::invalid("sigma_max", format!("must be finite and >= 0, got {sigma_max}")));
    }
    if !horizon.is_finite() || horizon < 3.0 {
        return Err(Error::invalid("horizon", format!("must be >= 3, got {horizon}")));
    }
    let scale = 4.0 * sigma_max * sigma_max * horizon.ln() * (1.0 - 2.0 / horizon);
    let mut total = 0.0;
    for (j, &gap) in gaps.iter().enumerate() {
        if gap == 0.0 {
            return Err(Error::ZeroGap(j));
        }
        if gap.is_nan() || gap < 0.0 {
            return Err(Error::invalid("gaps", format!("gap {j} is {gap}, must be > 0")));
        }
        total += scale / gap;
    }
    Ok(total)
}
