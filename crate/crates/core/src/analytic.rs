//! Closed-form results: the rate map linking bid augmentation to price
//! reduction, the equal-rate gap, and the uniform-valuation equilibrium
//! with a price reduction.

use crate::error::{Error, Result};

/// Price-reduction rate that replicates a multiplicative bid augmentation
/// at rate `a`: r = a / (1 + a).
pub fn augmentation_to_reduction(a: f64) -> f64 {
    a / (1.0 + a)
}

/// Inverse of [`augmentation_to_reduction`]: a = r / (1 - r).
pub fn reduction_to_augmentation(r: f64) -> f64 {
    r / (1.0 - r)
}

/// Gap between a rate and its same-named counterpart on the other side of
/// the correspondence: x - x/(1+x) = x^2/(1+x). This is how far apart two
/// programs quoted at the same headline rate really are.
pub fn equal_rate_penalty(x: f64) -> f64 {
    x * x / (1.0 + x)
}

fn check_uniform_args(n: usize, r: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 bidders, got {n}")));
    }
    if !r.is_finite() || !(0.0..1.0).contains(&r) {
        return Err(Error::invalid(format!("reduction rate must be in [0, 1), got {r}")));
    }
    Ok(())
}

/// Equilibrium bid for a bidder with valuation `v` drawn from U[0, 1 - r]
/// when everyone gets the same price reduction `r` and there are `n`
/// bidders in total: b = ((n - 1) / n) v / (1 - r).
pub fn uniform_equilibrium_bid(n: usize, r: f64, v: f64) -> Result<f64> {
    check_uniform_args(n, r)?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::invalid(format!("valuation must be finite and >= 0, got {v}")));
    }
    Ok((n as f64 - 1.0) / n as f64 * v / (1.0 - r))
}

/// Expected utility of bidding `b` with valuation `v` in the same setup,
/// assuming rivals follow the equilibrium strategy:
/// E[z] = ((n/(n-1)) b)^(n-1) (v - b (1 - r)).
/// Only defined for b in [0, (n-1)/n]; beyond that the implied win
/// probability would exceed one.
/// Bids a few ulps past (n-1)/n snap back to it; the top equilibrium bid
/// computed in floating point can overshoot the cap by rounding alone.
fn snap_to_top(n: usize, b: f64) -> Result<f64> {
    let b_max = (n as f64 - 1.0) / n as f64;
    if b.is_finite() && b > b_max && b <= b_max * (1.0 + 1e-12) {
        return Ok(b_max);
    }
    if !b.is_finite() || !(0.0..=b_max).contains(&b) {
        return Err(Error::invalid(format!("bid must be in [0, {b_max}], got {b}")));
    }
    Ok(b)
}

pub fn uniform_expected_utility(n: usize, r: f64, v: f64, b: f64) -> Result<f64> {
    check_uniform_args(n, r)?;
    let b = snap_to_top(n, b)?;
    let win = (n as f64 / (n as f64 - 1.0) * b).powi(n as i32 - 1);
    Ok(win * (v - b * (1.0 - r)))
}

/// Derivative of [`uniform_expected_utility`] in the bid.
pub fn uniform_expected_utility_slope(n: usize, r: f64, v: f64, b: f64) -> Result<f64> {
    check_uniform_args(n, r)?;
    let b = snap_to_top(n, b)?;
    let nf = n as f64;
    let c = (nf / (nf - 1.0)).powi(n as i32 - 1);
    Ok(c * ((nf - 1.0) * b.powi(n as i32 - 2) * (v - b * (1.0 - r)) - b.powi(n as i32 - 1) * (1.0 - r)))
}
