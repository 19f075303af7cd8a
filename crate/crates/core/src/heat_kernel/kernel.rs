use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quadrature::integrate_with_breaks;
use crate::error::{Error, Result};
use crate::lattice::lattice_multiple;

/// `ζ(s) = arcsinh(s) - s / (1 + sqrt(1 + s^2))`, with `ζ(0) = 0`.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("ζ needs s >= 0, got {s}")));
    }
    Ok(zeta_unchecked(s))
}

fn zeta_unchecked(s: f64) -> f64 {
    if s > 1e8 {
        // asinh(s) = ln 2s + O(s^-2), s/(1+sqrt(1+s^2)) = 1 - 1/s + O(s^-2)
        return std::f64::consts::LN_2 + s.ln() - 1.0 + 1.0 / s;
    }
    s.asinh() - s / (1.0 + s.mul_add(s, 1.0).sqrt())
}

/// `½ ln(1+s) <= ζ(s) <= ln(1+s)`, up to rounding.
pub fn zeta_bounds_check(s: f64) -> Result<bool> {
    let z = zeta(s)?;
    let l = s.ln_1p();
    let tol = 4.0 * f64::EPSILON * l;
    Ok(0.5 * l <= z + tol && z <= l + tol)
}

/// `ln p1(τ, u)` split as `-|u| ζ(|u|/2τ) + ln I` where `I` is the
/// saddle-shifted integral; stays finite where `p1` underflows.
pub fn log_kernel_1d(tau: f64, u: i64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("τ = {tau} must be nonnegative")));
    }
    let ua = u.unsigned_abs() as f64;
    if tau == 0.0 {
        return Ok(if u == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    // Shifting η -> η + i asinh(|u|/2τ) puts the contour through the saddle
    // point, leaving a positive, non-oscillating peak at η = 0.
    let s = ua / (2.0 * tau);
    let a = (4.0 * tau * tau + ua * ua).sqrt();
    let integrand = |eta: f64| {
        let half = (0.5 * eta).sin();
        (-2.0 * a * half * half).exp() * (ua * (eta - eta.sin())).cos()
    };
    let width = 1.0 / a.sqrt();
    let mut breaks = vec![0.0];
    let mut b = width;
    while b < PI {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(PI);
    let q = integrate_with_breaks(integrand, &breaks, 1e-14, 0.0, 4000);
    Ok(-ua * zeta_unchecked(s) + (q.value / PI).ln())
}

/// `p1(τ, u) = (1/2π) ∫_{-π}^{π} e^{-2τ(1 - cos η)} e^{iuη} dη`.
pub fn kernel_1d(tau: f64, u: i64) -> Result<f64> {
    if tau == 0.0 {
        return Ok(if u == 0 { 1.0 } else { 0.0 });
    }
    Ok(log_kernel_1d(tau, u)?.exp())
}

/// `p_{d,h}(t, x, y) = h^{-d} Π_j p1(t/h^2, (x_j - y_j)/h)` for lattice points `x, y`.
pub fn kernel(h: f64, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("kernel time {t} must be positive")));
    }
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Domain("points must share a positive dimension".into()));
    }
    let tau = t / (h * h);
    let mut log_p = -(x.len() as f64) * h.ln();
    for (&a, &b) in x.iter().zip(y) {
        let ka = lattice_multiple(a, h);
        let kb = lattice_multiple(b, h);
        let (Some(ka), Some(kb)) = (ka, kb) else {
            return Err(Error::Domain(format!("{a} or {b} is not a lattice coordinate")));
        };
        log_p += log_kernel_1d(tau, ka - kb)?;
    }
    Ok(log_p.exp())
}

/// `p_{d,h}` for an integer displacement `u = (x - y)/h`.
pub fn kernel_displacement(h: f64, t: f64, u: &[i64]) -> Result<f64> {
    let tau = t / (h * h);
    let mut log_p = -(u.len() as f64) * h.ln();
    for &k in u {
        log_p += log_kernel_1d(tau, k)?;
    }
    Ok(log_p.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PangRatios {
    /// `p1 / (min(|u|^{-1/2}, τ^{-1/2}) e^{-|u| ζ(|u|/2τ)})`.
    pub ratio_pang: f64,
    /// `p1 / (τ^{-1/2} e^{-½|u| ln(1 + |u|/2τ)})`; bounded above.
    pub ratio_upper: f64,
    /// `p1 / e^{-½|u| ln(1 + |u|/2τ)}`; bounded below for `|u| h <= L`, `t` in a compact.
    pub ratio_lower: f64,
}

/// Ratios of `p1(τ, u)` to the two-sided envelope and its simplified bounds.
pub fn pang_bounds_check(tau: f64, u: i64) -> Result<PangRatios> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("τ = {tau} must be positive")));
    }
    let ua = u.unsigned_abs() as f64;
    let log_p = log_kernel_1d(tau, u)?;
    let s = ua / (2.0 * tau);
    let pref = if ua == 0.0 {
        -0.5 * tau.ln()
    } else {
        -0.5 * ua.ln().max(tau.ln())
    };
    let simple = -0.5 * ua * s.ln_1p();
    Ok(PangRatios {
        ratio_pang: (log_p - pref + ua * zeta_unchecked(s)).exp(),
        ratio_upper: (log_p + 0.5 * tau.ln() - simple).exp(),
        ratio_lower: (log_p - simple).exp(),
    })
}
