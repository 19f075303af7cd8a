use serde::{Deserialize, Serialize};

use super::kernel::kernel_1d;
use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};

/// `Σ_{u > m} p1(τ, u)^2`, stopped once the geometric remainder bound is
/// below `1e-16` of the partial sum. The ratio `p1(u+1)/p1(u)` is
/// nonincreasing in `u`, so after term `k` the rest is at most
/// `p1(k)^2 r^2 / (1 - r^2)` with `r = p1(k+1)/p1(k)`.
pub(crate) fn sum_sq_beyond(tau: f64, m: u64) -> Result<f64> {
    let mut u = m + 1;
    let mut cur = kernel_1d(tau, u as i64)?;
    let mut sum = 0.0;
    loop {
        sum += cur * cur;
        let next = kernel_1d(tau, (u + 1) as i64)?;
        if cur == 0.0 || next == 0.0 {
            return Ok(sum);
        }
        let r = next / cur;
        if r < 1.0 {
            let rem = cur * cur * r * r / (1.0 - r * r);
            if rem <= 1e-16 * sum {
                return Ok(sum + rem);
            }
        }
        cur = next;
        u += 1;
    }
}

/// `Σ_{u ∈ Z} p1(τ, u)^2`.
pub fn kernel_sq_sum(tau: f64) -> Result<f64> {
    let p0 = kernel_1d(tau, 0)?;
    Ok(p0 * p0 + 2.0 * sum_sq_beyond(tau, 0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ell2Report {
    /// `‖h^{d/2} p_{d,h}(t, ·, y)‖^2`.
    pub norm: f64,
    /// `(2 sqrt(2π t))^{-d}`.
    pub predicted: f64,
    pub ratio: f64,
    pub tau: f64,
    /// `τ >= 100`, where the asymptotic is expected within 5%.
    pub asymptotic_regime: bool,
}

/// Compares the squared `ℓ²` norm of the rescaled kernel with its large-`τ`
/// asymptotic `(2 sqrt(2πτ))^{-d}` per unit mesh.
pub fn ell2_norm_asymptotic_check(d: usize, h: f64, t: f64) -> Result<Ell2Report> {
    if !(t > 0.0 && h > 0.0) || d == 0 {
        return Err(Error::Domain("need d >= 1, h > 0, t > 0".into()));
    }
    let tau = t / (h * h);
    let s = kernel_sq_sum(tau)?;
    let di = d as i32;
    let norm = s.powi(di) / h.powi(di);
    let predicted = (2.0 * (2.0 * std::f64::consts::PI * t).sqrt()).powi(-di);
    Ok(Ell2Report {
        norm,
        predicted,
        ratio: norm / predicted,
        tau,
        asymptotic_regime: tau >= 100.0,
    })
}

/// `Σ_{x : x - y ∉ [-L, L]^d} |h^{d/2} p_{d,h}(t, x, y)|^2` for a fixed `y`.
pub fn tail_mass_sq(d: usize, h: f64, t: f64, l: f64) -> Result<f64> {
    if !(t > 0.0 && h > 0.0 && l >= 0.0) || d == 0 {
        return Err(Error::Domain("need d >= 1, h > 0, t > 0, L >= 0".into()));
    }
    let tau = t / (h * h);
    let m = (l / h + 1e-9).floor() as u64;
    let s_out = 2.0 * sum_sq_beyond(tau, m)?;
    let mut s_in = kernel_1d(tau, 0)?.powi(2);
    for u in 1..=m {
        s_in += 2.0 * kernel_1d(tau, u as i64)?.powi(2);
    }
    // (s_in + s_out)^d - s_in^d expanded to avoid cancellation
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 1..=d {
        binom = binom * (d - k + 1) as f64 / k as f64;
        total += binom * s_out.powi(k as i32) * s_in.powi((d - k) as i32);
    }
    Ok(total / h.powi(d as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub l_values: Vec<f64>,
    pub tails: Vec<f64>,
    /// `ν` in `tail <= γ e^{-ν L^2}`.
    pub nu: f64,
    pub log_gamma: f64,
    pub fit: LinearFit,
}

/// Least squares of `ln tail` against `L^2` over the given radii.
pub fn tail_fit(d: usize, h: f64, t: f64, l_values: &[f64]) -> Result<TailFit> {
    let tails = l_values
        .iter()
        .map(|&l| tail_mass_sq(d, h, t, l))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = l_values.iter().map(|l| l * l).collect();
    let y: Vec<f64> = tails.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(TailFit {
        l_values: l_values.to_vec(),
        tails,
        nu: -fit.slope,
        log_gamma: fit.intercept,
        fit,
    })
}
