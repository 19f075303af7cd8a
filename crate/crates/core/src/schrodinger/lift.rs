use super::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::lattice::ScalarField;

/// `sinh(√λ t) / √λ`, continued analytically to `λ <= 0`.
pub fn lift_factor(lambda: f64, t: f64) -> f64 {
    let x = lambda.abs().sqrt() * t;
    if x < 1e-4 {
        // series in λ t^2 avoids cancellation near λ = 0
        let z = lambda * t * t;
        return t * (1.0 + z / 6.0 + z * z / 120.0);
    }
    if lambda > 0.0 {
        x.sinh() / lambda.sqrt()
    } else {
        x.sin() / (-lambda).sqrt()
    }
}

/// `∂_t` of [`lift_factor`]: `cosh(√λ t)`, or `cos(√|λ| t)` for `λ < 0`.
fn lift_factor_dt(lambda: f64, t: f64) -> f64 {
    let x = lambda.abs().sqrt() * t;
    if lambda >= 0.0 {
        x.cosh()
    } else {
        x.cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftResult {
    pub field: ScalarField<f64>,
    /// Some retained eigenvalue was negative and the trigonometric
    /// continuation was used.
    pub continued: bool,
}

fn lift_with(
    dec: &SpectralDecomposition,
    mu: f64,
    v: &ScalarField<f64>,
    t: f64,
    factor: fn(f64, f64) -> f64,
) -> Result<LiftResult> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("lift time {t} must be nonnegative")));
    }
    let mut c = dec.coefficients(v)?;
    let m = dec.count_at_most(mu);
    let lams = dec.eigenvalues();
    for k in 0..c.len() {
        c[k] = if k < m { c[k] * factor(lams[k], t) } else { 0.0 };
    }
    Ok(LiftResult {
        field: dec.synthesize(&c),
        continued: lams[..m].iter().any(|&l| l < 0.0),
    })
}

/// `ṽ(t) = Σ_{λ_k <= μ} c_k sinh(√λ_k t)/√λ_k φ_k` for `v` projected onto `E_μ`;
/// solves `∂_t^2 ṽ = P_h ṽ` with `ṽ(0) = 0`, `∂_t ṽ(0) = Π_μ v`.
pub fn elliptic_lift(
    dec: &SpectralDecomposition,
    mu: f64,
    v: &ScalarField<f64>,
    t: f64,
) -> Result<LiftResult> {
    lift_with(dec, mu, v, t, lift_factor)
}

/// Time derivative of [`elliptic_lift`].
pub fn elliptic_lift_dt(
    dec: &SpectralDecomposition,
    mu: f64,
    v: &ScalarField<f64>,
    t: f64,
) -> Result<LiftResult> {
    lift_with(dec, mu, v, t, lift_factor_dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_limits() {
        assert_eq!(lift_factor(0.0, 2.5), 2.5);
        assert!((lift_factor(4.0, 1.0) - 2f64.sinh() / 2.0).abs() < 1e-15);
        assert!((lift_factor(-4.0, 1.0) - 2f64.sin() / 2.0).abs() < 1e-15);
        let near = lift_factor(1e-12, 3.0);
        assert!((near - 3.0).abs() < 1e-10);
    }
}
