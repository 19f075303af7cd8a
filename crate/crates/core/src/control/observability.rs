use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::gramian::{constant_from_gramian, exp_integral, gramian_from_overlap, mask_overlap};
use crate::error::{Error, Result};
use crate::geometry::ObservationMask;
use crate::lattice::ScalarField;
use crate::schrodinger::SpectralDecomposition;

/// `∫_0^T ‖1_ω S(t) v‖^2 dt` for `v = Σ c_k φ_k`, exact in the eigenbasis.
pub fn observed_energy(
    dec: &SpectralDecomposition,
    mask: &ObservationMask,
    v: &ScalarField<f64>,
    t: f64,
) -> Result<f64> {
    let c = dec.coefficients(v)?;
    observed_energy_coeffs(dec, mask, &c, t)
}

pub(crate) fn observed_energy_coeffs(
    dec: &SpectralDecomposition,
    mask: &ObservationMask,
    c: &DVector<f64>,
    t: f64,
) -> Result<f64> {
    if mask.domain() != dec.domain() {
        return Err(Error::BoxMismatch("mask and decomposition live on different boxes".into()));
    }
    let lambda = dec.eigenvalues();
    let active: Vec<usize> = (0..c.len()).filter(|&i| c[i] != 0.0).collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let phi = dec.eigenvectors();
    let inside = mask.inside();
    let restricted = nalgebra::DMatrix::from_fn(phi.nrows(), active.len(), |r, a| {
        if inside[r] {
            phi[(r, active[a])]
        } else {
            0.0
        }
    });
    let overlap = restricted.tr_mul(&restricted);
    let mut acc = 0.0;
    for (a, &i) in active.iter().enumerate() {
        for (b, &k) in active.iter().enumerate() {
            acc += c[i] * c[k] * overlap[(a, b)] * exp_integral(lambda[i] + lambda[k], t);
        }
    }
    Ok(acc.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedReport {
    /// `‖v(0)‖^2`.
    pub lhs: f64,
    /// `K_T ∫_0^T ‖v(t)‖^2_ω dt`.
    pub rhs_observation: f64,
    /// `r ‖v_F‖^2`.
    pub rhs_remainder: f64,
    pub k_t: f64,
    pub remainder_coefficient: f64,
    /// Observability constant of `E_μ` over `[0, T/2]`.
    pub c_low: f64,
    pub lambda_plus: Option<f64>,
    pub passes: bool,
}

/// Adjoint observability with a high-frequency remainder for `v(t) = S(T - t) v_F`.
///
/// Splitting `v_F` at `μ` gives `K_T = 2 C_low` and
/// `r = C_low T e^{-λ⁺ T} + e^{-2 λ⁺ T}`, with `C_low` the observability
/// constant of `E_μ` over `[0, T/2]` and `λ⁺` the first eigenvalue above `μ`.
pub fn relaxed_observability_check(
    dec: &SpectralDecomposition,
    mask: &ObservationMask,
    v_f: &ScalarField<f64>,
    t: f64,
    mu: f64,
) -> Result<RelaxedReport> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("horizon T = {t} must be positive")));
    }
    let m = dec.count_at_most(mu);
    let overlap = mask_overlap(dec, mask, m)?;
    let c_low = constant_from_gramian(&gramian_from_overlap(&overlap, dec.eigenvalues(), m, t / 2.0)).value;
    let lambda_plus = dec.next_above(mu);
    let remainder = match lambda_plus {
        Some(lp) => c_low * t * (-lp * t).exp() + (-2.0 * lp * t).exp(),
        None => 0.0,
    };
    let mut report = relaxed_observability_check_with(dec, mask, v_f, t, 2.0 * c_low, remainder)?;
    report.c_low = c_low;
    report.lambda_plus = lambda_plus;
    Ok(report)
}

/// Same inequality with caller-supplied `K_T` and remainder coefficient.
pub fn relaxed_observability_check_with(
    dec: &SpectralDecomposition,
    mask: &ObservationMask,
    v_f: &ScalarField<f64>,
    t: f64,
    k_t: f64,
    remainder_coefficient: f64,
) -> Result<RelaxedReport> {
    let c = dec.coefficients(v_f)?;
    let lambda = dec.eigenvalues();
    let lhs: f64 = c
        .iter()
        .zip(lambda)
        .map(|(ci, l)| (-2.0 * l * t).exp() * ci * ci)
        .sum();
    let energy = observed_energy_coeffs(dec, mask, &c, t)?;
    let rhs_observation = if energy == 0.0 { 0.0 } else { k_t * energy };
    let rhs_remainder = remainder_coefficient * c.norm_squared();
    Ok(RelaxedReport {
        lhs,
        rhs_observation,
        rhs_remainder,
        k_t,
        remainder_coefficient,
        c_low: f64::NAN,
        lambda_plus: None,
        passes: lhs <= (rhs_observation + rhs_remainder) * (1.0 + 1e-10),
    })
}
