use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::geometry::ObservationMask;
use crate::schrodinger::{dyadic_threshold, SpectralDecomposition};

/// `∫_0^τ e^{-a s} ds`, including `a = 0` and `a < 0`.
pub fn exp_integral(a: f64, tau: f64) -> f64 {
    if a == 0.0 {
        tau
    } else {
        -(-a * tau).exp_m1() / a
    }
}

fn check_mask(dec: &SpectralDecomposition, mask: &ObservationMask) -> Result<()> {
    if mask.domain() != dec.domain() {
        return Err(Error::BoxMismatch("mask and decomposition live on different boxes".into()));
    }
    Ok(())
}

/// `⟨1_ω φ_i, 1_ω φ_k⟩` for every mode `i` and the first `m` modes `k`.
pub(crate) fn mask_overlap(dec: &SpectralDecomposition, mask: &ObservationMask, m: usize) -> Result<DMatrix<f64>> {
    check_mask(dec, mask)?;
    let phi = dec.eigenvectors();
    let mut weighted = phi.columns(0, m).into_owned();
    for (r, &inside) in mask.inside().iter().enumerate() {
        if !inside {
            weighted.row_mut(r).fill(0.0);
        }
    }
    Ok(phi.tr_mul(&weighted))
}

/// Gramian of `∫_0^τ S(t) 1_ω S(t) dt` on the first `m` modes.
pub(crate) fn gramian_from_overlap(overlap: &DMatrix<f64>, eigenvalues: &[f64], m: usize, tau: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, k| {
        overlap[(i, k)] * exp_integral(eigenvalues[i] + eigenvalues[k], tau)
    })
}

/// HUM Gramian on `E_j = span{φ_k : λ_k <= 2^{2j}}` for a window of length `τ`.
pub fn window_gramian(dec: &SpectralDecomposition, mask: &ObservationMask, j: usize, tau: f64) -> Result<DMatrix<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("window length {tau} must be nonnegative")));
    }
    let m = dec.count_at_most(dyadic_threshold(j));
    let overlap = mask_overlap(dec, mask, m)?;
    Ok(gramian_from_overlap(&overlap, dec.eigenvalues(), m, tau))
}

pub(crate) fn min_eigenvalue(g: &DMatrix<f64>) -> f64 {
    if g.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(g.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Positive-definiteness threshold `1e-12 trace / m`.
pub(crate) fn singular_threshold(g: &DMatrix<f64>) -> f64 {
    1e-12 * g.trace() / g.nrows().max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityConstant {
    /// `1 / min-eig`; infinite when the Gramian is numerically singular.
    pub value: f64,
    pub min_eig: f64,
    pub threshold: f64,
    pub singular: bool,
    pub modes: usize,
}

/// `C_obs(T) = 1 / λ_min(G_j(T))`.
pub fn observability_constant(
    dec: &SpectralDecomposition,
    mask: &ObservationMask,
    j: usize,
    t: f64,
) -> Result<ObservabilityConstant> {
    let g = window_gramian(dec, mask, j, t)?;
    Ok(constant_from_gramian(&g))
}

pub(crate) fn constant_from_gramian(g: &DMatrix<f64>) -> ObservabilityConstant {
    let min_eig = min_eigenvalue(g);
    let threshold = singular_threshold(g);
    let singular = g.nrows() > 0 && !(min_eig > threshold);
    ObservabilityConstant {
        value: if g.nrows() == 0 {
            0.0
        } else if singular {
            f64::INFINITY
        } else {
            1.0 / min_eig
        },
        min_eig,
        threshold,
        singular,
        modes: g.nrows(),
    }
}

/// Fit of `log(T C_obs) = log C + κ (1 + ‖V‖_∞^{2/3}) 2^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityFit {
    pub log_c: f64,
    pub kappa: f64,
    pub fit: LinearFit,
}

/// `samples` are `(j, T, C_obs)` triples; singular entries are skipped.
pub fn fit_observability(samples: &[(usize, f64, f64)], v_linf: f64) -> Result<ObservabilityFit> {
    let growth = 1.0 + v_linf.powf(2.0 / 3.0);
    let (x, y): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|(_, t, c)| c.is_finite() && *c > 0.0 && *t > 0.0)
        .map(|&(j, t, c)| (growth * 2f64.powi(j as i32), (t * c).ln()))
        .unzip();
    let fit = linear_fit(&x, &y)?;
    Ok(ObservabilityFit {
        log_c: fit.intercept,
        kappa: fit.slope,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeBox, ScalarField};

    #[test]
    fn exp_integral_limits() {
        assert_eq!(exp_integral(0.0, 2.5), 2.5);
        assert!((exp_integral(2.0, 1.0) - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-16);
        assert!((exp_integral(1e-14, 1.0) - 1.0).abs() < 1e-13);
        assert!((exp_integral(-1.0, 1.0) - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn single_mode_full_mask() {
        let b = LatticeBox::centered(1, 1.0, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&ScalarField::from_fn(&b, |_| -1.0)).unwrap();
        assert!((dec.eigenvalues()[0] - 1.0).abs() < 1e-14);
        let g = window_gramian(&dec, &ObservationMask::full(&b), 0, 1.0).unwrap();
        assert!((g[(0, 0)] - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
        let c = observability_constant(&dec, &ObservationMask::full(&b), 0, 1.0).unwrap();
        assert!((c.value * c.min_eig - 1.0).abs() < 1e-15);
    }
}
