use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::geometry::ObservationMask;
use crate::lattice::ScalarField;
use crate::schrodinger::SpectralDecomposition;

/// Threshold below which the restricted Gram matrix is treated as singular.
pub const SINGULAR_SIGMA: f64 = 1e-14;

/// The sharp constant in `‖u‖^2 <= C ‖u‖^2_ω` over `u ∈ E_μ`.
#[derive(Debug, Clone)]
pub struct SpectralCertificate {
    pub mu: f64,
    pub dim: usize,
    /// Smallest eigenvalue of `<1_ω φ_i, 1_ω φ_k>` over the `E_μ` basis.
    pub sigma_min: f64,
    /// `1 / sigma_min`, or infinity when not observable.
    pub constant: f64,
    pub observable: bool,
    /// Unit vector of `E_μ` attaining the constant.
    pub minimizer: ScalarField<f64>,
}

/// Gram matrix `Φ_m^T D_ω Φ_m` of the first `m` eigenvectors restricted to `ω`.
pub fn restricted_gram(dec: &SpectralDecomposition, mask: &ObservationMask, m: usize) -> Result<DMatrix<f64>> {
    if mask.domain() != dec.domain() {
        return Err(Error::BoxMismatch("mask and decomposition boxes differ".into()));
    }
    let rows: Vec<usize> = (0..mask.inside().len()).filter(|&p| mask.inside()[p]).collect();
    let phi = dec.eigenvectors();
    let sub = DMatrix::from_fn(rows.len(), m, |r, c| phi[(rows[r], c)]);
    Ok(sub.tr_mul(&sub))
}

/// Sharp spectral-inequality constant on `E_μ` for the mask.
pub fn optimal_constant(
    dec: &SpectralDecomposition,
    mu: f64,
    mask: &ObservationMask,
) -> Result<SpectralCertificate> {
    let m = dec.count_at_most(mu);
    if m == 0 {
        return Err(Error::Domain(format!("E_μ is empty for μ = {mu}")));
    }
    let g = restricted_gram(dec, mask, m)?;
    let eig = SymmetricEigen::new(g);
    let (imin, &sigma_min) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("m >= 1");
    let coeffs = eig.eigenvectors.column(imin).clone_owned();
    let observable = sigma_min > SINGULAR_SIGMA;
    Ok(SpectralCertificate {
        mu,
        dim: m,
        sigma_min,
        constant: if observable { 1.0 / sigma_min } else { f64::INFINITY },
        observable,
        minimizer: dec.synthesize(&coeffs),
    })
}

/// Regressor for the exponent of the spectral inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KappaRegressor {
    /// `sqrt(μ)`.
    Plain,
    /// `sqrt(1 + ‖V‖_∞^{4/3} + μ)`.
    Bounded { v_linf: f64 },
    /// `sqrt(1 + ‖V‖_{W^{1,∞}} + μ)`.
    BoundedC1 { v_w1inf: f64 },
}

impl KappaRegressor {
    pub fn regressor(&self, mu: f64) -> f64 {
        match *self {
            Self::Plain => mu.sqrt(),
            Self::Bounded { v_linf } => (1.0 + v_linf.powf(4.0 / 3.0) + mu).sqrt(),
            Self::BoundedC1 { v_w1inf } => (1.0 + v_w1inf + mu).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaFit {
    /// Slope of `ln C*` against the square-root regressor.
    pub kappa: f64,
    /// Intercept, i.e. `ln C` of the prefactor.
    pub offset: f64,
    pub sqrt_fit: LinearFit,
    /// Competing fit of `ln C*` against `μ`.
    pub linear_fit: LinearFit,
    /// The square-root model fits at least as well as the linear one.
    pub sublinear: bool,
    pub points_used: usize,
}

/// Fits `ln C*(μ) ≈ offset + κ x(μ)` over the finite certificates and
/// compares it with a fit linear in `μ`.
pub fn kappa_fit(points: &[(f64, f64)], regressor: KappaRegressor) -> Result<KappaFit> {
    let finite: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(_, c)| c.is_finite() && *c > 0.0)
        .collect();
    if finite.len() < 4 {
        return Err(Error::Fit(format!(
            "{} finite certificates, at least 4 needed",
            finite.len()
        )));
    }
    let y: Vec<f64> = finite.iter().map(|p| p.1.ln()).collect();
    let xs: Vec<f64> = finite.iter().map(|p| regressor.regressor(p.0)).collect();
    let xl: Vec<f64> = finite.iter().map(|p| p.0).collect();
    let sqrt_fit = linear_fit(&xs, &y)?;
    let lin = linear_fit(&xl, &y)?;
    Ok(KappaFit {
        kappa: sqrt_fit.slope,
        offset: sqrt_fit.intercept,
        sublinear: sqrt_fit.rss <= lin.rss,
        sqrt_fit,
        linear_fit: lin,
        points_used: finite.len(),
    })
}
