//! The discrete Schrödinger operator `P_h = -Δ_h + V` on a box: dense
//! eigendecomposition, spectral projectors, the heat semigroup and the
//! checks built on them.

mod cache;
mod caccioppoli;
mod lift;
mod localization;

pub use cache::{write_eigenvalues_csv, DecompositionCache};
pub use caccioppoli::{caccioppoli_check, CaccioppoliReport};
pub use lift::{elliptic_lift, elliptic_lift_dt, lift_factor, LiftResult};
pub use localization::{localization_check, LocalizationReport};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, ScalarField};

/// Largest box handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 4096;

/// Dense matrix of `P_h` in node order.
pub fn operator_matrix(potential: &ScalarField<f64>) -> DMatrix<f64> {
    let dom = potential.domain();
    let n = dom.len();
    let inv_h2 = 1.0 / (dom.h() * dom.h());
    let diag = 2.0 * dom.dim() as f64 * inv_h2;
    let mut m = DMatrix::zeros(n, n);
    let mut k = vec![0; dom.dim()];
    for p in 0..n {
        m[(p, p)] = diag + potential.values()[p];
        dom.index_into(p, &mut k);
        for axis in 0..dom.dim() {
            k[axis] += 1;
            if let Some(q) = dom.position(&k) {
                m[(p, q)] = -inv_h2;
                m[(q, p)] = -inv_h2;
            }
            k[axis] -= 1;
        }
    }
    m
}

/// Applies `P_h` to a column of node values by its stencil.
fn apply_stencil(potential: &ScalarField<f64>, u: &[f64], out: &mut [f64]) {
    let dom = potential.domain();
    let inv_h2 = 1.0 / (dom.h() * dom.h());
    let diag = 2.0 * dom.dim() as f64 * inv_h2;
    let mut k = vec![0; dom.dim()];
    for p in 0..dom.len() {
        dom.index_into(p, &mut k);
        let mut acc = (diag + potential.values()[p]) * u[p];
        for axis in 0..dom.dim() {
            k[axis] -= 1;
            if let Some(q) = dom.position(&k) {
                acc -= inv_h2 * u[q];
            }
            k[axis] += 2;
            if let Some(q) = dom.position(&k) {
                acc -= inv_h2 * u[q];
            }
            k[axis] -= 1;
        }
        out[p] = acc;
    }
}

/// `P_h u` for a field on the potential's box.
pub fn apply_operator(potential: &ScalarField<f64>, u: &ScalarField<f64>) -> Result<ScalarField<f64>> {
    potential.same_box(u)?;
    let mut out = vec![0.0; u.values().len()];
    apply_stencil(potential, u.values(), &mut out);
    ScalarField::from_values(u.domain(), out)
}

/// Ascending eigenvalues and orthonormal eigenvectors of `P_h`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    potential: ScalarField<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Decomposes `P_h` for the potential field's box.
pub fn assemble_and_decompose(potential: &ScalarField<f64>) -> Result<SpectralDecomposition> {
    SpectralDecomposition::new(potential)
}

impl SpectralDecomposition {
    pub fn new(potential: &ScalarField<f64>) -> Result<Self> {
        let n = potential.domain().len();
        if n > DENSE_LIMIT {
            return Err(Error::Domain(format!(
                "{n} unknowns exceed the dense eigensolver limit of {DENSE_LIMIT}"
            )));
        }
        let m = operator_matrix(potential);
        let eig = SymmetricEigen::try_new(m, 1e-15, 10_000 * n.max(1)).ok_or_else(|| Error::Solver {
            message: "symmetric eigensolver did not converge".into(),
            residuals: vec![],
        })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        let dec = Self::from_parts(potential.clone(), eigenvalues, eigenvectors);
        dec.check_residuals()?;
        Ok(dec)
    }

    pub(crate) fn from_parts(
        potential: ScalarField<f64>,
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
    ) -> Self {
        Self {
            potential,
            eigenvalues,
            eigenvectors,
        }
    }

    fn check_residuals(&self) -> Result<()> {
        let res = self.residuals();
        let bad = res
            .iter()
            .zip(&self.eigenvalues)
            .any(|(r, l)| *r > 1e-10 * l.abs().max(1.0));
        if bad {
            return Err(Error::Solver {
                message: "eigenpair residuals exceed 1e-10 max(1, |λ|)".into(),
                residuals: res,
            });
        }
        Ok(())
    }

    pub fn domain(&self) -> &LatticeBox {
        self.potential.domain()
    }

    pub fn potential(&self) -> &ScalarField<f64> {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvectors as matrix columns, in eigenvalue order.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> ScalarField<f64> {
        ScalarField::from_values(self.domain(), self.eigenvectors.column(k).iter().copied().collect())
            .expect("column length matches box")
    }

    /// `‖P_h φ_k - λ_k φ_k‖` for every pair.
    pub fn residuals(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        let mut col = vec![0.0; n];
        for (k, r) in out.iter_mut().enumerate() {
            let v = self.eigenvectors.column(k);
            apply_stencil(&self.potential, v.as_slice(), &mut col);
            *r = col
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - self.eigenvalues[k] * b).powi(2))
                .sum::<f64>()
                .sqrt();
        }
        out
    }

    /// `max |Φ^T Φ - I|`.
    pub fn gram_defect(&self) -> f64 {
        let g = self.eigenvectors.tr_mul(&self.eigenvectors);
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues `λ_k <= μ` (ties included).
    pub fn count_at_most(&self, mu: f64) -> usize {
        self.eigenvalues.partition_point(|&l| l <= mu)
    }

    /// Smallest eigenvalue strictly above `μ`.
    pub fn next_above(&self, mu: f64) -> Option<f64> {
        self.eigenvalues.get(self.count_at_most(mu)).copied()
    }

    /// Eigenbasis coefficients `c_k = <u, φ_k>`.
    pub fn coefficients(&self, u: &ScalarField<f64>) -> Result<DVector<f64>> {
        self.potential.same_box(u)?;
        Ok(self.eigenvectors.tr_mul(&DVector::from_column_slice(u.values())))
    }

    /// `Σ c_k φ_k`; missing trailing coefficients are zero.
    pub fn synthesize(&self, c: &DVector<f64>) -> ScalarField<f64> {
        let m = c.len();
        let v = self.eigenvectors.columns(0, m) * c;
        ScalarField::from_values(self.domain(), v.as_slice().to_vec()).expect("length matches box")
    }

    /// Orthogonal projection onto `span{φ_k : λ_k <= μ}`.
    pub fn project(&self, mu: f64, u: &ScalarField<f64>) -> Result<ScalarField<f64>> {
        let mut c = self.coefficients(u)?;
        for k in self.count_at_most(mu)..self.len() {
            c[k] = 0.0;
        }
        Ok(self.synthesize(&c))
    }

    pub fn projector(&self, mu: f64) -> SpectralProjector<'_> {
        SpectralProjector { dec: self, mu }
    }

    /// `S(t) u = e^{-t P_h} u`.
    pub fn semigroup_apply(&self, t: f64, u: &ScalarField<f64>) -> Result<ScalarField<f64>> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("semigroup time {t} must be nonnegative")));
        }
        if t == 0.0 {
            self.potential.same_box(u)?;
            return Ok(u.clone());
        }
        let mut c = self.coefficients(u)?;
        for (ck, l) in c.iter_mut().zip(&self.eigenvalues) {
            *ck *= (-l * t).exp();
        }
        Ok(self.synthesize(&c))
    }

    /// Content hash of the box and potential values.
    pub fn key(&self) -> String {
        cache::key_for(&self.potential)
    }
}

/// The spectral projector `Π_μ` as a linear map on fields.
#[derive(Debug, Clone, Copy)]
pub struct SpectralProjector<'a> {
    dec: &'a SpectralDecomposition,
    mu: f64,
}

impl SpectralProjector<'_> {
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn rank(&self) -> usize {
        self.dec.count_at_most(self.mu)
    }

    pub fn apply(&self, u: &ScalarField<f64>) -> Result<ScalarField<f64>> {
        self.dec.project(self.mu, u)
    }

    /// `(I - Π_μ) u`.
    pub fn complement(&self, u: &ScalarField<f64>) -> Result<ScalarField<f64>> {
        u.sub(&self.apply(u)?)
    }

    /// Dense matrix of the projector.
    pub fn matrix(&self) -> DMatrix<f64> {
        let phi = self.dec.eigenvectors.columns(0, self.rank());
        phi * phi.transpose()
    }
}

/// Dyadic spectral threshold `μ = 2^{2j}` with the mesh cap
/// `J_h = floor(log2(ε0 / h^2) / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectralThreshold {
    pub j: usize,
    pub j_h: usize,
    pub eps0: f64,
}

impl SpectralThreshold {
    pub fn new(j: usize, h: f64, eps0: f64) -> Result<Self> {
        let j_h = mesh_cap(h, eps0)?;
        if j > j_h {
            return Err(Error::Domain(format!("dyadic index {j} exceeds the mesh cap {j_h}")));
        }
        Ok(Self { j, j_h, eps0 })
    }

    pub fn mu(&self) -> f64 {
        dyadic_threshold(self.j)
    }
}

/// `2^{2j}`.
pub fn dyadic_threshold(j: usize) -> f64 {
    4f64.powi(j as i32)
}

/// `J_h = floor(log2(ε0 h^{-2}) / 2)`; an error when `ε0 / h^2 < 1`.
pub fn mesh_cap(h: f64, eps0: f64) -> Result<usize> {
    let ratio = eps0 / (h * h);
    if !(ratio >= 1.0) {
        return Err(Error::Domain(format!(
            "ε0 / h^2 = {ratio} < 1 leaves no dyadic threshold"
        )));
    }
    let mut j = (ratio.log2() / 2.0).floor() as usize;
    while dyadic_threshold(j + 1) <= ratio {
        j += 1;
    }
    while j > 0 && dyadic_threshold(j) > ratio {
        j -= 1;
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{restrict, PotentialSpec};

    #[test]
    fn three_node_path_spectrum() {
        let b = LatticeBox::centered(1, 1.0, 2.0).unwrap();
        let dec = SpectralDecomposition::new(&restrict(&PotentialSpec::zero(), &b)).unwrap();
        let expect = [0.585786437626905, 2.0, 3.414213562373095];
        for (a, e) in dec.eigenvalues().iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!(dec.gram_defect() < 1e-12);
    }

    #[test]
    fn mesh_cap_values() {
        assert_eq!(mesh_cap(0.2, 1.0).unwrap(), 2);
        assert_eq!(mesh_cap(0.1, 1.0).unwrap(), 3);
        assert_eq!(mesh_cap(0.05, 1.0).unwrap(), 4);
        assert_eq!(mesh_cap(0.5, 1.0).unwrap(), 1);
        assert!(mesh_cap(2.0, 1.0).is_err());
    }

    #[test]
    fn negative_time_rejected() {
        let b = LatticeBox::centered(1, 0.5, 2.0).unwrap();
        let dec = SpectralDecomposition::new(&restrict(&PotentialSpec::zero(), &b)).unwrap();
        let u = ScalarField::zeros(&b);
        assert!(matches!(dec.semigroup_apply(-1.0, &u), Err(Error::Domain(_))));
    }
}
