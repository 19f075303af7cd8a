use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{lattice_multiple, LatticeBox, ScalarField};
use crate::potentials::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliReport {
    /// `‖D+ φ‖^2` summed over axes on `Q_L(x0)`.
    pub lhs_plus: f64,
    /// `‖D- φ‖^2` summed over axes on `Q_L(x0)`.
    pub lhs_minus: f64,
    /// `2 (72 / L^2 + ‖V‖_∞) ‖φ‖^2` on `Q_2L(x0)`.
    pub rhs: f64,
    pub passes: bool,
    /// Max-norm residual of the interior linear solve.
    pub solve_residual: f64,
}

/// Solves `(-Δ_h + V) φ = 0` inside the closed cube `x0 + [-L, L]^d` with `φ`
/// prescribed by `boundary_data` on its faces, then compares the local
/// gradient energy on `x0 + [-L/2, L/2]^d` against the Caccioppoli bound.
pub fn caccioppoli_check(
    domain: &LatticeBox,
    potential: &PotentialSpec,
    l: f64,
    x0: &[f64],
    mut boundary_data: impl FnMut(&[f64]) -> f64,
) -> Result<CaccioppoliReport> {
    let h = domain.h();
    if !(h < 0.5 && l > 1.0) {
        return Err(Error::Domain(format!("need h < 1/2 and L > 1, got h = {h}, L = {l}")));
    }
    let m = lattice_multiple(l, h)
        .ok_or_else(|| Error::Domain(format!("L = {l} is not a multiple of h = {h}")))?;
    if !domain.contains_closed_cube(x0, l) {
        return Err(Error::Domain("box does not contain the closed cube Q_2L(x0)".into()));
    }
    let interior = LatticeBox::open_cube(h, x0, l)?;
    let mut closed = interior.clone();
    for axis in 0..closed.dim() {
        closed = closed.grown(axis, 1, 1);
    }
    let center = domain.lattice_index(x0)?;
    let d = closed.dim();
    let mut phi = ScalarField::<f64>::zeros(&closed);
    let vals: Vec<f64> = (0..closed.len())
        .map(|p| potential.value(&closed.point(p)))
        .collect();
    for p in 0..closed.len() {
        if interior.position(&closed.index(p)).is_none() {
            phi.values_mut()[p] = boundary_data(&closed.point(p));
        }
    }

    let n = interior.len();
    let inv_h2 = 1.0 / (h * h);
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let mut k = vec![0; d];
    for p in 0..n {
        interior.index_into(p, &mut k);
        let cp = closed.position(&k).expect("interior inside closed cube");
        a[(p, p)] = 2.0 * d as f64 * inv_h2 + vals[cp];
        for axis in 0..d {
            for step in [-1i64, 1] {
                k[axis] += step;
                match interior.position(&k) {
                    Some(q) => a[(p, q)] = -inv_h2,
                    None => b[p] += inv_h2 * phi.at(&k),
                }
                k[axis] -= step;
            }
        }
    }
    let lu = a.clone().lu();
    let diag = lu.u().diagonal();
    let umax = diag.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let umin = diag.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if !(umin > 1e-13 * umax) {
        return Err(Error::Solver {
            message: "interior Dirichlet system is singular".into(),
            residuals: vec![umin, umax],
        });
    }
    let sol = lu.solve(&b).ok_or_else(|| Error::Solver {
        message: "interior Dirichlet system is singular".into(),
        residuals: vec![],
    })?;
    let solve_residual = (&a * &sol - &b).amax();
    for p in 0..n {
        interior.index_into(p, &mut k);
        let cp = closed.position(&k).expect("inside");
        phi.values_mut()[cp] = sol[p];
    }

    // nodes with |x - x0|_∞ <= L/2
    let r_inner = m / 2;
    let (mut lhs_plus, mut lhs_minus) = (0.0, 0.0);
    for p in 0..closed.len() {
        closed.index_into(p, &mut k);
        let in_ql = k.iter().zip(&center).all(|(a, c)| (a - c).abs() <= r_inner);
        if !in_ql {
            continue;
        }
        let c = phi.values()[p];
        for axis in 0..d {
            k[axis] += 1;
            let nxt = phi.at(&k);
            k[axis] -= 2;
            let prv = phi.at(&k);
            k[axis] += 1;
            lhs_plus += ((nxt - c) / h).powi(2);
            lhs_minus += ((c - prv) / h).powi(2);
        }
    }
    let v_sup = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let rhs = 2.0 * (72.0 / (l * l) + v_sup) * phi.norm_sq();
    Ok(CaccioppoliReport {
        passes: lhs_plus <= rhs && lhs_minus <= rhs,
        lhs_plus,
        lhs_minus,
        rhs,
        solve_residual,
    })
}
