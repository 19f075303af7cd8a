//! Difference operators on zero-extended lattice fields.
//!
//! Operators whose stencil reaches outside the box return a field on the
//! box grown by the stencil width, so no information is lost to truncation.

use super::{Scalar, ScalarField};
use crate::error::{Error, Result};

/// Direction of a one-sided operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Forward,
    Backward,
}

/// Evaluates `f(u(x - h e_j), u(x), u(x + h e_j))` on the box grown by
/// `(low, high)` nodes along `axis`.
fn stencil<T: Scalar>(
    u: &ScalarField<T>,
    axis: usize,
    low: usize,
    high: usize,
    f: impl Fn(T, T, T) -> T,
) -> Result<ScalarField<T>> {
    u.domain().check_axis(axis)?;
    let out_box = u.domain().grown(axis, low, high);
    let mut k = vec![0; out_box.dim()];
    let mut values = Vec::with_capacity(out_box.len());
    for p in 0..out_box.len() {
        out_box.index_into(p, &mut k);
        let c = u.at(&k);
        k[axis] -= 1;
        let m = u.at(&k);
        k[axis] += 2;
        let n = u.at(&k);
        values.push(f(m, c, n));
    }
    ScalarField::from_values(&out_box, values)
}

/// `D+_j u(x) = (u(x + h e_j) - u(x)) / h`, on the box grown by one node below.
pub fn forward_diff<T: Scalar>(u: &ScalarField<T>, axis: usize) -> Result<ScalarField<T>> {
    let inv_h = 1.0 / u.domain().h();
    stencil(u, axis, 1, 0, |_, c, n| (n - c).scale(inv_h))
}

/// `D-_j u(x) = (u(x) - u(x - h e_j)) / h`, on the box grown by one node above.
pub fn backward_diff<T: Scalar>(u: &ScalarField<T>, axis: usize) -> Result<ScalarField<T>> {
    let inv_h = 1.0 / u.domain().h();
    stencil(u, axis, 0, 1, |m, c, _| (c - m).scale(inv_h))
}

/// `M±_j u(x) = (u(x ± h e_j) + u(x)) / 2`.
pub fn mean_op<T: Scalar>(u: &ScalarField<T>, axis: usize, side: Side) -> Result<ScalarField<T>> {
    match side {
        Side::Forward => stencil(u, axis, 1, 0, |_, c, n| (n + c).scale(0.5)),
        Side::Backward => stencil(u, axis, 0, 1, |m, c, _| (m + c).scale(0.5)),
    }
}

/// `(u(x + h e_j) - u(x - h e_j)) / 2h`, on the box grown by one node on both sides.
pub fn central_diff<T: Scalar>(u: &ScalarField<T>, axis: usize) -> Result<ScalarField<T>> {
    let inv_2h = 0.5 / u.domain().h();
    stencil(u, axis, 1, 1, |m, _, n| (n - m).scale(inv_2h))
}

/// Dirichlet Laplacian `Δ_h u` on the interior nodes of the box.
///
/// Each axis term is evaluated as `(D+u(x) - D+u(x - h e_j)) / h` and the
/// axes are summed in order, which makes the result bit-identical to
/// `Σ_j D-_j D+_j u` restricted to the box.
pub fn laplacian<T: Scalar>(u: &ScalarField<T>) -> ScalarField<T> {
    let dom = u.domain();
    let inv_h = 1.0 / dom.h();
    let mut k = vec![0; dom.dim()];
    let mut values = vec![T::zero(); dom.len()];
    for (p, out) in values.iter_mut().enumerate() {
        dom.index_into(p, &mut k);
        let c = u.values()[p];
        let mut acc = T::zero();
        for axis in 0..dom.dim() {
            k[axis] -= 1;
            let m = u.at(&k);
            k[axis] += 2;
            let n = u.at(&k);
            k[axis] -= 1;
            let fwd = (n - c).scale(inv_h);
            let bwd = (c - m).scale(inv_h);
            acc += (fwd - bwd).scale(inv_h);
        }
        *out = acc;
    }
    ScalarField::from_values(dom, values).expect("length matches box")
}

/// Sesquilinear `Σ u(x) conj(v(x))` over the lattice.
pub fn inner_product<T: Scalar>(u: &ScalarField<T>, v: &ScalarField<T>) -> Result<T> {
    u.same_box(v)?;
    let mut acc = T::zero();
    for (&a, &b) in u.values().iter().zip(v.values()) {
        acc += a * b.conj();
    }
    Ok(acc)
}

/// Result of a summation-by-parts evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbpReport<T> {
    /// `Σ v D+u + Σ u D-v`.
    pub residual: T,
    /// Either field is nonzero on the outermost interior layer of the box.
    pub touches_boundary: bool,
}

/// Evaluates `Σ_x v D+_j u + Σ_x u D-_j v`, which vanishes for fields
/// supported strictly inside the box.
pub fn sbp_residual<T: Scalar>(
    u: &ScalarField<T>,
    v: &ScalarField<T>,
    axis: usize,
) -> Result<SbpReport<T>> {
    u.same_box(v)?;
    u.domain().check_axis(axis)?;
    let dom = u.domain();
    let inv_h = 1.0 / dom.h();
    let mut k = vec![0; dom.dim()];
    let mut first = T::zero();
    let mut second = T::zero();
    for p in 0..dom.len() {
        dom.index_into(p, &mut k);
        let (uc, vc) = (u.values()[p], v.values()[p]);
        k[axis] += 1;
        let un = u.at(&k);
        k[axis] -= 2;
        let vm = v.at(&k);
        k[axis] += 1;
        first += vc * (un - uc).scale(inv_h);
        second += uc * (vc - vm).scale(inv_h);
    }
    Ok(SbpReport {
        residual: first + second,
        touches_boundary: touches_boundary(u) || touches_boundary(v),
    })
}

fn touches_boundary<T: Scalar>(u: &ScalarField<T>) -> bool {
    let dom = u.domain();
    let hi = dom.hi();
    let mut k = vec![0; dom.dim()];
    (0..dom.len()).any(|p| {
        if u.values()[p] == T::zero() {
            return false;
        }
        dom.index_into(p, &mut k);
        k.iter()
            .zip(dom.lo())
            .zip(&hi)
            .any(|((&x, &l), &h)| x == l || x == h)
    })
}

/// Adds `b` into `a` after zero-extending both to a common box (`a` must contain `b`).
pub fn accumulate<T: Scalar>(a: &mut ScalarField<T>, b: &ScalarField<T>) -> Result<()> {
    if !a.domain().contains_box(b.domain()) {
        return Err(Error::BoxMismatch("accumulator box must contain the summand box".into()));
    }
    let dom = b.domain().clone();
    let mut k = vec![0; dom.dim()];
    for p in 0..dom.len() {
        dom.index_into(p, &mut k);
        let q = a.domain().position(&k).expect("contained");
        a.values_mut()[q] += b.values()[p];
    }
    Ok(())
}
