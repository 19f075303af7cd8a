//! Discrete product rule and summation by parts on a random 2-D field.

use lattice_control::lattice::{
    backward_diff, forward_diff, laplacian, mean_op, sbp_residual, LatticeBox, ScalarField, Side,
};

fn main() -> lattice_control::Result<()> {
    let dom = LatticeBox::centered(2, 0.1, 1.0)?;
    let bump = |x: &[f64]| (0.64 - x[0] * x[0] - x[1] * x[1]).max(0.0).powi(2);
    let f = ScalarField::from_fn(&dom, |x| (3.0 * x[0]).sin() * bump(x));
    let g = ScalarField::from_fn(&dom, |x| (x[0] * x[1]).exp() * bump(x));

    for axis in 0..dom.dim() {
        let lhs = forward_diff(&f.mul(&g)?, axis)?;
        let rhs = forward_diff(&f, axis)?
            .mul(&mean_op(&g, axis, Side::Forward)?)?
            .add(&mean_op(&f, axis, Side::Forward)?.mul(&forward_diff(&g, axis)?)?)?;
        println!("axis {axis}: product rule defect {:.2e}", lhs.sub(&rhs)?.max_abs());

        let r = sbp_residual(&f, &g, axis)?;
        println!("axis {axis}: summation by parts residual {:.2e} (boundary touched: {})", r.residual, r.touches_boundary);
    }

    let mut sum = ScalarField::zeros(&dom);
    for axis in 0..dom.dim() {
        sum = sum.add(&backward_diff(&forward_diff(&f, axis)?, axis)?.restrict_to(&dom)?)?;
    }
    println!("laplacian vs sum of D-D+: {:.2e}", laplacian(&f).sub(&sum)?.max_abs());
    Ok(())
}
