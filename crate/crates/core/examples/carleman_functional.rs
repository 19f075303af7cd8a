//! Both sides of the discrete parabolic Carleman estimate for separable test
//! fields vanishing at t = 0.

use std::f64::consts::PI;

use lattice_control::certificates::{
    build_weight, carleman_sides, uniform_times, CarlemanDials, CarlemanGeometry, SpaceTimeField,
};
use lattice_control::geometry::periodic_equidistributed;
use lattice_control::lattice::{LatticeBox, ScalarField};
use lattice_control::potentials::PotentialExpr;

fn main() -> lattice_control::Result<()> {
    let zero = PotentialExpr::Constant { value: 0.0 };
    for h in [0.05, 0.025] {
        let q = LatticeBox::open_cube(h, &[0.0], 1.0)?;
        let mask = periodic_equidistributed(&LatticeBox::centered(1, h, 3.0)?, 2.0, 0.5, |_| vec![0.0])?;
        let geometry = CarlemanGeometry {
            center: vec![0.0],
            side: 2.0,
            t_star: 1.0,
        };
        let weight = build_weight(&geometry, &mask, 2.0, 0.05)?;
        for k in 1..=3 {
            let spatial = ScalarField::from_fn(&q, |x| (k as f64 * PI * (x[0] + 1.0) / 2.0).sin());
            let field = SpaceTimeField::separable(&spatial, uniform_times(1.0, 101), |t| (t * t, 2.0 * t, 2.0));
            let r = carleman_sides(&field, &weight, 5.0, &zero, &zero, &mask, CarlemanDials::default())?;
            println!("h = {h}  mode {k}: lhs/rhs = {:.4}", r.ratio);
            if h != 0.05 || k != 1 {
                continue;
            }
            for term in r.lhs_terms.iter().chain(&r.rhs_terms) {
                println!("    {:<40} {:.4e}", term.name, term.value);
            }
        }
    }
    Ok(())
}
