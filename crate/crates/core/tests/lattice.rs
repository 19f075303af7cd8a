mod common;

use lattice_control::geometry::{periodic_equidistributed, thickness_report, ObservationMask};
use lattice_control::lattice::{
    backward_diff, central_diff, forward_diff, inner_product, io, laplacian, mean_op, sbp_residual, LatticeBox,
    ScalarField, Side,
};
use proptest::prelude::*;

fn random_field(dom: &LatticeBox, seed: u64) -> ScalarField<f64> {
    let mut rng = common::rng(seed);
    ScalarField::from_values(dom, common::uniform_vec(&mut rng, dom.len())).unwrap()
}

/// Zeroes the outermost layer so the field is supported strictly inside.
fn interior(u: &ScalarField<f64>) -> ScalarField<f64> {
    let dom = u.domain();
    let hi = dom.hi();
    let mut out = u.clone();
    for p in 0..dom.len() {
        let k = dom.index(p);
        if k.iter().zip(dom.lo()).zip(&hi).any(|((&x, &l), &h)| x == l || x == h) {
            out.values_mut()[p] = 0.0;
        }
    }
    out
}

fn boxes() -> impl Strategy<Value = LatticeBox> {
    (1usize..=2, 0usize..3, 3usize..9, 3usize..9).prop_map(|(d, hi, a, b)| {
        let h = [0.5, 0.25, 0.1][hi];
        let counts = if d == 1 { vec![a] } else { vec![a, b] };
        LatticeBox::from_parts(h, vec![-(a as i64) / 2; d], counts).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_is_sum_of_d_minus_d_plus(dom in boxes(), seed in any::<u64>()) {
        let u = random_field(&dom, seed);
        let lap = laplacian(&u);
        let mut acc = ScalarField::zeros(&dom);
        for axis in 0..dom.dim() {
            let term = backward_diff(&forward_diff(&u, axis).unwrap(), axis).unwrap().restrict_to(&dom).unwrap();
            acc = acc.add(&term).unwrap();
        }
        prop_assert_eq!(lap.values(), acc.values());
    }

    #[test]
    fn summation_by_parts_inside(dom in boxes(), seed in any::<u64>()) {
        let u = interior(&random_field(&dom, seed));
        let v = interior(&random_field(&dom, seed ^ 0x5555));
        for axis in 0..dom.dim() {
            let r = sbp_residual(&u, &v, axis).unwrap();
            prop_assert!(!r.touches_boundary);
            let scale = u.norm() * v.norm() / dom.h();
            prop_assert!(r.residual.abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn product_rule_forward(dom in boxes(), seed in any::<u64>()) {
        // D+(fg) = (D+f) M+g + (M+f) D+g
        let f = random_field(&dom, seed);
        let g = random_field(&dom, seed.wrapping_add(1));
        for axis in 0..dom.dim() {
            let lhs = forward_diff(&f.mul(&g).unwrap(), axis).unwrap();
            let a = forward_diff(&f, axis).unwrap().mul(&mean_op(&g, axis, Side::Forward).unwrap()).unwrap();
            let b = mean_op(&f, axis, Side::Forward).unwrap().mul(&forward_diff(&g, axis).unwrap()).unwrap();
            let rhs = a.add(&b).unwrap();
            let err = lhs.sub(&rhs).unwrap().max_abs();
            prop_assert!(err <= 1e-12 * lhs.max_abs().max(1.0));
        }
    }

    #[test]
    fn central_difference_is_mean_of_one_sided(dom in boxes(), seed in any::<u64>()) {
        let u = random_field(&dom, seed);
        for axis in 0..dom.dim() {
            let c = central_diff(&u, axis).unwrap().restrict_to(&dom).unwrap();
            let f = forward_diff(&u, axis).unwrap().restrict_to(&dom).unwrap();
            let b = backward_diff(&u, axis).unwrap().restrict_to(&dom).unwrap();
            let avg = f.add(&b).unwrap().scaled(0.5);
            prop_assert!(avg.sub(&c).unwrap().max_abs() <= 1e-12 * c.max_abs().max(1.0));
        }
    }

    #[test]
    fn negative_laplacian_is_positive(dom in boxes(), seed in any::<u64>()) {
        let u = random_field(&dom, seed);
        let q = inner_product(&laplacian(&u), &u).unwrap();
        prop_assert!(q <= 1e-12 * u.norm_sq() / (dom.h() * dom.h()));
    }

    #[test]
    fn byte_and_csv_round_trip(dom in boxes(), seed in any::<u64>()) {
        let u = random_field(&dom, seed);
        let back = io::from_bytes(&dom, &io::to_bytes(&u)).unwrap();
        prop_assert_eq!(back.values(), u.values());
        let mut buf = Vec::new();
        io::write_csv(&u, &mut buf).unwrap();
        let back = io::read_csv(&dom, buf.as_slice()).unwrap();
        prop_assert_eq!(back.values(), u.values());
    }

    #[test]
    fn positions_round_trip(dom in boxes(), pick in any::<prop::sample::Index>()) {
        let p = pick.index(dom.len());
        let k = dom.index(p);
        prop_assert_eq!(dom.position(&k), Some(p));
        prop_assert_eq!(dom.lattice_index(&dom.point(p)).unwrap(), k);
    }

    #[test]
    fn puncturing_shrinks_the_mask(r1 in 0.0f64..3.0, dr in 0.0f64..2.0, cx in -1.0f64..1.0) {
        let dom = LatticeBox::centered(1, 0.1, 4.0).unwrap();
        let full = ObservationMask::full(&dom);
        let a = full.punctured(&[cx], r1);
        let b = full.punctured(&[cx], r1 + dr);
        prop_assert!(a.is_subset_of(&full));
        prop_assert!(b.is_subset_of(&a));
    }

    #[test]
    fn equidistributed_mask_is_thick(gi in 0usize..3, li in 0usize..2) {
        let gamma = [0.25, 0.5, 1.0][gi];
        let l = [1.0, 2.0][li];
        let dom = LatticeBox::centered(2, 0.125, 3.0).unwrap();
        let mask = periodic_equidistributed(&dom, l, gamma, |_| vec![0.0, 0.0]).unwrap();
        prop_assert!(!mask.is_empty());
        let t = thickness_report(&mask, 2.0 * l).unwrap();
        prop_assert!(t.gamma_min > 0.0);
        if gamma == 1.0 {
            prop_assert_eq!(mask.count(), dom.len());
        }
    }
}

#[test]
fn operators_reject_bad_axis() {
    let dom = LatticeBox::centered(1, 0.5, 2.0).unwrap();
    let u = ScalarField::<f64>::zeros(&dom);
    assert!(forward_diff(&u, 1).is_err());
    assert!(sbp_residual(&u, &u, 3).is_err());
}

#[test]
fn delta_and_lattice_lookup() {
    let dom = LatticeBox::centered(2, 0.25, 1.0).unwrap();
    let d = ScalarField::delta(&dom, &[1, -2]).unwrap();
    assert_eq!(d.norm_sq(), 1.0);
    assert_eq!(d.eval(&[0.25, -0.5]).unwrap(), 1.0);
    assert!(dom.lattice_index(&[0.3, 0.0]).is_err());
    assert!(ScalarField::delta(&dom, &[10, 0]).is_err());
}

#[test]
fn thickness_of_full_and_empty_masks() {
    let dom = LatticeBox::centered(1, 0.1, 3.0).unwrap();
    assert_eq!(thickness_report(&ObservationMask::full(&dom), 1.0).unwrap().gamma_min, 1.0);
    assert_eq!(thickness_report(&ObservationMask::empty(&dom), 1.0).unwrap().gamma_min, 0.0);
    assert!(thickness_report(&ObservationMask::full(&dom), 100.0).is_err());
}

#[test]
fn equidistributed_density_counts_and_converges() {
    // h = 0.5, L = 2, γ = 1/2: the closed subcube [-0.5, 0.5] + 2k holds 3 of the 4 nodes per period.
    let dom = LatticeBox::from_parts(0.5, vec![-8], vec![16]).unwrap();
    let mask = periodic_equidistributed(&dom, 2.0, 0.5, |_| vec![0.0]).unwrap();
    assert_eq!(mask.count(), 12);

    let mut prev = f64::INFINITY;
    for h in [0.25, 0.125, 0.0625, 0.03125] {
        let dom = LatticeBox::centered(1, h, 8.0 - h).unwrap();
        let mask = periodic_equidistributed(&dom, 2.0, 0.5, |_| vec![0.0]).unwrap();
        let excess = mask.density() - 0.5;
        assert!(excess > 0.0 && excess < prev, "h = {h}: density {}", mask.density());
        prev = excess;
    }
    assert!(prev < 0.02);
}
