mod common;

use lattice_control::certificates::{kappa_fit, optimal_constant, restricted_gram, KappaRegressor};
use lattice_control::geometry::ObservationMask;
use lattice_control::heat_kernel::{feynman_kac_sandwich_check, kernel, kernel_1d, zeta, zeta_bounds_check};
use lattice_control::lattice::{LatticeBox, ScalarField};
use lattice_control::potentials::{restrict, sup_norms, PotentialSpec};
use lattice_control::schrodinger::{apply_operator, operator_matrix, SpectralDecomposition};
use proptest::prelude::*;

fn random_potential(dom: &LatticeBox, seed: u64, lo: f64, hi: f64) -> ScalarField<f64> {
    let mut rng = common::rng(seed);
    let v = common::uniform_vec(&mut rng, dom.len());
    ScalarField::from_values(dom, v.iter().map(|x| lo + (hi - lo) * (x + 1.0) / 2.0).collect()).unwrap()
}

fn random_field(dom: &LatticeBox, seed: u64) -> ScalarField<f64> {
    let mut rng = common::rng(seed);
    ScalarField::from_values(dom, common::uniform_vec(&mut rng, dom.len())).unwrap()
}

#[test]
fn decomposition_diagonalizes_the_operator() {
    let dom = LatticeBox::centered(2, 0.25, 1.5).unwrap();
    let v = random_potential(&dom, 1, -2.0, 5.0);
    let dec = SpectralDecomposition::new(&v).unwrap();
    assert!(dec.residuals().into_iter().fold(0.0, f64::max) < 1e-10);
    assert!(dec.gram_defect() < 1e-12);
    assert!(dec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    let m = operator_matrix(&v);
    assert!((&m - m.transpose()).amax() == 0.0);
    let u = random_field(&dom, 2);
    let direct = apply_operator(&v, &u).unwrap();
    let via = nalgebra::DVector::from_column_slice(u.values());
    let via = &m * via;
    for (a, b) in direct.values().iter().zip(via.iter()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn semigroup_of_eigenvector_is_exponential() {
    let dom = LatticeBox::centered(1, 0.2, 2.0).unwrap();
    let dec = SpectralDecomposition::new(&random_potential(&dom, 3, 0.0, 1.0)).unwrap();
    for k in [0, 5, dec.len() - 1] {
        let phi = dec.eigenvector(k);
        let s = dec.semigroup_apply(0.01, &phi).unwrap();
        let expected = phi.scaled((-dec.eigenvalues()[k] * 0.01).exp());
        assert!(s.sub(&expected).unwrap().max_abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semigroup_contracts_at_lowest_rate(seed in any::<u64>(), t in 0.0f64..2.0) {
        let dom = LatticeBox::centered(1, 0.25, 2.0).unwrap();
        let dec = SpectralDecomposition::new(&random_potential(&dom, seed, -1.0, 3.0)).unwrap();
        let u = random_field(&dom, seed ^ 7);
        let s = dec.semigroup_apply(t, &u).unwrap();
        let bound = (-dec.eigenvalues()[0] * t).exp() * u.norm();
        prop_assert!(s.norm() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn projector_is_orthogonal(seed in any::<u64>(), frac in 0.0f64..1.0) {
        let dom = LatticeBox::centered(1, 0.25, 2.0).unwrap();
        let dec = SpectralDecomposition::new(&random_potential(&dom, seed, 0.0, 2.0)).unwrap();
        let lam = dec.eigenvalues();
        let mu = lam[0] + frac * (lam[lam.len() - 1] - lam[0]);
        let p = dec.projector(mu);
        let u = random_field(&dom, seed ^ 1);
        let pu = p.apply(&u).unwrap();
        let qu = p.complement(&u).unwrap();
        prop_assert!(pu.add(&qu).unwrap().sub(&u).unwrap().max_abs() < 1e-12);
        prop_assert!(pu.dot(&qu).unwrap().abs() < 1e-12 * u.norm_sq());
        prop_assert!(p.apply(&pu).unwrap().sub(&pu).unwrap().max_abs() < 1e-12);
        prop_assert_eq!(p.rank(), dec.count_at_most(mu));
    }

    #[test]
    fn certificate_grows_as_the_mask_shrinks(seed in any::<u64>(), r in 0.3f64..1.5, k in 1usize..12) {
        let dom = LatticeBox::centered(1, 0.1, 2.0).unwrap();
        let dec = SpectralDecomposition::new(&random_potential(&dom, seed, 0.0, 1.0)).unwrap();
        let mu = dec.eigenvalues()[k - 1];
        let big = ObservationMask::from_fn(&dom, |x| x[0].abs() <= r);
        let small = ObservationMask::from_fn(&dom, |x| x[0].abs() <= 0.5 * r);
        let cb = optimal_constant(&dec, mu, &big).unwrap();
        let cs = optimal_constant(&dec, mu, &small).unwrap();
        prop_assert!(cb.constant >= 1.0 - 1e-12);
        prop_assert!(cs.constant >= cb.constant * (1.0 - 1e-9));
    }

    #[test]
    fn certificate_grows_with_mu(seed in any::<u64>(), k in 1usize..20) {
        let dom = LatticeBox::centered(1, 0.1, 2.0).unwrap();
        let dec = SpectralDecomposition::new(&random_potential(&dom, seed, 0.0, 1.0)).unwrap();
        let mask = ObservationMask::from_fn(&dom, |x| (x[0] - 0.3).abs() <= 0.5);
        let lam = dec.eigenvalues();
        let a = optimal_constant(&dec, lam[k - 1], &mask).unwrap();
        let b = optimal_constant(&dec, lam[k], &mask).unwrap();
        prop_assert!(b.constant >= a.constant * (1.0 - 1e-9));
    }

    #[test]
    fn kernel_matches_bessel_oracle(tau in 0.0f64..300.0, u in -400i64..400) {
        let oracle = common::kernel_oracle(tau, u);
        let got = kernel_1d(tau, u).unwrap();
        prop_assume!(oracle > 1e-280);
        prop_assert!((got / oracle - 1.0).abs() < 1e-10, "tau={} u={}: {} vs {}", tau, u, got, oracle);
        prop_assert_eq!(got, kernel_1d(tau, -u).unwrap());
    }

    #[test]
    fn zeta_two_sided_bound(s in 0.0f64..1e4) {
        prop_assert!(zeta_bounds_check(s).unwrap());
        prop_assert!(zeta(s).unwrap() >= 0.0);
    }
}

#[test]
fn certificate_minimizer_attains_the_constant() {
    let dom = LatticeBox::centered(1, 0.1, 3.0).unwrap();
    let dec = SpectralDecomposition::new(&ScalarField::zeros(&dom)).unwrap();
    let mask = ObservationMask::from_fn(&dom, |x| x[0] >= 0.5);
    let cert = optimal_constant(&dec, 10.0, &mask).unwrap();
    assert!(cert.observable && cert.dim > 1);
    let u = &cert.minimizer;
    let ratio = u.norm_sq() / u.masked_norm_sq(mask.inside());
    assert!((ratio / cert.constant - 1.0).abs() < 1e-8);
    let g = restricted_gram(&dec, &mask, cert.dim).unwrap();
    assert!((&g - g.transpose()).amax() < 1e-15);
}

#[test]
fn full_mask_certificate_is_one_and_empty_is_infinite() {
    let dom = LatticeBox::centered(1, 0.2, 2.0).unwrap();
    let dec = SpectralDecomposition::new(&ScalarField::zeros(&dom)).unwrap();
    let full = optimal_constant(&dec, 50.0, &ObservationMask::full(&dom)).unwrap();
    assert!((full.constant - 1.0).abs() < 1e-12);
    let empty = optimal_constant(&dec, 50.0, &ObservationMask::empty(&dom)).unwrap();
    assert!(!empty.observable);
    assert!(empty.constant.is_infinite());
    assert!(optimal_constant(&dec, -1.0, &ObservationMask::full(&dom)).is_err());
}

#[test]
fn kappa_fit_recovers_planted_exponent() {
    let pts: Vec<(f64, f64)> = (1..30).map(|i| {
        let mu = i as f64 * 10.0;
        (mu, (0.3 + 1.7 * mu.sqrt()).exp())
    }).collect();
    let fit = kappa_fit(&pts, KappaRegressor::Plain).unwrap();
    assert!((fit.kappa - 1.7).abs() < 1e-10);
    assert!((fit.offset - 0.3).abs() < 1e-9);
    assert!(fit.sublinear);
    assert!(kappa_fit(&pts[..3], KappaRegressor::Plain).is_err());
}

#[test]
fn free_kernel_matches_lattice_semigroup_in_the_bulk() {
    // The truncated semigroup of a delta agrees with p(t, x, y) away from the walls.
    let h = 0.25;
    let dom = LatticeBox::centered(1, h, 12.0).unwrap();
    let dec = SpectralDecomposition::new(&ScalarField::zeros(&dom)).unwrap();
    let delta = ScalarField::delta(&dom, &[0]).unwrap().scaled(1.0 / h);
    let t = 0.5;
    let s = dec.semigroup_apply(t, &delta).unwrap();
    for k in -4i64..=4 {
        let x = [k as f64 * h];
        let p = kernel(h, t, &x, &[0.0]).unwrap();
        let oracle = common::kernel_oracle(t / (h * h), k) / h;
        assert!((p / oracle - 1.0).abs() < 1e-10);
        assert!((s.at(&[k]) / p - 1.0).abs() < 1e-9);
    }
}

#[test]
fn feynman_kac_sandwich_holds_for_bounded_potentials() {
    let dom = LatticeBox::centered(1, 0.25, 20.0).unwrap();
    for spec in [PotentialSpec::zero(), PotentialSpec::constant(1.0), PotentialSpec::sine(1.0)] {
        let dec = SpectralDecomposition::new(&restrict(&spec, &dom)).unwrap();
        let r = feynman_kac_sandwich_check(&dec, 1.0, &[0.0]).unwrap();
        assert!(r.certified_nodes > 0);
        assert_eq!(r.violations, 0);
        assert!(r.holds);
        let norms = sup_norms(&spec, &dom).unwrap();
        assert!((r.v_sup - norms.linf).abs() < 1e-12);
    }
}
