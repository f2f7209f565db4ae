use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;
use scm_core::{apply_collision, ier, ipr, Density, SectorBasis};
use scm_oracles as oracle;

fn max_abs_diff(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn ground_ancilla() -> oracle::CMatrix {
    DMatrix::from_row_slice(2, 2, &[oracle::c(1., 0.), oracle::c(0., 0.), oracle::c(0., 0.), oracle::c(0., 0.)])
}

#[test]
fn two_site_coherent_example() {
    let basis = Arc::new(SectorBasis::new(2, 1).unwrap());
    let half = oracle::c(0.5, 0.0);
    let rho = DMatrix::from_element(2, 2, half);
    let out = apply_collision(&Density::new(basis.clone(), rho.clone()).unwrap(), 0).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[half, -half, -half, half]);
    assert!(max_abs_diff(out.elements(), &expected) < 1e-15);
    let brute = oracle::ancilla_collision(&rho, &oracle::sector_masks(2, 1), 0, &ground_ancilla());
    assert!(max_abs_diff(&brute, &expected) < 1e-13);
}

#[test]
fn matches_ancilla_trace_on_random_states() {
    let mut rng = oracle::SplitMix::new(17);
    for (n, q) in [(2, 1), (5, 2), (6, 3)] {
        let basis = Arc::new(SectorBasis::new(n, q).unwrap());
        let masks = oracle::sector_masks(n, q);
        for k in 0..20 {
            let rho = oracle::random_density_matrix(basis.dimension(), &mut rng);
            let site = k % n;
            let ours = apply_collision(&Density::new(basis.clone(), rho.clone()).unwrap(), site).unwrap();
            let brute = oracle::ancilla_collision(&rho, &masks, site, &ground_ancilla());
            assert!(max_abs_diff(ours.elements(), &brute) < 1e-12, "N={n} q={q} site={site}");
        }
    }
}

#[test]
fn reduced_channel_ignores_ancilla_state() {
    let mut rng = oracle::SplitMix::new(5);
    let masks = oracle::sector_masks(5, 2);
    let rho = oracle::random_density_matrix(10, &mut rng);
    let reference = oracle::ancilla_collision(&rho, &masks, 3, &ground_ancilla());
    for _ in 0..5 {
        let ancilla = oracle::random_density_matrix(2, &mut rng);
        let other = oracle::ancilla_collision(&rho, &masks, 3, &ancilla);
        assert!(max_abs_diff(&reference, &other) < 1e-12);
    }
}

#[test]
fn out_of_range_site_rejected() {
    let basis = Arc::new(SectorBasis::new(4, 1).unwrap());
    let rho = Density::maximally_mixed(basis);
    assert!(apply_collision(&rho, 4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channel_preserves_state_properties(seed in any::<u64>(), site in 0usize..6) {
        let basis = Arc::new(SectorBasis::new(6, 2).unwrap());
        let mut rng = oracle::SplitMix::new(seed);
        let rho = Density::new(basis.clone(), oracle::random_density_matrix(basis.dimension(), &mut rng)).unwrap();
        let out = apply_collision(&rho, site).unwrap();
        // involution
        prop_assert!(apply_collision(&out, site).unwrap().distance(&rho) < 1e-15);
        prop_assert!((out.trace() - rho.trace()).norm() < 1e-15);
        prop_assert!(out.min_eigenvalue() > -1e-12);
        prop_assert!((out.purity() - rho.purity()).abs() < 1e-13);
        prop_assert_eq!(out.populations(), rho.populations());
        prop_assert_eq!(ier(&out), ier(&rho));
    }

    #[test]
    fn ipr_equals_ier_for_one_excitation(seed in any::<u64>(), n in 2usize..12) {
        let basis = Arc::new(SectorBasis::new(n, 1).unwrap());
        let mut rng = oracle::SplitMix::new(seed);
        let rho = Density::new(basis.clone(), oracle::random_density_matrix(n, &mut rng)).unwrap();
        let p = ipr(&rho).unwrap();
        prop_assert!((p - ier(&rho)).abs() < 1e-14);
        prop_assert!(p >= 1.0 / n as f64 - 1e-12 && p <= 1.0 + 1e-12);
        prop_assert_eq!(ipr(&apply_collision(&rho, seed as usize % n).unwrap()).unwrap(), p);
    }
}
