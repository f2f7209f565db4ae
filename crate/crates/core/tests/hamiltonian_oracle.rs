use std::sync::Arc;

use approx::assert_abs_diff_eq;
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;
use scm_core::{propagate, Density, Hamiltonian, ModelParams, SectorBasis};
use scm_oracles as oracle;

fn max_abs_diff(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hamiltonian(n: usize, q: usize, params: ModelParams) -> Hamiltonian {
    Hamiltonian::new(Arc::new(SectorBasis::new(n, q).unwrap()), params).unwrap()
}

#[test]
fn sector_matrix_matches_full_space_restriction() {
    for (n, q, delta, h) in [
        (2, 1, 0.0, 0.0),
        (5, 2, 1.0, 0.0),
        (6, 3, 2.5, 0.3),
        (7, 2, 5.0, -0.7),
        (8, 4, 0.4, 0.0),
    ] {
        let params = ModelParams { j: 0.8, delta, h };
        let ours = hamiltonian(n, q, params);
        let full = oracle::xxz_full(n, 0.8, delta, h);
        let masks = oracle::sector_masks(n, q);
        let expected = oracle::restrict(&full, &masks);
        let got = ours.matrix().map(|x| Complex::new(x, 0.0));
        assert!(max_abs_diff(&got, &expected) < 1e-14, "N={n} q={q}");
    }
}

#[test]
fn full_space_commutes_with_total_magnetization() {
    // leakage out of the sector is exactly zero
    let n = 6;
    let full = oracle::xxz_full(n, 1.0, 1.3, 0.2);
    for row in 0..1usize << n {
        for col in 0..1usize << n {
            if row.count_ones() != col.count_ones() {
                assert_eq!(full[(row, col)], Complex::new(0.0, 0.0));
            }
        }
    }
}

#[test]
fn propagation_matches_taylor_exponential() {
    let mut rng = oracle::SplitMix::new(3);
    for (n, q) in [(2, 1), (5, 2), (4, 2), (10, 1)] {
        let h = hamiltonian(n, q, ModelParams { j: 1.0, delta: 0.7, h: 0.1 });
        let d = h.dimension();
        let rho0 = oracle::random_density_matrix(d, &mut rng);
        let hc = h.matrix().map(|x| Complex::new(x, 0.0));
        for t in [0.05, 0.7, 3.1] {
            let u = oracle::expm(&(&hc * Complex::new(0.0, -t)));
            let expected = &u * &rho0 * u.adjoint();
            let rho = Density::new(h.basis().clone(), rho0.clone()).unwrap();
            let got = propagate(&h, &rho, t).unwrap();
            assert!(max_abs_diff(got.elements(), &expected) < 1e-11, "N={n} q={q} t={t}");
            assert!(max_abs_diff(&h.propagator(t), &u) < 1e-11);
        }
    }
}

#[test]
fn two_site_rabi_oscillation() {
    let h = hamiltonian(2, 1, ModelParams::default());
    let rho = scm_core::initial_state::<f64>(h.basis().clone(), &[0]).unwrap();
    for t in [0.1, 0.37, 1.0, 2.5] {
        let m = scm_core::local_magnetization(&propagate(&h, &rho, t).unwrap());
        assert_abs_diff_eq!(m[0], (4.0 * t).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(m[1], -(4.0 * t).cos(), epsilon = 1e-12);
    }
}

fn random_rho(n: usize, q: usize, seed: u64) -> (Hamiltonian, Density) {
    let h = hamiltonian(n, q, ModelParams { j: 1.0, delta: 1.7, h: 0.2 });
    let mut rng = oracle::SplitMix::new(seed);
    let rho = oracle::random_density_matrix(h.dimension(), &mut rng);
    let rho = Density::new(h.basis().clone(), rho).unwrap();
    (h, rho)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn propagation_is_unitary_and_composes(
        seed in any::<u64>(),
        (n, q) in prop_oneof![Just((3usize, 1usize)), Just((5, 2)), Just((6, 3))],
        t1 in 0.0f64..3.0,
        t2 in 0.0f64..3.0,
    ) {
        let (h, rho) = random_rho(n, q, seed);
        let a = propagate(&h, &rho, t1).unwrap();
        let ab = propagate(&h, &a, t2).unwrap();
        let direct = propagate(&h, &rho, t1 + t2).unwrap();
        prop_assert!(ab.distance(&direct) < 1e-11);
        prop_assert!((a.trace().re - 1.0).abs() < 1e-12);
        prop_assert!((a.purity() - rho.purity()).abs() < 1e-12);
        prop_assert!(a.hermiticity_error() < 1e-12);
        let e0 = h.energy(&rho).unwrap();
        prop_assert!((h.energy(&a).unwrap() - e0).abs() < 1e-11);
        let u = h.propagator(t1);
        let id = DMatrix::<Complex<f64>>::identity(h.dimension(), h.dimension());
        prop_assert!(max_abs_diff(&(u.adjoint() * &u), &id) < 1e-12);
    }

    #[test]
    fn zero_duration_is_identity(seed in any::<u64>()) {
        let (h, rho) = random_rho(5, 2, seed);
        prop_assert!(propagate(&h, &rho, 0.0).unwrap().distance(&rho) < 1e-13);
    }
}
