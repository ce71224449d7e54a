mod common;

use proptest::prelude::*;
use qsync_core::engine::{
    algebra_closure_dim, evolve, kernel_dimension, nogo_residual, steady_state, EvolveOptions, Liouvillian,
    SteadyMethod, DEFAULT_SUPEROPERATOR_CAP, ZERO_EIGENVALUE_RTOL,
};
use qsync_core::observables::fidelity;
use qsync_core::random::{random_density_matrix, random_hermitian, seeded_rng};
use qsync_core::{product_steady_state, ComplexMatrix};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_preserves_trace_and_hermiticity(seed: u64, n in 1usize..5) {
        let mut rng = seeded_rng(seed);
        let spec = common::random_spec(&mut rng, n, None, false);
        let l = Liouvillian::new(&spec).unwrap();
        let rho = random_hermitian(&mut rng, spec.hilbert_dim());
        let out = l.apply(&rho).unwrap();
        prop_assert!(out.trace().norm() <= 1e-12);
        prop_assert!(out.hermiticity_error() <= 1e-12);
    }

    #[test]
    fn spectrum_is_stable(seed: u64, n in 1usize..4) {
        let spec = common::random_spec(&mut seeded_rng(seed), n, None, false);
        let l = Liouvillian::new(&spec).unwrap();
        for z in l.spectrum(DEFAULT_SUPEROPERATOR_CAP).unwrap() {
            prop_assert!(z.re <= 1e-9);
        }
    }

    #[test]
    fn closed_form_residual_is_the_generator(seed: u64, n in 2usize..5) {
        // nogo_residual fails internally if the cross-check exceeds 1e-12.
        let spec = common::random_spec(&mut seeded_rng(seed), n, None, false);
        let r = nogo_residual(&spec).unwrap();
        prop_assert!(r.cross_check_deviation <= 1e-12);
    }

    #[test]
    fn identical_ratio_xxz_residual_vanishes(seed: u64, n in 2usize..5, ratio in 0.05f64..5.0) {
        let spec = common::random_spec(&mut seeded_rng(seed), n, Some(ratio), true);
        prop_assert!(nogo_residual(&spec).unwrap().residual_norm <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dissipative_registers_have_unique_steady_states(seed: u64, n in 1usize..4) {
        let spec = common::random_spec(&mut seeded_rng(seed), n, None, false);
        let l = Liouvillian::new(&spec).unwrap();
        prop_assert_eq!(kernel_dimension(&l, ZERO_EIGENVALUE_RTOL, DEFAULT_SUPEROPERATOR_CAP).unwrap(), 1);
    }
}

#[test]
fn four_qubit_registers_have_unique_steady_states() {
    let mut rng = seeded_rng(404);
    for _ in 0..3 {
        let spec = common::random_spec(&mut rng, 4, None, false);
        let l = Liouvillian::new(&spec).unwrap();
        assert_eq!(kernel_dimension(&l, ZERO_EIGENVALUE_RTOL, DEFAULT_SUPEROPERATOR_CAP).unwrap(), 1);
    }
}

#[test]
fn jump_algebra_is_full() {
    let mut rng = seeded_rng(5);
    for n in 1..=4 {
        let spec = common::random_spec(&mut rng, n, Some(0.5), true);
        assert_eq!(algebra_closure_dim(&spec, false).unwrap(), 1 << (2 * n));
    }
}

#[test]
fn long_evolution_reaches_the_steady_state() {
    let mut rng = seeded_rng(77);
    let spec = common::random_spec(&mut rng, 3, None, false);
    let l = Liouvillian::new(&spec).unwrap();
    let ss = steady_state(&l, SteadyMethod::Nullspace, 1e-9).unwrap();
    let rho0 = random_density_matrix(&mut rng, 8, 1);
    let trace = evolve(&l, &rho0, 200.0, &[200.0], &EvolveOptions::default()).unwrap();
    let f = fidelity(trace.final_state().unwrap(), &ss.rho_ss).unwrap();
    assert!(f >= 1.0 - 1e-6, "{f}");
}

#[test]
fn identical_ratio_pair_steady_state_is_the_product() {
    let spec = common::random_spec(&mut seeded_rng(9), 2, Some(0.3), true);
    let l = Liouvillian::new(&spec).unwrap();
    for method in [SteadyMethod::Nullspace, SteadyMethod::Direct, SteadyMethod::LongTime] {
        let r = steady_state(&l, method, 1e-9).unwrap();
        assert!(r.rho_ss.matrix().max_abs_diff(product_steady_state(&spec).matrix()) < 1e-8, "{method:?}");
    }
}

#[test]
fn superoperator_matches_matrix_free_on_spin1_register() {
    let h = random_hermitian(&mut seeded_rng(1), 9);
    let jumps = vec![(0.7, random_hermitian(&mut seeded_rng(2), 9)), (1.1, ComplexMatrix::identity(9))];
    let l = Liouvillian::from_parts(h, jumps, vec![3, 3]).unwrap().with_superoperator(64).unwrap();
    let s = l.superoperator().unwrap();
    let mut rng = seeded_rng(3);
    for _ in 0..10 {
        let rho = random_hermitian(&mut rng, 9);
        let lhs = s.apply(&rho.vectorize());
        let rhs = l.apply(&rho).unwrap().vectorize();
        let dev = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev <= 1e-11);
    }
}
