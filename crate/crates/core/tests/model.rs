mod common;

use proptest::prelude::*;
use qsync_core::operators::{embed, pauli, Axis, ComplexMatrix};
use qsync_core::random::seeded_rng;
use qsync_core::{build_hamiltonian, magnetization, product_steady_state, QubitParams, SystemSpec, Topology};

/// Permutation matrix exchanging qubits `a` and `b` of an `n`-qubit register.
fn swap(n: usize, a: usize, b: usize) -> ComplexMatrix {
    let d = 1 << n;
    let bit = |s: usize| n - 1 - s;
    ComplexMatrix::from_fn(d, |i, j| {
        let (ba, bb) = ((j >> bit(a)) & 1, (j >> bit(b)) & 1);
        let mut t = j & !(1 << bit(a)) & !(1 << bit(b));
        t |= bb << bit(a);
        t |= ba << bit(b);
        qsync_core::C64::new(if i == t { 1.0 } else { 0.0 }, 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn magnetization_increases_with_ratio(r1 in 0.0f64..50.0, r2 in 0.0f64..50.0) {
        prop_assume!((r1 - r2).abs() > 1e-9);
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(magnetization(lo, 1.0).unwrap() < magnetization(hi, 1.0).unwrap());
    }

    #[test]
    fn product_state_commutes_with_local_sz(seed: u64, n in 1usize..5) {
        let spec = common::random_spec(&mut seeded_rng(seed), n, None, false);
        let rho = product_steady_state(&spec);
        for j in 0..n {
            let z = embed(&pauli(Axis::Z), j, &spec.local_dims()).unwrap();
            prop_assert!(ComplexMatrix::commutator(&z, rho.matrix()).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn uncoupled_hamiltonian_is_diagonal(seed: u64, n in 1usize..5) {
        let spec = common::random_spec(&mut seeded_rng(seed), n, None, false).without_interactions();
        let h = build_hamiltonian(&spec).unwrap();
        let d = h.dim();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    prop_assert_eq!(h[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn identical_qubits_are_exchange_symmetric(omega in -2.0f64..2.0, g in 0.1f64..2.0, d in 0.1f64..2.0,
                                               ux in -2.0f64..2.0, uy in -2.0f64..2.0, uz in -2.0f64..2.0,
                                               n in 2usize..5, a in 0usize..4, b in 0usize..4) {
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let q = QubitParams::new(omega, g, d).unwrap();
        let spec = SystemSpec::uniform(vec![q; n], Topology::AllToAll, ux, uy, uz).unwrap();
        let h = build_hamiltonian(&spec).unwrap();
        let p = swap(n, a, b);
        prop_assert!(p.matmul(&h).matmul(&p).max_abs_diff(&h) <= 1e-13);
    }
}

#[test]
fn heisenberg_pair() {
    let q = QubitParams::new(0.0, 1.0, 1.0).unwrap();
    let spec = SystemSpec::uniform(vec![q; 2], Topology::AllToAll, 1.0, 1.0, 1.0).unwrap();
    let h = build_hamiltonian(&spec).unwrap();
    let expected = ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, -1.0, 2.0, 0.0],
        &[0.0, 2.0, -1.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ]);
    assert!(h.max_abs_diff(&expected) < 1e-15);
}
