use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use qsync_core::operators::{embed, pauli, Axis, ComplexMatrix};
use qsync_core::random::{random_density_matrix, seeded_rng};
use qsync_core::sync::{gauss_legendre, husimi_q_pair, husimi_q_single, s_function_single, s_rel_analytic, s_rel_quadrature, sync_report};
use qsync_core::{DensityMatrix, QubitParams, SystemSpec, Topology, C64};

/// `e^{−iφ Σσz/2} ρ e^{iφ Σσz/2}` on an `n`-qubit register.
fn rotate(rho: &DensityMatrix, n: usize, phi: f64) -> DensityMatrix {
    let d = 1 << n;
    let mut diag = vec![C64::new(0.0, 0.0); d];
    for (i, z) in diag.iter_mut().enumerate() {
        let ups = n as i32 - 2 * (i.count_ones() as i32);
        *z = C64::from_polar(1.0, -phi * ups as f64 / 2.0);
    }
    let u = ComplexMatrix::from_diag(&diag);
    DensityMatrix::new(u.matmul(rho.matrix()).matmul(&u.adjoint()).hermitian_part()).unwrap()
}

#[test]
fn relative_phase_oracle_agrees_on_random_states() {
    let mut rng = seeded_rng(2024);
    for i in 0..50 {
        let rho = random_density_matrix(&mut rng, 4, 1 + i % 4);
        for &phi in &[0.0, 1.3, 4.0] {
            let a = s_rel_analytic(&rho, phi).unwrap();
            let q = s_rel_quadrature(&rho, phi, 64, 64).unwrap();
            assert!((a - q).abs() <= 1e-6, "state {i}, φ = {phi}: {a} vs {q}");
        }
    }
}

#[test]
fn husimi_functions_are_normalized() {
    let (x, w) = gauss_legendre(32);
    let thetas: Vec<(f64, f64)> = x.iter().zip(&w).map(|(t, w)| (PI / 2.0 * (t + 1.0), PI / 2.0 * w)).collect();
    let n_phi = 32;
    let phis: Vec<f64> = (0..n_phi).map(|i| TAU * i as f64 / n_phi as f64).collect();
    let h = TAU / n_phi as f64;

    let rho = random_density_matrix(&mut seeded_rng(1), 2, 2);
    let mut total = 0.0;
    for &(t, wt) in &thetas {
        for &p in &phis {
            total += wt * h * t.sin() * husimi_q_single(&rho, t, p).unwrap();
        }
    }
    assert!((total - 1.0).abs() < 1e-12);

    let rho2 = random_density_matrix(&mut seeded_rng(2), 4, 3);
    let mut total = 0.0;
    for &(t1, w1) in &thetas {
        for &(t2, w2) in &thetas {
            let w = w1 * w2 * t1.sin() * t2.sin() * h * h;
            for &p1 in phis.iter().step_by(2) {
                for &p2 in phis.iter().step_by(2) {
                    total += 4.0 * w * husimi_q_pair(&rho2, t1, t2, p1, p2).unwrap();
                }
            }
        }
    }
    assert!((total - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pair_husimi_factorizes(seed: u64, t1 in 0.0..PI, t2 in 0.0..PI, p1 in 0.0..TAU, p2 in 0.0..TAU) {
        let mut rng = seeded_rng(seed);
        let (a, b) = (random_density_matrix(&mut rng, 2, 2), random_density_matrix(&mut rng, 2, 2));
        let q = husimi_q_pair(&a.tensor(&b), t1, t2, p1, p2).unwrap();
        let expected = husimi_q_single(&a, t1, p1).unwrap() * husimi_q_single(&b, t2, p2).unwrap();
        prop_assert!((q - expected).abs() <= 1e-14);
    }

    #[test]
    fn single_s_function_has_zero_mean(seed: u64) {
        let rho = random_density_matrix(&mut seeded_rng(seed), 2, 2);
        let n = 16;
        let mean: f64 = (0..n).map(|i| s_function_single(&rho, TAU * i as f64 / n as f64).unwrap()).sum();
        prop_assert!(mean.abs() <= 1e-14);
    }

    #[test]
    fn relative_s_function_is_periodic(seed: u64, phi in 0.0..1.0f64) {
        let rho = random_density_matrix(&mut seeded_rng(seed), 4, 2);
        let a = s_rel_quadrature(&rho, phi, 16, 16).unwrap();
        let b = s_rel_quadrature(&rho, (phi + TAU - 1e-9).rem_euclid(TAU), 16, 16).unwrap();
        // Shifting by 2π − 1e-9 moves S by at most |S'|·1e-9 ≤ (π/16)·1e-9.
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn diagonal_products_do_not_lock(seed: u64, phi in 0.0..TAU) {
        let mut rng = seeded_rng(seed);
        let diag = |r: DensityMatrix| {
            let m = r.matrix();
            DensityMatrix::new(ComplexMatrix::from_real_diag(&[m[(0, 0)].re, m[(1, 1)].re])).unwrap()
        };
        let prod = diag(random_density_matrix(&mut rng, 2, 2)).tensor(&diag(random_density_matrix(&mut rng, 2, 2)));
        prop_assert_eq!(s_rel_analytic(&prod, phi).unwrap(), 0.0);
        prop_assert!(s_rel_quadrature(&prod, phi, 16, 16).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn total_is_rotation_invariant(seed: u64, phi in 0.0..TAU, n in 2usize..5) {
        let rho = random_density_matrix(&mut seeded_rng(seed), 1 << n, 2);
        let q = QubitParams::new(0.0, 1.0, 1.0).unwrap();
        let spec = SystemSpec::new(vec![q; n], vec![], Topology::Custom).unwrap();
        let a = sync_report(&rho, &spec).unwrap();
        let b = sync_report(&rotate(&rho, n, phi), &spec).unwrap();
        prop_assert!((a.total - b.total).abs() <= 1e-12);
        for (key, p) in &a.per_pair {
            prop_assert!((p.s_max - p.flip_flop.norm() * PI / 16.0).abs() <= 1e-12);
            prop_assert!(p.s_max <= PI / 16.0);
            prop_assert!((b.per_pair[key].s_max - p.s_max).abs() <= 1e-12);
        }
    }
}

#[test]
fn rotation_helper_matches_embedded_generators() {
    // The diagonal phase helper is exp(−iφ Σσz/2); compare on one qubit pair.
    let phi = 0.7;
    let dims = [2, 2];
    let sz = &embed(&pauli(Axis::Z), 0, &dims).unwrap() + &embed(&pauli(Axis::Z), 1, &dims).unwrap();
    let rho = random_density_matrix(&mut seeded_rng(8), 4, 2);
    let rotated = rotate(&rho, 2, phi);
    let d: Vec<C64> = (0..4).map(|i| C64::from_polar(1.0, -phi * sz[(i, i)].re / 2.0)).collect();
    let u = ComplexMatrix::from_diag(&d);
    assert!(rotated.matrix().max_abs_diff(&u.matmul(rho.matrix()).matmul(&u.adjoint())) < 1e-15);
}
