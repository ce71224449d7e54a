use proptest::prelude::*;
use qsync_core::operators::{ComplexMatrix, C64};
use qsync_core::spin1_commutator;

/// The commutator as printed, with the center row/column filled by
/// combinations of `ux`, `uy`.
fn printed(ux: f64, uy: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(9);
    let col = [(0, uy - ux), (2, -ux - uy), (6, -ux - uy), (8, uy - ux)];
    let row = [(0, ux - uy), (2, ux + uy), (6, ux + uy), (8, ux - uy)];
    for (i, v) in col {
        m[(i, 4)] = C64::new(v, 0.0);
    }
    for (j, v) in row {
        m[(4, j)] = C64::new(v, 0.0);
    }
    m
}

#[test]
fn vanishes_only_without_xy_coupling() {
    let values = [-2.0, -0.5, 0.0, 0.5, 2.0];
    for &ux in &values {
        for &uy in &values {
            for &uz in &[-1.0, 0.0, 3.0] {
                let zero = spin1_commutator(ux, uy, uz).max_abs() == 0.0;
                assert_eq!(zero, ux == 0.0 && uy == 0.0, "ux={ux} uy={uy} uz={uz}");
            }
        }
    }
}

proptest! {
    #[test]
    fn matches_printed_pattern_up_to_global_factor(ux in -5.0..5.0f64, uy in -5.0..5.0f64, uz in -5.0..5.0f64) {
        let c = spin1_commutator(ux, uy, uz);
        prop_assert!(c.scale_real(-2.0).max_abs_diff(&printed(ux, uy)) <= 1e-14);
    }

    #[test]
    fn independent_of_uz(ux in -5.0..5.0f64, uy in -5.0..5.0f64, uz in -5.0..5.0f64) {
        prop_assert!(spin1_commutator(ux, uy, uz).max_abs_diff(&spin1_commutator(ux, uy, 0.0)) <= 1e-14);
    }
}
