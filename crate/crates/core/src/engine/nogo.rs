use super::{EngineError, Liouvillian};
use crate::model::{product_steady_state, SystemSpec};
use crate::operators::{embed_product, pauli, Axis, ComplexMatrix, C64};

/// Entrywise agreement required between the closed form and `L[ρ₀]`.
pub const NOGO_CROSS_CHECK_TOL: f64 = 1e-12;

/// Per-pair coefficients of the closed-form residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCoefficients {
    pub j: usize,
    pub k: usize,
    /// `(m_j − m_k)(U^x + U^y)`, multiplying `σ_j⁺σ_k⁻ − σ_j⁻σ_k⁺`.
    pub flip_flop: f64,
    /// `(m_j + m_k)(U^x − U^y)`, multiplying `σ_j⁺σ_k⁺ − σ_j⁻σ_k⁻`.
    pub pair_creation: f64,
}

#[derive(Clone, Debug)]
pub struct NogoResidual {
    /// Frobenius norm of `closed_form`.
    pub residual_norm: f64,
    pub pairs: Vec<PairCoefficients>,
    /// `L[ρ₀]` assembled pair by pair from the coefficients.
    pub closed_form: ComplexMatrix,
    /// Max entrywise difference between `closed_form` and the generator
    /// applied to `ρ₀`.
    pub cross_check_deviation: f64,
}

/// Residual of the product state under the full generator,
/// `L[ρ₀] = (i/2) Σ_{j<k} (M_jk + U_jk) Π_{l≠j,k} ρ_{l,0}`.
pub fn nogo_residual(spec: &SystemSpec) -> Result<NogoResidual, EngineError> {
    let dims = spec.local_dims();
    let n = spec.n_qubits();
    let m = spec.magnetizations();
    let local: Vec<ComplexMatrix> = spec.qubits().iter().map(|q| q.steady_state()).collect();
    let (plus, minus) = (pauli(Axis::Plus), pauli(Axis::Minus));

    let d = spec.hilbert_dim();
    let mut closed_form = ComplexMatrix::zeros(d);
    let mut pairs = Vec::with_capacity(spec.interactions().len());
    for t in spec.interactions() {
        let (j, k) = (t.j, t.k);
        let c = PairCoefficients {
            j,
            k,
            flip_flop: (m[j] - m[k]) * (t.ux + t.uy),
            pair_creation: (m[j] + m[k]) * (t.ux - t.uy),
        };
        pairs.push(c);
        if c.flip_flop == 0.0 && c.pair_creation == 0.0 {
            continue;
        }
        let rest: Vec<(&ComplexMatrix, usize)> = (0..n).filter(|&l| l != j && l != k).map(|l| (&local[l], l)).collect();
        let env = embed_product(&rest, &dims)?;
        let two = |a: &ComplexMatrix, b: &ComplexMatrix| embed_product(&[(a, j), (b, k)], &dims);
        let mut op = ComplexMatrix::zeros(d);
        op.axpy(C64::new(c.flip_flop, 0.0), &two(&plus, &minus)?);
        op.axpy(C64::new(-c.flip_flop, 0.0), &two(&minus, &plus)?);
        op.axpy(C64::new(c.pair_creation, 0.0), &two(&plus, &plus)?);
        op.axpy(C64::new(-c.pair_creation, 0.0), &two(&minus, &minus)?);
        closed_form.axpy(C64::new(0.0, 0.5), &op.matmul(&env));
    }

    let direct = Liouvillian::new(spec)?.apply(product_steady_state(spec).matrix())?;
    let cross_check_deviation = closed_form.max_abs_diff(&direct);
    if !(cross_check_deviation <= NOGO_CROSS_CHECK_TOL) {
        return Err(EngineError::CrossCheck { deviation: cross_check_deviation });
    }
    Ok(NogoResidual { residual_norm: closed_form.frobenius_norm(), pairs, closed_form, cross_check_deviation })
}
