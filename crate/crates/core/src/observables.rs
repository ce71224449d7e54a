//! Fidelity, expectation values and inter-site correlations.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::operators::{
    embed, embed_product, hermitian_eigen, herm_sqrt, partial_trace_matrix, pauli, Axis, ComplexMatrix, DensityMatrix,
    OperatorError, C64,
};

/// Slack allowed outside `[0, 1]` before fidelity is clamped.
const FIDELITY_CLAMP: f64 = 1e-9;
/// Tolerance of the identities between the summed correlation functions.
pub const RELATION_TOL: f64 = 1e-12;

/// Axes used for the pairwise correlation table.
pub const CORRELATION_AXES: [Axis; 5] = [Axis::X, Axis::Y, Axis::Z, Axis::Plus, Axis::Minus];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("connected correlation needs distinct sites, got {site} twice")]
    SameSite { site: usize },
    #[error("register of dimension {dim} is not made of qubits")]
    NotQubitRegister { dim: usize },
    #[error("{relation} violated by {deviation:e}")]
    Relation { relation: &'static str, deviation: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

fn check_dims(a: usize, b: usize) -> Result<(), ObservableError> {
    if a != b {
        return Err(OperatorError::DimensionMismatch { expected: a, found: b }.into());
    }
    Ok(())
}

/// Number of qubits in a register of dimension `dim`.
pub fn qubit_count(dim: usize) -> Result<usize, ObservableError> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(ObservableError::NotQubitRegister { dim });
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Eigenvalues below `NOISE_FLOOR · λ_max` are rounding noise. Their square
/// roots (≈ 1e-8 for a noise of 1e-16) would otherwise show up in the
/// fidelity of rank-deficient states.
const NOISE_FLOOR: f64 = 1e-14;

fn sqrt_spectrum(vals: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let top = vals.iter().copied().fold(0.0, f64::max);
    vals.iter().map(move |&v| if v > NOISE_FLOOR * top { v.sqrt() } else { 0.0 })
}

/// Uhlmann fidelity `Tr √(√a · b · √a)`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, ObservableError> {
    check_dims(a.dim(), b.dim())?;
    // herm_sqrt validates the input; the fidelity uses a noise-truncated root.
    herm_sqrt(a.matrix())?;
    let (vals, vecs) = hermitian_eigen(a.matrix())?;
    let roots: Vec<f64> = sqrt_spectrum(&vals).collect();
    let scaled = ComplexMatrix::from_fn(a.dim(), |i, j| vecs[(i, j)] * roots[j]);
    let sa = scaled.matmul(&vecs.adjoint()).hermitian_part();
    let inner = sa.matmul(b.matrix()).matmul(&sa);
    let (vals, _) = hermitian_eigen(&inner)?;
    let f: f64 = sqrt_spectrum(&vals).sum();
    if (-FIDELITY_CLAMP..=1.0 + FIDELITY_CLAMP).contains(&f) {
        Ok(f.clamp(0.0, 1.0))
    } else {
        Ok(f)
    }
}

/// `Tr(ρ · op)`.
pub fn expectation(rho: &DensityMatrix, op: &ComplexMatrix) -> Result<C64, ObservableError> {
    check_dims(rho.dim(), op.dim())?;
    Ok(trace_product(rho.matrix(), op))
}

/// `Tr(a b)` without forming the product.
fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let d = a.dim();
    let (a, b) = (a.as_slice(), b.as_slice());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a[i * d + j] * b[j * d + i];
        }
    }
    acc
}

/// `⟨A_j B_k⟩ − ⟨A_j⟩⟨B_k⟩` for local operators on an arbitrary register.
pub fn connected_correlation_ops(
    rho: &DensityMatrix,
    local_dims: &[usize],
    (a, j): (&ComplexMatrix, usize),
    (b, k): (&ComplexMatrix, usize),
) -> Result<C64, ObservableError> {
    if j == k {
        return Err(ObservableError::SameSite { site: j });
    }
    check_dims(local_dims.iter().product(), rho.dim())?;
    let joint = expectation(rho, &embed_product(&[(a, j), (b, k)], local_dims)?)?;
    let ea = expectation(rho, &embed(a, j, local_dims)?)?;
    let eb = expectation(rho, &embed(b, k, local_dims)?)?;
    Ok(joint - ea * eb)
}

/// `⟨σ_j^α σ_k^β⟩ − ⟨σ_j^α⟩⟨σ_k^β⟩` on a qubit register.
pub fn connected_correlation(
    rho: &DensityMatrix,
    j: usize,
    k: usize,
    alpha: Axis,
    beta: Axis,
) -> Result<C64, ObservableError> {
    let n = qubit_count(rho.dim())?;
    connected_correlation_ops(rho, &vec![2; n], (&pauli(alpha), j), (&pauli(beta), k))
}

/// Connected correlations for every pair `j < k` and every axis pair drawn
/// from [`CORRELATION_AXES`].
pub fn all_connected_correlations(rho: &DensityMatrix) -> Result<BTreeMap<(usize, usize, Axis, Axis), C64>, ObservableError> {
    let n = qubit_count(rho.dim())?;
    let dims = vec![2; n];
    let paulis: Vec<(Axis, ComplexMatrix)> = CORRELATION_AXES.iter().map(|&a| (a, pauli(a))).collect();
    // Single-site expectations are shared by every pair.
    let mut local = BTreeMap::new();
    for s in 0..n {
        for (a, p) in &paulis {
            local.insert((s, *a), expectation(rho, &embed(p, s, &dims)?)?);
        }
    }
    let mut out = BTreeMap::new();
    for j in 0..n {
        for k in j + 1..n {
            for (a, pa) in &paulis {
                for (b, pb) in &paulis {
                    let joint = expectation(rho, &embed_product(&[(pa, j), (pb, k)], &dims)?)?;
                    out.insert((j, k, *a, *b), joint - local[&(j, *a)] * local[&(k, *b)]);
                }
            }
        }
    }
    Ok(out)
}

/// Largest connected-correlation modulus over all pairs and axes.
pub fn max_connected_correlation(rho: &DensityMatrix) -> Result<f64, ObservableError> {
    Ok(all_connected_correlations(rho)?.values().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Labels of the summed correlation functions, in report order.
pub const SUM_LABELS: [&str; 8] = ["C++", "C--", "C+-", "C-+", "Cxx", "Cyy", "Cxy", "Cyx"];

#[derive(Clone, Debug, Default)]
pub struct CorrelationReport {
    pub pair_connected: BTreeMap<(usize, usize, Axis, Axis), C64>,
    /// `C_αβ = Σ_{j<k} Tr[ρ_jk σ_j^α σ_k^β]`, keyed by [`SUM_LABELS`].
    pub sums: BTreeMap<&'static str, C64>,
    /// Largest violation among the identities linking the Cartesian sums to
    /// the ladder sums.
    pub relation_deviation: f64,
}

impl CorrelationReport {
    pub fn sum(&self, label: &str) -> C64 {
        self.sums[label]
    }
}

/// Summed two-site correlations. The ladder sums are read off the reduced
/// two-site matrices (`C+− = Σ ρ_jk[2,1]`, `C++ = Σ ρ_jk[3,0]`); the
/// Cartesian sums are evaluated independently on the full state and must
/// satisfy
///
/// ```text
/// Cxx = 2(Re s + Re r)   Cyy = 2(Re s − Re r)
/// Cxy = 2(Im r − Im s)   Cyx = 2(Im r + Im s)
/// ```
///
/// with `s = C+−`, `r = C++`.
pub fn correlation_sums(rho: &DensityMatrix) -> Result<CorrelationReport, ObservableError> {
    let n = qubit_count(rho.dim())?;
    let dims = vec![2; n];
    let (x, y) = (pauli(Axis::X), pauli(Axis::Y));
    let zero = C64::new(0.0, 0.0);
    let (mut s, mut r) = (zero, zero);
    let (mut xx, mut yy, mut xy, mut yx) = (zero, zero, zero, zero);
    for j in 0..n {
        for k in j + 1..n {
            let rho_jk = partial_trace_matrix(rho.matrix(), &[j, k], &dims)?;
            s += rho_jk[(2, 1)];
            r += rho_jk[(3, 0)];
            let pair = |a: &ComplexMatrix, b: &ComplexMatrix| -> Result<C64, ObservableError> {
                expectation(rho, &embed_product(&[(a, j), (b, k)], &dims)?)
            };
            xx += pair(&x, &x)?;
            yy += pair(&y, &y)?;
            xy += pair(&x, &y)?;
            yx += pair(&y, &x)?;
        }
    }
    let real = |v: f64| C64::new(v, 0.0);
    let expected = [
        (xx, real(2.0 * (s.re + r.re))),
        (yy, real(2.0 * (s.re - r.re))),
        (xy, real(2.0 * (r.im - s.im))),
        (yx, real(2.0 * (r.im + s.im))),
    ];
    let relation_deviation = expected.iter().map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    let mut sums = BTreeMap::new();
    for (label, v) in SUM_LABELS.into_iter().zip([r, r.conj(), s, s.conj(), xx, yy, xy, yx]) {
        sums.insert(label, v);
    }
    Ok(CorrelationReport { pair_connected: all_connected_correlations(rho)?, sums, relation_deviation })
}

/// [`correlation_sums`], failing when the identities do not hold to
/// [`RELATION_TOL`].
pub fn checked_correlation_sums(rho: &DensityMatrix) -> Result<CorrelationReport, ObservableError> {
    let report = correlation_sums(rho)?;
    if report.relation_deviation > RELATION_TOL {
        return Err(ObservableError::Relation {
            relation: "Cartesian/ladder correlation identities",
            deviation: report.relation_deviation,
        });
    }
    Ok(report)
}
