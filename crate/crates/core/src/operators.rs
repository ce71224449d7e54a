//! Dense complex linear algebra for small registers: local spin operators,
//! Kronecker embedding, partial traces and Hermitian matrix functions.
//!
//! Basis conventions: site 0 is the leftmost (most significant) tensor
//! factor. The local qubit basis is `(|↑⟩, |↓⟩)` with `σz|↑⟩ = +|↑⟩`; the
//! spin-1 basis is `(|1,1⟩, |1,0⟩, |1,−1⟩)`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use faer::{Accum, Mat, MatMut, MatRef, Par, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Entrywise tolerance on `|ρ − ρ†|` for a valid density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|Tr ρ − 1|` for a valid density matrix.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[−PSD_TOL, 0)` are treated as numerical zeros.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("site {site} out of range for a register of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix data of length {len} is not square")]
    NotSquare { len: usize },
    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,
    #[error("partial trace needs at least one kept site")]
    EmptyKeep,
    #[error("matrix is not Hermitian (max |m - m†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("trace {trace} differs from 1")]
    TraceNotUnity { trace: f64 },
    #[error("eigenvalue {value:e} is below the PSD tolerance")]
    NegativeEigenvalue { value: f64 },
    #[error("eigendecomposition failed to converge")]
    Eigendecomposition,
}

/// Square complex matrix with row-major dense storage.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Wraps row-major data; the length must be a nonzero perfect square.
    pub fn from_vec(data: Vec<C64>) -> Result<Self, OperatorError> {
        if data.is_empty() {
            return Err(OperatorError::EmptyMatrix);
        }
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(OperatorError::NotSquare { len: data.len() });
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from real row literals. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| {
            assert_eq!(rows[i].len(), dim, "ragged rows");
            C64::new(rows[i][j], 0.0)
        })
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn as_faer(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, self.dim, self.dim)
    }

    pub fn as_faer_mut(&mut self) -> MatMut<'_, C64> {
        MatMut::from_row_major_slice_mut(&mut self.data, self.dim, self.dim)
    }

    pub fn from_faer(m: MatRef<'_, C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros(self.dim);
        self.matmul_into(rhs, &mut out, false);
        out
    }

    /// `out = self · rhs`, or `out += self · rhs` when `accumulate` is set.
    pub fn matmul_into(&self, rhs: &Self, out: &mut Self, accumulate: bool) {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        assert_eq!(self.dim, out.dim, "matmul dimension mismatch");
        let accum = if accumulate { Accum::Add } else { Accum::Replace };
        faer::linalg::matmul::matmul(
            out.as_faer_mut(),
            accum,
            self.as_faer(),
            rhs.as_faer(),
            C64::new(1.0, 0.0),
            Par::Seq,
        );
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * s).collect() }
    }

    /// `self += s · other`
    pub fn axpy(&mut self, s: C64, other: &Self) {
        assert_eq!(self.dim, other.dim);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation `|m_ij − conj(m_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `(m + m†)/2`
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// `[a, b] = ab − ba`
    pub fn commutator(a: &Self, b: &Self) -> Self {
        let mut out = a.matmul(b);
        out.axpy(C64::new(-1.0, 0.0), &b.matmul(a));
        out
    }

    /// Matrix–vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Column-stacked vectorization: `vec(X)[j·d + i] = X[i, j]`.
    pub fn vectorize(&self) -> Vec<C64> {
        let d = self.dim;
        let mut v = Vec::with_capacity(d * d);
        for j in 0..d {
            for i in 0..d {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    /// Inverse of [`ComplexMatrix::vectorize`].
    pub fn unvectorize(v: &[C64]) -> Result<Self, OperatorError> {
        let mut m = Self::from_vec(v.to_vec())?;
        // Row-major reinterpretation of column-stacked data is the transpose.
        m = m.transpose();
        Ok(m)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.axpy(C64::new(1.0, 0.0), rhs);
    }
}

impl Sub<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Hermitian, positive-semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and numerical positivity.
    pub fn new(m: ComplexMatrix) -> Result<Self, OperatorError> {
        let deviation = m.hermiticity_error();
        if deviation > HERMITIAN_TOL {
            return Err(OperatorError::NotHermitian { deviation });
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(OperatorError::TraceNotUnity { trace: tr.re });
        }
        let (vals, _) = hermitian_eigen(&m)?;
        if let Some(&lo) = vals.first() {
            if lo < -PSD_TOL {
                return Err(OperatorError::NegativeEigenvalue { value: lo });
            }
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is valid by construction (products, partial
    /// traces, repaired integrator output).
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    /// Hermitizes and trace-normalizes, then validates.
    pub fn repair(m: &ComplexMatrix) -> Result<Self, OperatorError> {
        Self::new(normalize_hermitian(m))
    }

    /// Pure state `|ψ⟩⟨ψ|`; the vector is normalized first.
    pub fn pure(psi: &[C64]) -> Self {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self(normalize_hermitian(&ComplexMatrix::outer(&unit, &unit)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `Tr(ρ²)`
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ_ij |ρ_ij|² for Hermitian ρ.
        self.0.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self(kron(&self.0, &other.0))
    }
}

/// `(m + m†)/2` scaled to unit trace.
pub(crate) fn normalize_hermitian(m: &ComplexMatrix) -> ComplexMatrix {
    let h = m.hermitian_part();
    let tr = h.trace().re;
    h.scale_real(1.0 / tr)
}

/// Operator label for local spin operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
    Identity,
}

impl Axis {
    pub const CARTESIAN: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::Plus => "+",
            Axis::Minus => "-",
            Axis::Identity => "i",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrices and ladder operators `σ± = (σx ± iσy)/2`.
pub fn pauli(axis: Axis) -> ComplexMatrix {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let data = match axis {
        Axis::X => vec![z, one, one, z],
        Axis::Y => vec![z, c(0.0, -1.0), c(0.0, 1.0), z],
        Axis::Z => vec![one, z, z, -one],
        Axis::Plus => vec![z, one, z, z],
        Axis::Minus => vec![z, z, one, z],
        Axis::Identity => vec![one, z, z, one],
    };
    ComplexMatrix { dim: 2, data }
}

/// Spin-1 angular momentum matrices (ħ = 1).
pub fn spin1_op(axis: Axis) -> ComplexMatrix {
    let r2 = std::f64::consts::SQRT_2;
    let mut plus = ComplexMatrix::zeros(3);
    plus[(0, 1)] = c(r2, 0.0);
    plus[(1, 2)] = c(r2, 0.0);
    match axis {
        Axis::Plus => plus,
        Axis::Minus => plus.adjoint(),
        Axis::X => (&plus + &plus.adjoint()).scale_real(0.5),
        Axis::Y => (&plus - &plus.adjoint()).scale(c(0.0, -0.5)),
        Axis::Z => ComplexMatrix::from_real_diag(&[1.0, 0.0, -1.0]),
        Axis::Identity => ComplexMatrix::identity(3),
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim, b.dim);
    let d = da * db;
    let mut out = ComplexMatrix::zeros(d);
    for i in 0..da {
        for j in 0..da {
            let aij = a[(i, j)];
            if aij == c(0.0, 0.0) {
                continue;
            }
            for k in 0..db {
                let row = (i * db + k) * d + j * db;
                let brow = &b.data[k * db..(k + 1) * db];
                for (dst, &bkl) in out.data[row..row + db].iter_mut().zip(brow) {
                    *dst = aij * bkl;
                }
            }
        }
    }
    out
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` acting on `site`.
pub fn embed(op: &ComplexMatrix, site: usize, local_dims: &[usize]) -> Result<ComplexMatrix, OperatorError> {
    if site >= local_dims.len() {
        return Err(OperatorError::SiteOutOfRange { site, sites: local_dims.len() });
    }
    if op.dim != local_dims[site] {
        return Err(OperatorError::DimensionMismatch { expected: local_dims[site], found: op.dim });
    }
    let left: usize = local_dims[..site].iter().product();
    let right: usize = local_dims[site + 1..].iter().product();
    let mut out = op.clone();
    if left > 1 {
        out = kron(&ComplexMatrix::identity(left), &out);
    }
    if right > 1 {
        out = kron(&out, &ComplexMatrix::identity(right));
    }
    Ok(out)
}

/// Product of local operators: `Π_s embed(op_s, site_s)`. Sites must be distinct.
pub fn embed_product(ops: &[(&ComplexMatrix, usize)], local_dims: &[usize]) -> Result<ComplexMatrix, OperatorError> {
    let mut factors: Vec<ComplexMatrix> = local_dims.iter().map(|&d| ComplexMatrix::identity(d)).collect();
    for &(op, site) in ops {
        if site >= local_dims.len() {
            return Err(OperatorError::SiteOutOfRange { site, sites: local_dims.len() });
        }
        if op.dim != local_dims[site] {
            return Err(OperatorError::DimensionMismatch { expected: local_dims[site], found: op.dim });
        }
        factors[site] = factors[site].matmul(op);
    }
    Ok(factors.iter().skip(1).fold(factors[0].clone(), |acc, f| kron(&acc, f)))
}

/// Reduced matrix over `keep` (ascending site order) of an arbitrary operator.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    keep: &[usize],
    local_dims: &[usize],
) -> Result<ComplexMatrix, OperatorError> {
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return Err(OperatorError::EmptyKeep);
    }
    let sites = local_dims.len();
    if let Some(&bad) = keep.iter().find(|&&s| s >= sites) {
        return Err(OperatorError::SiteOutOfRange { site: bad, sites });
    }
    let total: usize = local_dims.iter().product();
    if m.dim != total {
        return Err(OperatorError::DimensionMismatch { expected: total, found: m.dim });
    }

    // Stride of each site in the full index (site 0 most significant).
    let mut strides = vec![1usize; sites];
    for s in (0..sites.saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * local_dims[s + 1];
    }
    let traced: Vec<usize> = (0..sites).filter(|s| !keep.contains(s)).collect();
    let offsets = |group: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &s in group {
            let stride = strides[s];
            offs = offs.iter().flat_map(|&o| (0..local_dims[s]).map(move |v| o + v * stride)).collect();
        }
        offs
    };
    let keep_off = offsets(&keep);
    let trace_off = offsets(&traced);

    let dk = keep_off.len();
    let mut out = ComplexMatrix::zeros(dk);
    for (a, &oa) in keep_off.iter().enumerate() {
        for (b, &ob) in keep_off.iter().enumerate() {
            out[(a, b)] = trace_off.iter().map(|&t| m[(oa + t, ob + t)]).sum();
        }
    }
    Ok(out)
}

/// Reduced density matrix over `keep`, in ascending site order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize], local_dims: &[usize]) -> Result<DensityMatrix, OperatorError> {
    partial_trace_matrix(rho.matrix(), keep, local_dims).map(DensityMatrix::new_unchecked)
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matrix whose columns are the corresponding eigenvectors.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), OperatorError> {
    let h = m.hermitian_part();
    let mat: Mat<C64> = h.as_faer().to_owned();
    let evd = mat.self_adjoint_eigen(Side::Lower).map_err(|_| OperatorError::Eigendecomposition)?;
    let vals = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, ComplexMatrix::from_faer(evd.U())))
}

/// Hermitian PSD square root. Eigenvalues in `[−PSD_TOL, 0)` are clamped to
/// zero; anything more negative is an error.
pub fn herm_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix, OperatorError> {
    let deviation = m.hermiticity_error();
    if deviation > HERMITIAN_TOL * m.max_abs().max(1.0) {
        return Err(OperatorError::NotHermitian { deviation });
    }
    let (vals, vecs) = hermitian_eigen(m)?;
    let mut roots = Vec::with_capacity(vals.len());
    for &v in &vals {
        if v < -PSD_TOL {
            return Err(OperatorError::NegativeEigenvalue { value: v });
        }
        roots.push(v.max(0.0).sqrt());
    }
    // V · diag(√λ) · V†
    let d = m.dim;
    let scaled = ComplexMatrix::from_fn(d, |i, j| vecs[(i, j)] * roots[j]);
    Ok(scaled.matmul(&vecs.adjoint()).hermitian_part())
}
