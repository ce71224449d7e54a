use faer::Mat;

use super::EngineError;
use crate::model::{build_hamiltonian, SystemSpec};
use crate::operators::{embed, pauli, Axis, ComplexMatrix, C64};

/// Largest Hilbert dimension for which an explicit superoperator is built
/// by default (`d² × d²` complex entries).
pub const DEFAULT_SUPEROPERATOR_CAP: usize = 128;

/// Jump operator `A` entering the generator as `½ γ D[A]`.
#[derive(Clone, Debug)]
pub struct Jump {
    rate: f64,
    op: ComplexMatrix,
    nonzeros: Vec<(usize, usize, C64)>,
}

impl Jump {
    pub fn new(rate: f64, op: ComplexMatrix) -> Self {
        let d = op.dim();
        let mut nonzeros = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let v = op[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    nonzeros.push((i, j, v));
                }
            }
        }
        Self { rate, op, nonzeros }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn op(&self) -> &ComplexMatrix {
        &self.op
    }

    /// Coefficient `γ/2` of `A ρ A†` in the generator.
    fn weight(&self) -> f64 {
        0.5 * self.rate
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    MatrixFree,
    ExplicitSuperoperator,
}

/// Lindblad generator `L[ρ] = −i[H, ρ] + ½ Σ_c γ_c (A_c ρ A_c† − ½{A_c†A_c, ρ})`.
///
/// Applied matrix-free through the effective Hamiltonian
/// `H_eff = H − (i/4) Σ_c γ_c A_c†A_c`, so that
/// `L[ρ] = −i(H_eff ρ − ρ H_eff†) + Σ_c (γ_c/2) A_c ρ A_c†`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    local_dims: Vec<usize>,
    hamiltonian: ComplexMatrix,
    h_eff: ComplexMatrix,
    jumps: Vec<Jump>,
    superoperator: Option<ComplexMatrix>,
}

impl Liouvillian {
    /// Qubit register: jumps `σ_j⁺` at rate `Γg_j` and `σ_j⁻` at rate `Γd_j`.
    pub fn new(spec: &SystemSpec) -> Result<Self, EngineError> {
        let dims = spec.local_dims();
        let hamiltonian = build_hamiltonian(spec)?;
        let (plus, minus) = (pauli(Axis::Plus), pauli(Axis::Minus));
        let mut jumps = Vec::new();
        for (j, q) in spec.qubits().iter().enumerate() {
            if q.gamma_gain > 0.0 {
                jumps.push((q.gamma_gain, embed(&plus, j, &dims)?));
            }
            if q.gamma_damp > 0.0 {
                jumps.push((q.gamma_damp, embed(&minus, j, &dims)?));
            }
        }
        Self::from_parts(hamiltonian, jumps, dims)
    }

    /// Arbitrary register: full-register Hamiltonian and `(γ, A)` jump pairs.
    pub fn from_parts(
        hamiltonian: ComplexMatrix,
        jumps: Vec<(f64, ComplexMatrix)>,
        local_dims: Vec<usize>,
    ) -> Result<Self, EngineError> {
        let d: usize = local_dims.iter().product();
        if hamiltonian.dim() != d {
            return Err(EngineError::Dimension { expected: d, found: hamiltonian.dim() });
        }
        let mut h_eff = hamiltonian.clone();
        let mut built = Vec::with_capacity(jumps.len());
        for (rate, op) in jumps {
            if op.dim() != d {
                return Err(EngineError::Dimension { expected: d, found: op.dim() });
            }
            let ada = op.adjoint().matmul(&op);
            h_eff.axpy(C64::new(0.0, -0.25 * rate), &ada);
            built.push(Jump::new(rate, op));
        }
        Ok(Self { local_dims, hamiltonian, h_eff, jumps: built, superoperator: None })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn representation(&self) -> Representation {
        if self.superoperator.is_some() {
            Representation::ExplicitSuperoperator
        } else {
            Representation::MatrixFree
        }
    }

    pub fn superoperator(&self) -> Option<&ComplexMatrix> {
        self.superoperator.as_ref()
    }

    /// Builds and caches the explicit superoperator.
    pub fn with_superoperator(mut self, cap: usize) -> Result<Self, EngineError> {
        if self.superoperator.is_none() {
            self.superoperator = Some(build_superoperator(&self, cap)?);
        }
        Ok(self)
    }

    /// `L[ρ]` for an arbitrary (not necessarily Hermitian) operator.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix, EngineError> {
        self.check_dim(rho)?;
        let mut out = ComplexMatrix::zeros(self.dim());
        let mut left = ComplexMatrix::zeros(self.dim());
        self.h_eff.matmul_into(rho, &mut left, false);
        let right = rho.matmul(&self.h_eff.adjoint());
        let minus_i = C64::new(0.0, -1.0);
        for ((o, &l), &r) in out.as_mut_slice().iter_mut().zip(left.as_slice()).zip(right.as_slice()) {
            *o = minus_i * (l - r);
        }
        self.add_jump_terms(rho, &mut out);
        Ok(out)
    }

    /// `L[ρ]` for Hermitian `ρ`, using `ρ H_eff† = (H_eff ρ)†`. Writes into
    /// `out`; `scratch` must have the register dimension.
    pub(crate) fn apply_hermitian_into(&self, rho: &ComplexMatrix, out: &mut ComplexMatrix, scratch: &mut ComplexMatrix) {
        self.h_eff.matmul_into(rho, scratch, false);
        let d = self.dim();
        let minus_i = C64::new(0.0, -1.0);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = minus_i * (scratch[(i, j)] - scratch[(j, i)].conj());
            }
        }
        self.add_jump_terms(rho, out);
    }

    fn add_jump_terms(&self, rho: &ComplexMatrix, out: &mut ComplexMatrix) {
        for jump in &self.jumps {
            let w = jump.weight();
            // (A ρ A†)[i,k] = Σ A[i,j] ρ[j,l] conj(A[k,l])
            for &(i, j, a) in &jump.nonzeros {
                let wa = a * w;
                for &(k, l, b) in &jump.nonzeros {
                    out[(i, k)] += wa * b.conj() * rho[(j, l)];
                }
            }
        }
    }

    fn check_dim(&self, rho: &ComplexMatrix) -> Result<(), EngineError> {
        if rho.dim() != self.dim() {
            return Err(EngineError::Dimension { expected: self.dim(), found: rho.dim() });
        }
        Ok(())
    }

    /// Eigenvalues of the explicit superoperator (built on the fly if absent).
    pub fn spectrum(&self, cap: usize) -> Result<Vec<C64>, EngineError> {
        let owned;
        let s = match &self.superoperator {
            Some(s) => s,
            None => {
                owned = build_superoperator(self, cap)?;
                &owned
            }
        };
        let m: Mat<C64> = s.as_faer().to_owned();
        m.eigenvalues().map_err(|_| EngineError::Eigendecomposition)
    }
}

/// `L[ρ]`; see [`Liouvillian::apply`].
pub fn apply_liouvillian(liouv: &Liouvillian, rho: &ComplexMatrix) -> Result<ComplexMatrix, EngineError> {
    liouv.apply(rho)
}

/// Explicit `d² × d²` matrix of the generator in the column-stacking
/// convention `vec(AXB) = (Bᵀ ⊗ A) vec(X)`, where `vec(X)[j·d + i] = X[i, j]`.
pub fn build_superoperator(liouv: &Liouvillian, cap: usize) -> Result<ComplexMatrix, EngineError> {
    let d = liouv.dim();
    if d > cap {
        return Err(EngineError::SuperoperatorCap { dim: d, cap });
    }
    let n = d * d;
    let mut s = ComplexMatrix::zeros(n);
    let h = &liouv.h_eff;
    let minus_i = C64::new(0.0, -1.0);
    let plus_i = C64::new(0.0, 1.0);
    // −i H_eff ρ  →  −i (I ⊗ H_eff)
    for j in 0..d {
        for i in 0..d {
            for k in 0..d {
                s[(j * d + i, j * d + k)] += minus_i * h[(i, k)];
            }
        }
    }
    // +i ρ H_eff†  →  +i (conj(H_eff) ⊗ I)
    for j in 0..d {
        for l in 0..d {
            let v = plus_i * h[(j, l)].conj();
            for i in 0..d {
                s[(j * d + i, l * d + i)] += v;
            }
        }
    }
    // (γ/2) A ρ A†  →  (γ/2) conj(A) ⊗ A
    for jump in &liouv.jumps {
        let w = jump.weight();
        for &(i, k, a) in &jump.nonzeros {
            for &(j, l, b) in &jump.nonzeros {
                s[(j * d + i, l * d + k)] += a * b.conj() * w;
            }
        }
    }
    Ok(s)
}
