use super::EngineError;
use crate::model::{build_hamiltonian, SystemSpec};
use crate::operators::{embed, pauli, Axis, ComplexMatrix, C64};

/// Relative norm below which a candidate is considered already in the span.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosureOptions {
    pub max_sites: usize,
    pub max_iterations: usize,
    pub rank_tol: f64,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self { max_sites: 4, max_iterations: 256, rank_tol: RANK_TOL }
    }
}

/// Orthonormal basis of a growing subspace of vectorized operators.
struct Span {
    basis: Vec<Vec<C64>>,
    rank_tol: f64,
}

impl Span {
    /// Adds `v` if it is independent of the current basis; returns whether it
    /// was added. Projects twice to keep the basis orthonormal in floating
    /// point.
    fn insert(&mut self, mut v: Vec<C64>) -> bool {
        let norm0 = norm(&v);
        if norm0 == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for b in &self.basis {
                let c: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (y, x) in v.iter_mut().zip(b) {
                    *y -= c * x;
                }
            }
        }
        let n = norm(&v);
        if n <= self.rank_tol * norm0 {
            return false;
        }
        v.iter_mut().for_each(|y| *y /= n);
        self.basis.push(v);
        true
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Dimension of the associative algebra generated by `generators` (all of
/// one dimension `d`), found by closing their span under right
/// multiplication by the generators. Equals `d²` exactly when the
/// generators produce every operator.
pub fn generated_algebra_dim(generators: &[ComplexMatrix], opts: &ClosureOptions) -> Result<usize, EngineError> {
    let Some(first) = generators.first() else {
        return Ok(0);
    };
    let d = first.dim();
    if let Some(g) = generators.iter().find(|g| g.dim() != d) {
        return Err(EngineError::Dimension { expected: d, found: g.dim() });
    }
    let mut span = Span { basis: Vec::new(), rank_tol: opts.rank_tol };
    let mut frontier: Vec<ComplexMatrix> = Vec::new();
    for g in generators {
        if span.insert(g.as_slice().to_vec()) {
            frontier.push(ComplexMatrix::from_vec(span.basis.last().unwrap().clone())?);
        }
    }
    let full = d * d;
    let mut iterations = 0;
    while !frontier.is_empty() && span.basis.len() < full {
        if iterations == opts.max_iterations {
            return Err(EngineError::ClosureIterationCap { iterations });
        }
        iterations += 1;
        let mut next = Vec::new();
        for b in &frontier {
            for g in generators {
                if span.insert(b.matmul(g).into_vec()) {
                    next.push(ComplexMatrix::from_vec(span.basis.last().unwrap().clone())?);
                }
            }
        }
        frontier = next;
    }
    Ok(span.basis.len())
}

/// Algebra generated by the register's jump operators `σ_j^±` (those with
/// nonzero rate), optionally together with the Hamiltonian.
pub fn algebra_closure_dim(spec: &SystemSpec, include_hamiltonian: bool) -> Result<usize, EngineError> {
    algebra_closure_dim_with(spec, include_hamiltonian, &ClosureOptions::default())
}

pub fn algebra_closure_dim_with(
    spec: &SystemSpec,
    include_hamiltonian: bool,
    opts: &ClosureOptions,
) -> Result<usize, EngineError> {
    let n = spec.n_qubits();
    if n > opts.max_sites {
        return Err(EngineError::TooManySites { sites: n, max: opts.max_sites });
    }
    let dims = spec.local_dims();
    let mut generators = Vec::new();
    for (j, q) in spec.qubits().iter().enumerate() {
        if q.gamma_gain > 0.0 {
            generators.push(embed(&pauli(Axis::Plus), j, &dims)?);
        }
        if q.gamma_damp > 0.0 {
            generators.push(embed(&pauli(Axis::Minus), j, &dims)?);
        }
    }
    if include_hamiltonian {
        generators.push(build_hamiltonian(spec)?);
    }
    generated_algebra_dim(&generators, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{QubitParams, Topology};

    fn register(n: usize) -> SystemSpec {
        let qubits = (0..n).map(|i| QubitParams::new(0.1 * i as f64, 1.0, 2.0).unwrap()).collect();
        SystemSpec::xxz(qubits, Topology::AllToAll, 1.0, 0.5).unwrap()
    }

    #[test]
    fn single_qubit_ladder_generates_everything() {
        let g = [pauli(Axis::Plus), pauli(Axis::Minus)];
        assert_eq!(generated_algebra_dim(&g, &ClosureOptions::default()).unwrap(), 4);
        assert_eq!(algebra_closure_dim(&register(1), false).unwrap(), 4);
    }

    #[test]
    fn identity_generates_itself() {
        assert_eq!(generated_algebra_dim(&[ComplexMatrix::identity(2)], &ClosureOptions::default()).unwrap(), 1);
    }

    #[test]
    fn lone_lowering_operator_is_nilpotent() {
        // span{σ⁻}, and σ⁻σ⁻ = 0
        assert_eq!(generated_algebra_dim(&[pauli(Axis::Minus)], &ClosureOptions::default()).unwrap(), 1);
    }

    #[test]
    fn registers_are_certified() {
        assert_eq!(algebra_closure_dim(&register(2), false).unwrap(), 16);
        assert_eq!(algebra_closure_dim(&register(3), true).unwrap(), 64);
    }

    #[test]
    fn site_limit() {
        assert!(matches!(algebra_closure_dim(&register(5), false), Err(EngineError::TooManySites { sites: 5, max: 4 })));
    }
}
