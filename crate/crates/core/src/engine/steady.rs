use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::generator::{build_superoperator, DEFAULT_SUPEROPERATOR_CAP};
use super::integrator::{integrate, StepControl};
use super::{EngineError, Liouvillian};
use crate::operators::{normalize_hermitian, ComplexMatrix, DensityMatrix, C64, PSD_TOL};

/// Eigenvalues with `|λ| < ZERO_EIGENVALUE_RTOL · max|λ|` belong to the kernel.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-9;

/// Largest Hilbert dimension solved by full eigendecomposition by default.
const NULLSPACE_MAX_DIM: usize = 16;
/// Largest Hilbert dimension solved by the bordered linear system by default.
const DIRECT_MAX_DIM: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyMethod {
    /// Kernel of the explicit superoperator from a full eigendecomposition.
    Nullspace,
    /// Time evolution from the maximally mixed state until `‖L[ρ]‖_F < tol`.
    LongTime,
    /// LU solve of the superoperator with one row replaced by the trace
    /// condition.
    Direct,
}

impl SteadyMethod {
    pub fn label(self) -> &'static str {
        match self {
            SteadyMethod::Nullspace => "nullspace",
            SteadyMethod::LongTime => "long_time",
            SteadyMethod::Direct => "direct",
        }
    }
}

/// Method used when none is requested.
pub fn default_method(dim: usize) -> SteadyMethod {
    if dim <= NULLSPACE_MAX_DIM {
        SteadyMethod::Nullspace
    } else if dim <= DIRECT_MAX_DIM {
        SteadyMethod::Direct
    } else {
        SteadyMethod::LongTime
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyOptions {
    /// `None` picks [`default_method`] from the Hilbert dimension.
    pub method: Option<SteadyMethod>,
    /// Bound on `‖L[ρ_ss]‖_F`; the long-time method runs until it holds.
    pub tol: f64,
    pub zero_rtol: f64,
    pub superoperator_cap: usize,
    /// Long-time safeguard: give up after this much simulated time.
    pub horizon: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            method: None,
            tol: 1e-9,
            zero_rtol: ZERO_EIGENVALUE_RTOL,
            superoperator_cap: DEFAULT_SUPEROPERATOR_CAP,
            horizon: 1e6,
            rtol: 1e-10,
            atol: 1e-13,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyStateResult {
    pub rho_ss: DensityMatrix,
    pub residual_norm: f64,
    pub method: SteadyMethod,
    /// Set when the numerical kernel has dimension greater than one.
    pub degeneracy_flag: bool,
    /// Kernel dimension; only the nullspace method measures it.
    pub kernel_dim: Option<usize>,
}

pub fn steady_state(liouv: &Liouvillian, method: SteadyMethod, tol: f64) -> Result<SteadyStateResult, EngineError> {
    steady_state_with(liouv, &SteadyOptions { method: Some(method), tol, ..Default::default() })
}

pub fn steady_state_with(liouv: &Liouvillian, opts: &SteadyOptions) -> Result<SteadyStateResult, EngineError> {
    let method = opts.method.unwrap_or_else(|| default_method(liouv.dim()));
    let (rho, kernel_dim) = match method {
        SteadyMethod::Nullspace => {
            let (rho, k) = nullspace_state(liouv, opts)?;
            (rho, Some(k))
        }
        SteadyMethod::Direct => (direct_state(liouv, opts)?, None),
        SteadyMethod::LongTime => (long_time_state(liouv, opts)?, None),
    };
    let residual_norm = liouv.apply(rho.matrix())?.frobenius_norm();
    if !(residual_norm <= opts.tol) {
        return Err(EngineError::Residual { residual: residual_norm, tol: opts.tol });
    }
    Ok(SteadyStateResult {
        rho_ss: rho,
        residual_norm,
        method,
        degeneracy_flag: kernel_dim.is_some_and(|k| k > 1),
        kernel_dim,
    })
}

fn superoperator(liouv: &Liouvillian, cap: usize) -> Result<std::borrow::Cow<'_, ComplexMatrix>, EngineError> {
    Ok(match liouv.superoperator() {
        Some(s) => std::borrow::Cow::Borrowed(s),
        None => std::borrow::Cow::Owned(build_superoperator(liouv, cap)?),
    })
}

struct Kernel {
    vectors: Vec<Vec<C64>>,
    smallest: f64,
}

fn kernel(liouv: &Liouvillian, zero_rtol: f64, cap: usize) -> Result<Kernel, EngineError> {
    let s = superoperator(liouv, cap)?;
    let m: Mat<C64> = s.as_faer().to_owned();
    let evd = m.eigen().map_err(|_| EngineError::Eigendecomposition)?;
    let vals: Vec<C64> = evd.S().column_vector().iter().copied().collect();
    let scale = vals.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let smallest = vals.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    // A zero generator has every eigenvalue in its kernel.
    let threshold = if scale == 0.0 { f64::INFINITY } else { zero_rtol * scale };
    let u = evd.U();
    let vectors = (0..vals.len())
        .filter(|&c| vals[c].norm() < threshold)
        .map(|c| (0..u.nrows()).map(|r| u[(r, c)]).collect())
        .collect();
    Ok(Kernel { vectors, smallest })
}

/// Number of eigenvalues of the explicit superoperator within
/// `zero_rtol · max|λ|` of zero.
pub fn kernel_dimension(liouv: &Liouvillian, zero_rtol: f64, cap: usize) -> Result<usize, EngineError> {
    Ok(kernel(liouv, zero_rtol, cap)?.vectors.len())
}

fn nullspace_state(liouv: &Liouvillian, opts: &SteadyOptions) -> Result<(DensityMatrix, usize), EngineError> {
    let k = kernel(liouv, opts.zero_rtol, opts.superoperator_cap)?;
    if k.vectors.is_empty() {
        return Err(EngineError::NoZeroEigenvalue { smallest: k.smallest });
    }
    // With a degenerate kernel any trace-one Hermitian element is stationary;
    // take the vector with the largest trace and check that it is a state.
    let mut best: Option<(f64, ComplexMatrix)> = None;
    for v in &k.vectors {
        let m = ComplexMatrix::unvectorize(v)?;
        let tr = m.trace().norm();
        if best.as_ref().is_none_or(|(b, _)| tr > *b) {
            best = Some((tr, m));
        }
    }
    let (tr, m) = best.expect("kernel is nonempty");
    let d = liouv.dim();
    if tr < 1e-8 / (d as f64).sqrt() {
        return Err(EngineError::NonNormalizableKernel);
    }
    let m = m.scale(C64::new(1.0, 0.0) / m.trace());
    let rho = DensityMatrix::repair(&m).map_err(|_| {
        if k.vectors.len() > 1 {
            EngineError::DegenerateKernel { dim: k.vectors.len() }
        } else {
            EngineError::NonNormalizableKernel
        }
    })?;
    Ok((rho, k.vectors.len()))
}

fn direct_state(liouv: &Liouvillian, opts: &SteadyOptions) -> Result<DensityMatrix, EngineError> {
    let d = liouv.dim();
    let n = d * d;
    let s = superoperator(liouv, opts.superoperator_cap)?;
    // The diagonal rows are linearly dependent (L is trace-annihilating), so
    // row 0 can carry the normalization Σ_i ρ_ii = 1 instead.
    let mut a: Mat<C64> = s.as_faer().to_owned();
    for c in 0..n {
        a[(0, c)] = C64::new(0.0, 0.0);
    }
    for i in 0..d {
        a[(0, i * d + i)] = C64::new(1.0, 0.0);
    }
    let mut rhs: Mat<C64> = Mat::zeros(n, 1);
    rhs[(0, 0)] = C64::new(1.0, 0.0);
    let x = a.partial_piv_lu().solve(&rhs);
    let v: Vec<C64> = (0..n).map(|r| x[(r, 0)]).collect();
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EngineError::SingularSystem);
    }
    let m = ComplexMatrix::unvectorize(&v)?;
    DensityMatrix::repair(&m).map_err(|_| EngineError::SingularSystem)
}

fn long_time_state(liouv: &Liouvillian, opts: &SteadyOptions) -> Result<DensityMatrix, EngineError> {
    let d = liouv.dim();
    let mut scratch = ComplexMatrix::zeros(d);
    let ctrl = StepControl { rtol: opts.rtol, atol: opts.atol, max_steps: usize::MAX };
    let mut y = DensityMatrix::maximally_mixed(d).into_matrix();
    let (mut t, mut chunk) = (0.0, 1.0);
    // Chunks double in length, so a residual that stops shrinking over
    // several of them has hit the integrator's noise floor.
    let (mut best, mut stalled) = (f64::INFINITY, 0);
    loop {
        let residual = liouv.apply(&y)?.frobenius_norm();
        if residual < opts.tol {
            break;
        }
        if residual < 0.5 * best {
            (best, stalled) = (residual, 0);
        } else {
            stalled += 1;
        }
        if t >= opts.horizon || stalled >= 6 {
            return Err(EngineError::NotConverged { t, residual });
        }
        let t_next = (t + chunk).min(opts.horizon);
        let rhs = |x: &ComplexMatrix, out: &mut ComplexMatrix| liouv.apply_hermitian_into(x, out, &mut scratch);
        let (end, _) = integrate(rhs, &y, t, t_next, &[], ctrl, |_, _, _| Ok(()))?;
        y = normalize_hermitian(&end);
        t = t_next;
        chunk *= 2.0;
    }
    let rho = DensityMatrix::repair(&y).map_err(|_| EngineError::NotConverged { t, residual: f64::NAN })?;
    debug_assert!(rho.matrix().hermiticity_error() <= PSD_TOL);
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{magnetization, product_steady_state, QubitParams, SystemSpec, Topology};
    use crate::random::seeded_rng;
    use rand::Rng;

    fn single(omega: f64, g: f64, d: f64) -> Liouvillian {
        let spec = SystemSpec::new(vec![QubitParams::new(omega, g, d).unwrap()], vec![], Topology::Custom).unwrap();
        Liouvillian::new(&spec).unwrap()
    }

    #[test]
    fn single_qubit_all_methods() {
        let l = single(1.3, 1.0, 4.0);
        let m = magnetization(1.0, 4.0).unwrap();
        let expected = ComplexMatrix::from_real_diag(&[(1.0 + m) / 2.0, (1.0 - m) / 2.0]);
        for method in [SteadyMethod::Nullspace, SteadyMethod::Direct, SteadyMethod::LongTime] {
            let r = steady_state(&l, method, 1e-10).unwrap();
            assert!(r.rho_ss.matrix().max_abs_diff(&expected) < 1e-9, "{method:?}");
            assert!(!r.degeneracy_flag);
        }
    }

    #[test]
    fn xxz_identical_ratio_pair_is_product() {
        let qubits = vec![QubitParams::new(0.4, 1.0, 3.0).unwrap(), QubitParams::new(-0.9, 2.0, 6.0).unwrap()];
        let spec = SystemSpec::xxz(qubits, Topology::AllToAll, 1.7, 0.6).unwrap();
        let l = Liouvillian::new(&spec).unwrap();
        let r = steady_state(&l, SteadyMethod::Nullspace, 1e-10).unwrap();
        assert_eq!(r.kernel_dim, Some(1));
        assert!(r.rho_ss.matrix().max_abs_diff(product_steady_state(&spec).matrix()) < 1e-8);
    }

    #[test]
    fn methods_agree_on_generic_three_qubits() {
        let mut rng = seeded_rng(11);
        let qubits = (0..3)
            .map(|_| QubitParams::new(rng.random_range(-1.0..1.0), rng.random_range(0.2..2.0), rng.random_range(0.2..2.0)).unwrap())
            .collect();
        let spec = SystemSpec::uniform(qubits, Topology::AllToAll, 0.8, 0.3, 0.5).unwrap();
        let l = Liouvillian::new(&spec).unwrap();
        let a = steady_state(&l, SteadyMethod::Nullspace, 1e-9).unwrap();
        let b = steady_state(&l, SteadyMethod::LongTime, 1e-10).unwrap();
        let c = steady_state(&l, SteadyMethod::Direct, 1e-9).unwrap();
        assert!(a.rho_ss.matrix().max_abs_diff(b.rho_ss.matrix()) < 1e-7);
        assert!(a.rho_ss.matrix().max_abs_diff(c.rho_ss.matrix()) < 1e-9);
    }

    #[test]
    fn dissipation_free_register_is_degenerate() {
        let l = Liouvillian::from_parts(ComplexMatrix::from_real_diag(&[1.0, -1.0]), vec![], vec![2]).unwrap();
        assert_eq!(kernel_dimension(&l, ZERO_EIGENVALUE_RTOL, 8).unwrap(), 2);
        let r = steady_state(&l, SteadyMethod::Nullspace, 1e-9).unwrap();
        assert!(r.degeneracy_flag);
    }

    #[test]
    fn default_method_thresholds() {
        assert_eq!(default_method(16), SteadyMethod::Nullspace);
        assert_eq!(default_method(32), SteadyMethod::Direct);
        assert_eq!(default_method(128), SteadyMethod::LongTime);
    }
}
