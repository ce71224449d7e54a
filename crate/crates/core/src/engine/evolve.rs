use std::collections::BTreeMap;

use super::integrator::{integrate, IntegratorStats, StepControl};
use super::{EngineError, Liouvillian};
use crate::operators::{hermitian_eigen, normalize_hermitian, ComplexMatrix, DensityMatrix, C64};

/// Trace error tolerated before repair; larger drift means the integrator
/// has failed.
pub const MAX_TRACE_DRIFT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Keep every sampled state in the trace.
    pub retain_states: bool,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, retain_states: true, max_steps: 50_000_000 }
    }
}

/// Deviation of a raw sampled state before it was repaired.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, Default)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub observables: BTreeMap<String, Vec<C64>>,
    pub diagnostics: Vec<SampleDiagnostics>,
    pub stats: IntegratorStats,
}

impl EvolutionTrace {
    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    pub fn series(&self, name: &str) -> Option<&[C64]> {
        self.observables.get(name).map(Vec::as_slice)
    }

    /// Most negative eigenvalue seen across all samples.
    pub fn worst_min_eigenvalue(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }
}

/// `count` logarithmically spaced times from `t_min` to `t_max` inclusive.
pub fn log_time_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    assert!(t_min > 0.0 && t_max > t_min && count >= 2);
    let (a, b) = (t_min.ln(), t_max.ln());
    let mut grid: Vec<f64> = (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect();
    grid[0] = t_min;
    grid[count - 1] = t_max;
    grid
}

fn check_samples(sample_times: &[f64], t_end: f64) -> Result<(), EngineError> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(EngineError::SampleTimes(format!("t_end = {t_end} must be finite and non-negative")));
    }
    for (i, &t) in sample_times.iter().enumerate() {
        if !(0.0..=t_end).contains(&t) {
            return Err(EngineError::SampleTimes(format!("sample {i} at t = {t} outside [0, {t_end}]")));
        }
        if i > 0 && t <= sample_times[i - 1] {
            return Err(EngineError::SampleTimes(format!("sample {i} at t = {t} is not strictly increasing")));
        }
    }
    Ok(())
}

/// Integrates `dρ/dt = L[ρ]` from `ρ(0) = rho0` and samples at `sample_times`.
pub fn evolve(
    liouv: &Liouvillian,
    rho0: &DensityMatrix,
    t_end: f64,
    sample_times: &[f64],
    opts: &EvolveOptions,
) -> Result<EvolutionTrace, EngineError> {
    evolve_observed(liouv, rho0, t_end, sample_times, opts, |_, _| Vec::new())
}

/// Like [`evolve`], recording the named values returned by `observe` at
/// every sample. Each sampled state is Hermitized and trace-normalized
/// before it is stored or observed.
pub fn evolve_observed<O>(
    liouv: &Liouvillian,
    rho0: &DensityMatrix,
    t_end: f64,
    sample_times: &[f64],
    opts: &EvolveOptions,
    mut observe: O,
) -> Result<EvolutionTrace, EngineError>
where
    O: FnMut(f64, &DensityMatrix) -> Vec<(String, C64)>,
{
    if rho0.dim() != liouv.dim() {
        return Err(EngineError::Dimension { expected: liouv.dim(), found: rho0.dim() });
    }
    check_samples(sample_times, t_end)?;

    let mut trace = EvolutionTrace::default();
    let mut scratch = ComplexMatrix::zeros(liouv.dim());
    let ctrl = StepControl { rtol: opts.rtol, atol: opts.atol, max_steps: opts.max_steps };
    let rhs = |y: &ComplexMatrix, out: &mut ComplexMatrix| liouv.apply_hermitian_into(y, out, &mut scratch);

    let (_, stats) = integrate(rhs, rho0.matrix(), 0.0, t_end, sample_times, ctrl, |_, t, raw| {
        let tr = raw.trace();
        let drift = (tr - C64::new(1.0, 0.0)).norm();
        if drift > MAX_TRACE_DRIFT {
            return Err(EngineError::TraceDrift { t, drift });
        }
        let repaired = normalize_hermitian(raw);
        let (vals, _) = hermitian_eigen(&repaired)?;
        trace.diagnostics.push(SampleDiagnostics {
            trace_error: drift,
            hermiticity_error: raw.hermiticity_error(),
            min_eigenvalue: vals.first().copied().unwrap_or(0.0),
        });
        let state = DensityMatrix::new_unchecked(repaired);
        for (name, value) in observe(t, &state) {
            trace.observables.entry(name).or_default().push(value);
        }
        trace.times.push(t);
        if opts.retain_states {
            trace.states.push(state);
        }
        Ok(())
    })?;
    trace.stats = stats;
    debug_assert!(trace.observables.values().all(|s| s.len() == trace.times.len()));
    Ok(trace)
}
