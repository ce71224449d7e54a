//! Figure presets: fidelity and correlation time series for the six-qubit
//! networks, synchronization heatmaps for two qubits, and the five-qubit
//! all-to-all versus one-to-all comparison.

use std::f64::consts::PI;

use qsync_core::engine::{evolve, EngineError, EvolveOptions, Liouvillian};
use qsync_core::model::{initial_state, product_steady_state, QubitParams, StateInit, SystemSpec, Topology};
use qsync_core::observables::{correlation_sums, fidelity, max_connected_correlation};
use qsync_core::operators::DensityMatrix;
use qsync_core::sync::{two_qubit_analytic, TwoQubitAnalyticParams};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{linspace, Command, RunConfig};
use crate::error::CliError;
use crate::output::{json_real, Column, Kind, Table, Value};
use crate::sweep::{execute_sweep, steady_options, steady_sync_values, SweepAxis, SweepGrid, SweepJob, SweepOptions};

pub const FIG1_GAIN: [f64; 6] = [1.0, 0.2, 20.0, 2.0, 2.5, 0.3];
/// Same gain/damping ratio (1/4) on every qubit.
pub const FIG1B_DAMP: [f64; 6] = [4.0, 0.8, 80.0, 8.0, 10.0, 1.2];
pub const FIG1C_DAMP: [f64; 6] = [0.5, 4.0, 80.0, 1.0, 0.5, 0.2];
pub const FIG1_COUPLING: (f64, f64, f64) = (80.0, 80.0, 1.0);

/// Environment rates of qubits 2–4 relative to qubit 1.
pub const FIG3_SAME_RATIO: ([f64; 3], [f64; 3]) = ([1.5, 2.5, 0.6], [1.5, 2.5, 0.6]);
pub const FIG3_MIXED_RATIO: ([f64; 3], [f64; 3]) = ([0.8, 5.0, 0.1], [1.3, 0.9, 1.2]);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Fig1b,
    Fig1c,
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig3d,
    FigS1,
}

impl Preset {
    pub const ALL: [Preset; 9] = [
        Preset::Fig1b,
        Preset::Fig1c,
        Preset::Fig2a,
        Preset::Fig2b,
        Preset::Fig3a,
        Preset::Fig3b,
        Preset::Fig3c,
        Preset::Fig3d,
        Preset::FigS1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1b => "fig1b",
            Preset::Fig1c => "fig1c",
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Fig3c => "fig3c",
            Preset::Fig3d => "fig3d",
            Preset::FigS1 => "figS1",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(name))
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|p| p.name()).collect()
    }

    pub fn command(self) -> Command {
        match self {
            Preset::Fig1b | Preset::Fig1c | Preset::FigS1 => Command::Evolve,
            _ => Command::Sweep,
        }
    }

    /// Spec echoed into the config: the full spec for the time series, the
    /// highlighted or central grid point for the heatmaps.
    pub fn base_spec(self) -> SystemSpec {
        match self {
            Preset::Fig1b | Preset::FigS1 => fig1_spec(&FIG1B_DAMP),
            Preset::Fig1c => fig1_spec(&FIG1C_DAMP),
            Preset::Fig2a | Preset::Fig2b => fig2_spec(0.25, -0.25, 0.0, 1.0).expect("valid point"),
            _ => {
                let (v, topo) = self.fig3().expect("fig3 preset");
                fig3_spec(0.0, 0.0, v, topo).expect("valid point")
            }
        }
    }

    /// Integrator tolerances. The six-qubit runs need far tighter ones than
    /// the defaults: their step size is set by stability, so tightening is
    /// nearly free, and at rtol 1e-8 the residual stalls near 1e-4.
    pub fn default_tolerances(self) -> (f64, f64) {
        match self.command() {
            Command::Evolve => (1e-13, 1e-16),
            _ => (crate::config::DEFAULT_RTOL, crate::config::DEFAULT_ATOL),
        }
    }

    pub fn default_grid_points(self) -> Option<usize> {
        match self {
            Preset::Fig2a => Some(41),
            Preset::Fig2b | Preset::Fig3a | Preset::Fig3b | Preset::Fig3c | Preset::Fig3d => Some(21),
            _ => None,
        }
    }

    fn fig3(self) -> Option<(Fig3Variant, Topology)> {
        match self {
            Preset::Fig3a => Some((Fig3Variant::SameRatio, Topology::AllToAll)),
            Preset::Fig3b => Some((Fig3Variant::SameRatio, Topology::OneToAll)),
            Preset::Fig3c => Some((Fig3Variant::MixedRatio, Topology::AllToAll)),
            Preset::Fig3d => Some((Fig3Variant::MixedRatio, Topology::OneToAll)),
            _ => None,
        }
    }
}

pub fn fig1_spec(damp: &[f64; 6]) -> SystemSpec {
    let qubits = FIG1_GAIN.iter().zip(damp).map(|(&g, &d)| QubitParams::new(0.0, g, d).expect("positive rates")).collect();
    let (ux, uy, uz) = FIG1_COUPLING;
    SystemSpec::uniform(qubits, Topology::AllToAll, ux, uy, uz).expect("valid spec")
}

/// Two qubits at magnetizations `m1`, `m2` (larger rate fixed to 1),
/// `Δ = ω₁ − ω₂` split symmetrically, isotropic coupling `U`.
pub fn fig2_spec(m1: f64, m2: f64, delta: f64, u: f64) -> Result<SystemSpec, String> {
    let q1 = QubitParams::from_magnetization(delta / 2.0, m1).map_err(|e| e.to_string())?;
    let q2 = QubitParams::from_magnetization(-delta / 2.0, m2).map_err(|e| e.to_string())?;
    SystemSpec::uniform(vec![q1, q2], Topology::AllToAll, u, u, u).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fig3Variant {
    /// `Ux = Uy = 2`, environment sharing qubit 1's ratio.
    SameRatio,
    /// `Ux = 2, Uy = 0.5`, environment ratios all different.
    MixedRatio,
}

impl Fig3Variant {
    fn coupling(self) -> (f64, f64, f64) {
        match self {
            Fig3Variant::SameRatio => (2.0, 2.0, 1.0),
            Fig3Variant::MixedRatio => (2.0, 0.5, 1.0),
        }
    }

    fn multipliers(self) -> ([f64; 3], [f64; 3]) {
        match self {
            Fig3Variant::SameRatio => FIG3_SAME_RATIO,
            Fig3Variant::MixedRatio => FIG3_MIXED_RATIO,
        }
    }
}

/// Five qubits: the memory qubit 0 at `m1`, qubit 1 at `m_env`, both with
/// the larger rate fixed to 1, and qubits 2–4 at fixed multiples of
/// qubit 1's rates. Site 0 is the hub of the one-to-all network.
pub fn fig3_spec(m1: f64, m_env: f64, variant: Fig3Variant, topology: Topology) -> Result<SystemSpec, String> {
    let q0 = QubitParams::from_magnetization(0.0, m1).map_err(|e| e.to_string())?;
    let q1 = QubitParams::from_magnetization(0.0, m_env).map_err(|e| e.to_string())?;
    let (gm, dm) = variant.multipliers();
    let mut qubits = vec![q0, q1];
    for i in 0..3 {
        qubits.push(QubitParams::new(0.0, q1.gamma_gain * gm[i], q1.gamma_damp * dm[i]).map_err(|e| e.to_string())?);
    }
    let (ux, uy, uz) = variant.coupling();
    SystemSpec::uniform(qubits, topology, ux, uy, uz).map_err(|e| e.to_string())
}

/// What a command produced besides its CSV: a JSON summary for the sidecar
/// and, for checking commands, a verdict.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub results: serde_json::Value,
    pub check_failure: Option<String>,
}

pub fn run_preset(cfg: &RunConfig, preset: Preset) -> Result<Outcome, CliError> {
    match preset {
        Preset::Fig1b | Preset::Fig1c => {
            let table = fig1_series(cfg, cfg.spec()?)?;
            table.0.write(&cfg.output_path)?;
            Ok(Outcome { results: table.1, check_failure: None })
        }
        Preset::FigS1 => {
            let (table, results) = figs1_series(cfg)?;
            table.write(&cfg.output_path)?;
            Ok(Outcome { results, check_failure: None })
        }
        Preset::Fig2a | Preset::Fig2b => {
            let grid = run_fig2(cfg, preset, SweepOptions::new(cfg.worker_count))?;
            Ok(Outcome { results: grid_summary(&grid, "s_max"), check_failure: None })
        }
        _ => {
            let grid = run_fig3(cfg, preset, SweepOptions::new(cfg.worker_count))?;
            Ok(Outcome { results: grid_summary(&grid, "s_total"), check_failure: None })
        }
    }
}

fn grid_summary(grid: &SweepGrid, column: &str) -> serde_json::Value {
    let vals = grid.reals(column).unwrap_or_default();
    let max = vals.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    json!({ "points": grid.table.rows.len(), "failures": grid.failures(), "complete": grid.is_complete(), format!("max_{column}"): json_real(max) })
}

// ---- time series -----------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizonParams {
    pub t_min: f64,
    pub points_per_octave: usize,
    pub residual_tol: f64,
    pub max_horizon: f64,
}

impl HorizonParams {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            t_min: cfg.params.t_min,
            points_per_octave: cfg.params.points_per_octave,
            residual_tol: cfg.params.residual_tol,
            max_horizon: cfg.params.max_horizon,
        }
    }
}

/// Samples of one evolution on the grid `t_min · 2^(i/points_per_octave)`.
#[derive(Clone, Debug)]
pub struct HorizonRun {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// `(t, ‖L[ρ(t)]‖_F)` at the end of every octave.
    pub residuals: Vec<(f64, f64)>,
    /// Whether the residual fell below the tolerance before the run stopped.
    pub converged: bool,
}

impl HorizonRun {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("at least one sample")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("at least one sample")
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().map_or(f64::NAN, |r| r.1)
    }
}

/// Octaves without the residual halving after which a run counts as
/// stalled at the integrator's noise floor.
const STALL_OCTAVES: usize = 6;

/// Evolves octave by octave until `‖L[ρ]‖_F < residual_tol`, the residual
/// stalls, or `max_horizon` is passed.
pub fn evolve_to_horizon(
    liouv: &Liouvillian,
    rho0: &DensityMatrix,
    hp: &HorizonParams,
    opts: &EvolveOptions,
) -> Result<HorizonRun, EngineError> {
    let ppo = hp.points_per_octave;
    let grid_time = |i: usize| {
        if i % ppo == 0 {
            hp.t_min * 2f64.powi((i / ppo) as i32)
        } else {
            hp.t_min * 2f64.powf(i as f64 / ppo as f64)
        }
    };
    let opts = EvolveOptions { retain_states: true, ..*opts };
    let first = evolve(liouv, rho0, hp.t_min, &[hp.t_min], &opts)?;
    let mut run = HorizonRun { times: vec![hp.t_min], states: first.states, residuals: Vec::new(), converged: false };
    for octave in 1usize.. {
        let (a, b) = (grid_time((octave - 1) * ppo), grid_time(octave * ppo));
        let indices: Vec<usize> = ((octave - 1) * ppo + 1..=octave * ppo).collect();
        let local: Vec<f64> = indices.iter().map(|&i| grid_time(i) - a).collect();
        let chunk = evolve(liouv, run.final_state(), b - a, &local, &opts)?;
        run.times.extend(indices.iter().map(|&i| grid_time(i)));
        run.states.extend(chunk.states);
        let residual = liouv.apply(run.final_state().matrix())?.frobenius_norm();
        run.residuals.push((b, residual));
        if residual < hp.residual_tol {
            run.converged = true;
            break;
        }
        let n = run.residuals.len();
        let stalled = b >= 1.0 && n > STALL_OCTAVES && residual > 0.5 * run.residuals[n - 1 - STALL_OCTAVES].1;
        if stalled || b >= hp.max_horizon {
            break;
        }
    }
    Ok(run)
}

const SUM_COLUMNS: [&str; 4] = ["C++", "C--", "C+-", "C-+"];

fn series_table() -> Table {
    let mut cols = vec![
        Column::new("series", Kind::Text, "initial state / with or without couplings"),
        Column::real("t", "time (inverse rate units)"),
        Column::real("fidelity", "F[ρ(t), ρ₀] with ρ₀ the product of single-qubit limit cycles"),
        Column::real("max_corr", "largest connected correlation modulus over pairs and axes x,y,z,+,−"),
    ];
    cols.extend(SUM_COLUMNS.iter().map(|s| Column::complex(*s, format!("Σ_{{j<k}} ⟨σ_j^a σ_k^b⟩, (a,b) from {s}"))));
    Table::new(cols)
}

struct SeriesJob {
    label: String,
    liouv: Liouvillian,
    rho0: DensityMatrix,
}

fn run_series(
    cfg: &RunConfig,
    jobs: Vec<SeriesJob>,
    references: &[DensityMatrix],
    table: &mut Table,
) -> Result<serde_json::Value, CliError> {
    let hp = HorizonParams::from_config(cfg);
    let opts = EvolveOptions { rtol: cfg.params.rtol, atol: cfg.params.atol, ..Default::default() };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count.max(1))
        .build()
        .map_err(|e| CliError::Solver(format!("worker pool: {e}")))?;
    let runs: Vec<Result<HorizonRun, EngineError>> =
        pool.install(|| jobs.par_iter().map(|j| evolve_to_horizon(&j.liouv, &j.rho0, &hp, &opts)).collect());
    let mut summary = serde_json::Map::new();
    for ((job, run), reference) in jobs.iter().zip(runs).zip(references) {
        let run = run?;
        let mut last = (f64::NAN, f64::NAN);
        for (&t, rho) in run.times.iter().zip(&run.states) {
            let f = fidelity(rho, reference)?;
            let mc = max_connected_correlation(rho)?;
            let sums = correlation_sums(rho)?;
            let mut row = vec![Value::Text(job.label.clone()), Value::Real(t), Value::Real(f), Value::Real(mc)];
            row.extend(SUM_COLUMNS.iter().map(|s| Value::Complex(sums.sum(s))));
            table.push(row);
            last = (f, mc);
        }
        summary.insert(
            job.label.clone(),
            json!({
                "final_fidelity": json_real(last.0),
                "final_max_corr": json_real(last.1),
                "horizon": json_real(run.horizon()),
                "final_residual": json_real(run.final_residual()),
                "converged": run.converged,
                "samples": run.times.len(),
            }),
        );
    }
    Ok(serde_json::Value::Object(summary))
}

/// GHZ and seeded random initial states, each with and without couplings.
pub fn fig1_series(cfg: &RunConfig, spec: &SystemSpec) -> Result<(Table, serde_json::Value), CliError> {
    let random = match cfg.init {
        StateInit::RandomPure { seed } => seed,
        _ => cfg.seed,
    };
    let free = spec.without_interactions();
    let mut jobs = Vec::new();
    for (init_label, init) in [("ghz", StateInit::Ghz), ("random", StateInit::RandomPure { seed: random })] {
        let rho0 = initial_state(&init, spec)?;
        for (c_label, s) in [("interacting", spec), ("free", &free)] {
            jobs.push(SeriesJob { label: format!("{init_label}/{c_label}"), liouv: Liouvillian::new(s)?, rho0: rho0.clone() });
        }
    }
    let reference = product_steady_state(spec);
    let refs = vec![reference; jobs.len()];
    let mut table = series_table();
    table.preamble.push(format!("qsync evolve, config {}", cfg.fingerprint()));
    let results = run_series(cfg, jobs, &refs, &mut table)?;
    Ok((table, results))
}

/// Correlation sums from the GHZ state for both six-qubit specs, with and
/// without couplings.
pub fn figs1_series(cfg: &RunConfig) -> Result<(Table, serde_json::Value), CliError> {
    let mut jobs = Vec::new();
    let mut refs = Vec::new();
    for (panel, damp) in [("b", &FIG1B_DAMP), ("c", &FIG1C_DAMP)] {
        let spec = fig1_spec(damp);
        let rho0 = initial_state(&StateInit::Ghz, &spec)?;
        for (c_label, s) in [("interacting", spec.clone()), ("free", spec.without_interactions())] {
            jobs.push(SeriesJob { label: format!("{panel}/{c_label}"), liouv: Liouvillian::new(&s)?, rho0: rho0.clone() });
            refs.push(product_steady_state(&spec));
        }
    }
    let mut table = series_table();
    table.preamble.push(format!("qsync evolve, config {}", cfg.fingerprint()));
    let results = run_series(cfg, jobs, &refs, &mut table)?;
    Ok((table, results))
}

// ---- heatmaps ---------------------------------------------------------------

fn grid_axis(cfg: &RunConfig, lo: f64, hi: f64) -> Vec<f64> {
    linspace(lo, hi, cfg.params.grid_points.unwrap_or(21))
}

/// Two-qubit heatmap: `(m1, m2)` at `U = 1, Δ = 0` for fig2a, `(Δ, U)` at
/// `m1 = −m2 = 1/4` for fig2b. Each row carries the numerical flip-flop
/// correlation and the closed form.
pub fn run_fig2(cfg: &RunConfig, preset: Preset, opts: SweepOptions) -> Result<SweepGrid, CliError> {
    let axes = match preset {
        Preset::Fig2a => vec![SweepAxis::new("m1", grid_axis(cfg, -1.0, 1.0)), SweepAxis::new("m2", grid_axis(cfg, -1.0, 1.0))],
        Preset::Fig2b => vec![SweepAxis::new("delta", grid_axis(cfg, -5.0, 5.0)), SweepAxis::new("u", grid_axis(cfg, 0.0, 5.0))],
        _ => return Err(CliError::config("params.preset", format!("{} is not a two-qubit heatmap", preset.name()))),
    };
    let steady = steady_options(cfg);
    let spec_at = move |p: &[f64]| match preset {
        Preset::Fig2a => fig2_spec(p[0], p[1], 0.0, 1.0),
        _ => fig2_spec(0.25, -0.25, p[0], p[1]),
    };
    let job = SweepJob {
        axes,
        outputs: vec![
            Column::real("s_max", "(π/16)|⟨σ₁⁺σ₂⁻⟩| from the steady state"),
            Column::real("phi0", "locking phase (rad)"),
            Column::complex("flip_flop", "⟨σ₁⁺σ₂⁻⟩ from the steady state"),
            Column::complex("analytic", "closed-form ⟨σ₁⁺σ₂⁻⟩"),
            Column::real("s_max_analytic", "(π/16)|closed form|"),
            Column::real("residual", "‖L[ρ_ss]‖_F"),
        ],
        preamble: vec![format!("qsync {} heatmap, config {}", preset.name(), cfg.fingerprint())],
        eval: Box::new(move |p: &[f64]| {
            let spec = spec_at(p)?;
            let v = steady_sync_values(&spec, &steady)?;
            // steady_sync_values: s_total, s_max, phi0, flip_flop, residual, max_corr
            let analytic = two_qubit_analytic(&TwoQubitAnalyticParams::from_spec(&spec).map_err(|e| e.to_string())?);
            Ok(vec![
                v[1].clone(),
                v[2].clone(),
                v[3].clone(),
                Value::Complex(analytic),
                Value::Real(PI / 16.0 * analytic.norm()),
                v[4].clone(),
            ])
        }),
    };
    execute_sweep(&job, Some(&cfg.output_path), opts)
}

/// Five-qubit heatmap over `(m1, m_env)`; the resolved absolute rates of
/// every qubit are written with each row.
pub fn run_fig3(cfg: &RunConfig, preset: Preset, opts: SweepOptions) -> Result<SweepGrid, CliError> {
    let (variant, topology) =
        preset.fig3().ok_or_else(|| CliError::config("params.preset", format!("{} is not a network heatmap", preset.name())))?;
    let axes = vec![SweepAxis::new("m1", grid_axis(cfg, -1.0, 1.0)), SweepAxis::new("m_env", grid_axis(cfg, -1.0, 1.0))];
    let steady = steady_options(cfg);
    let mut outputs = vec![
        Column::real("s_total", "Σ_{j<k} S_jk^max"),
        Column::real("s_hub", "Σ_k S_0k^max, pairs with the memory qubit"),
        Column::real("residual", "‖L[ρ_ss]‖_F"),
    ];
    for j in 0..5 {
        outputs.push(Column::real(format!("gamma_gain_{j}"), format!("resolved gain rate of qubit {j}")));
        outputs.push(Column::real(format!("gamma_damp_{j}"), format!("resolved damping rate of qubit {j}")));
    }
    let (gm, dm) = variant.multipliers();
    let job = SweepJob {
        axes,
        outputs,
        preamble: vec![
            format!("qsync {} network, {} topology, config {}", preset.name(), topology.label(), cfg.fingerprint()),
            format!("rates: larger rate of qubits 0 and 1 fixed to 1; qubits 2-4 gain {gm:?} and damping {dm:?} times qubit 1"),
        ],
        eval: Box::new(move |p: &[f64]| {
            let spec = fig3_spec(p[0], p[1], variant, topology)?;
            let v = steady_sync_values(&spec, &steady)?;
            let n_pairs = 10;
            let hub: f64 = (0..4).map(|k| v[1 + 3 * k].as_real().unwrap_or(f64::NAN)).sum();
            let mut out = vec![v[0].clone(), Value::Real(hub), v[1 + 3 * n_pairs].clone()];
            for q in spec.qubits() {
                out.extend([Value::Real(q.gamma_gain), Value::Real(q.gamma_damp)]);
            }
            Ok(out)
        }),
    };
    execute_sweep(&job, Some(&cfg.output_path), opts)
}
