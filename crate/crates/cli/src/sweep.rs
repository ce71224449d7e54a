//! Grid sweeps: independent jobs fanned out over a worker pool, written in
//! row-major order by a single writer, flushed after every batch so an
//! interrupted sweep resumes where it stopped.

use std::fs::OpenOptions;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use qsync_core::engine::{steady_state_with, Liouvillian, SteadyOptions};
use qsync_core::model::{QubitParams, SystemSpec};
use qsync_core::observables::max_connected_correlation;
use qsync_core::sync::sync_report;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Column, Kind, Table, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }
}

type Eval<'a> = dyn Fn(&[f64]) -> Result<Vec<Value>, String> + Sync + 'a;

pub struct SweepJob<'a> {
    pub axes: Vec<SweepAxis>,
    /// Columns produced by `eval`, after the axis columns.
    pub outputs: Vec<Column>,
    pub preamble: Vec<String>,
    pub eval: Box<Eval<'a>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub axes: Vec<SweepAxis>,
    /// One row per evaluated point: axis values, outputs, then `status`.
    pub table: Table,
}

impl SweepGrid {
    pub fn expected_len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_complete(&self) -> bool {
        self.table.rows.len() == self.expected_len()
    }

    pub fn failures(&self) -> usize {
        let s = self.table.columns.len() - 1;
        self.table.rows.iter().filter(|r| r[s].as_text() != Some("ok")).count()
    }

    /// Column `name` as reals, one entry per row.
    pub fn reals(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.table.column_index(name)?;
        self.table.rows.iter().map(|r| r[i].as_real()).collect()
    }

    pub fn complexes(&self, name: &str) -> Option<Vec<qsync_core::operators::C64>> {
        let i = self.table.column_index(name)?;
        self.table.rows.iter().map(|r| r[i].as_complex()).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub workers: usize,
    /// Stop after this many newly evaluated points, leaving the sweep
    /// resumable. Used to exercise resumption.
    pub stop_after: Option<usize>,
}

impl SweepOptions {
    pub fn new(workers: usize) -> Self {
        Self { workers, stop_after: None }
    }
}

/// Every grid point in row-major order (last axis fastest).
pub fn grid_points(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points.into_iter().flat_map(|p| axis.values.iter().map(move |&v| [p.clone(), vec![v]].concat())).collect();
    }
    points
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl SweepJob<'_> {
    fn table(&self) -> Table {
        let mut cols: Vec<Column> = self.axes.iter().map(|a| Column::real(a.name.clone(), "sweep axis")).collect();
        cols.extend(self.outputs.iter().cloned());
        cols.push(Column::new("status", Kind::Text, "ok, or the reason this point failed"));
        let mut t = Table::new(cols);
        t.preamble = self.preamble.clone();
        for a in &self.axes {
            t.preamble.push(format!("axis {}: {} values", a.name, a.values.len()));
        }
        t
    }

    fn run_point(&self, point: &[f64]) -> Vec<Value> {
        let result = catch_unwind(AssertUnwindSafe(|| (self.eval)(point)))
            .unwrap_or_else(|p| Err(format!("panic: {}", panic_message(&p))));
        let mut row: Vec<Value> = point.iter().map(|&v| Value::Real(v)).collect();
        match result {
            Ok(values) if values.len() == self.outputs.len() => {
                row.extend(values);
                row.push(Value::Text("ok".into()));
            }
            other => {
                let reason = match other {
                    Err(e) => e,
                    Ok(v) => format!("job returned {} values for {} columns", v.len(), self.outputs.len()),
                };
                row.extend(self.outputs.iter().map(|c| Value::missing(c.kind)));
                row.push(Value::Text(format!("error: {}", one_line(&reason))));
            }
        }
        row
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned()).unwrap_or_default()
}

/// Rows of an earlier run of the same sweep, and the byte length they span.
/// Reading stops at the first line that is incomplete, unparsable, or does
/// not belong to the expected grid point.
fn completed_rows(text: &str, table: &Table, points: &[Vec<f64>], n_axes: usize) -> (Vec<Vec<Value>>, usize) {
    let header = table.header();
    if !text.starts_with(&header) {
        return (Vec::new(), 0);
    }
    let mut rows = Vec::new();
    let mut end = header.len();
    for (line, point) in text[header.len()..].split_inclusive('\n').zip(points) {
        if !line.ends_with('\n') {
            break;
        }
        let Some(row) = table.parse_row(line.trim_end_matches('\n')) else { break };
        if row[..n_axes].iter().zip(point).any(|(v, &p)| v.as_real() != Some(p)) {
            break;
        }
        rows.push(row);
        end += line.len();
    }
    (rows, end)
}

/// Runs `job` over its grid. With `out`, rows are appended to that CSV as
/// they complete, and an existing file with the same header is resumed.
/// A failing point is recorded in its row's `status` and does not stop the
/// sweep.
pub fn execute_sweep(job: &SweepJob<'_>, out: Option<&Path>, opts: SweepOptions) -> Result<SweepGrid, CliError> {
    let mut table = job.table();
    let points = grid_points(&job.axes);
    let n_axes = job.axes.len();

    let mut writer = match out {
        Some(path) => {
            crate::output::ensure_parent(path)?;
            let existing = std::fs::read_to_string(path).unwrap_or_default();
            let (rows, end) = completed_rows(&existing, &table, &points, n_axes);
            table.rows = rows;
            let io = |e| CliError::io(path, e);
            let mut f = OpenOptions::new().create(true).write(true).truncate(false).open(path).map_err(io)?;
            if end == 0 {
                f.set_len(0).map_err(io)?;
                f.write_all(table.header().as_bytes()).map_err(io)?;
            } else {
                f.set_len(end as u64).map_err(io)?;
            }
            let f = OpenOptions::new().append(true).open(path).map_err(io)?;
            Some((f, path))
        }
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| CliError::Solver(format!("worker pool: {e}")))?;
    let batch = (4 * opts.workers).max(1);
    let mut remaining: Vec<&Vec<f64>> = points[table.rows.len()..].iter().collect();
    if let Some(limit) = opts.stop_after {
        remaining.truncate(limit);
    }
    for chunk in remaining.chunks(batch) {
        let rows: Vec<Vec<Value>> = pool.install(|| chunk.par_iter().map(|p| job.run_point(p)).collect());
        if let Some((f, path)) = writer.as_mut() {
            let text: String = rows.iter().map(|r| table.format_row(r)).collect();
            f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(|e| CliError::io(path, e))?;
        }
        table.rows.extend(rows);
    }
    Ok(SweepGrid { axes: job.axes.clone(), table })
}

/// Applies one sweep value to a copy of `spec`. Paths:
/// `qubits[i].{omega, gamma_gain, gamma_damp, magnetization}`,
/// `interactions[i].{ux, uy, uz}`, `coupling.{ux, uy, uz, u}` (every pair;
/// `u` sets `ux = uy`), and `delta` (`ω₀ − ω₁`, moving `ω₀`).
pub fn apply_path(spec: &SystemSpec, path: &str, value: f64) -> Result<SystemSpec, String> {
    let mut qubits = spec.qubits().to_vec();
    let mut terms = spec.interactions().to_vec();
    let indexed = |prefix: &str| -> Option<(usize, String)> {
        let rest = path.strip_prefix(prefix)?.strip_prefix('[')?;
        let (idx, field) = rest.split_once("].")?;
        Some((idx.parse().ok()?, field.to_string()))
    };
    if let Some((i, field)) = indexed("qubits") {
        let n = qubits.len();
        let q = qubits.get_mut(i).ok_or_else(|| format!("no qubit {i} (spec has {n})"))?;
        match field.as_str() {
            "omega" => q.omega = value,
            "gamma_gain" => q.gamma_gain = value,
            "gamma_damp" => q.gamma_damp = value,
            "magnetization" => *q = QubitParams::from_magnetization(q.omega, value).map_err(|e| e.to_string())?,
            _ => return Err(format!("unknown qubit field {field:?}")),
        }
    } else if let Some((i, field)) = indexed("interactions") {
        let n = terms.len();
        let t = terms.get_mut(i).ok_or_else(|| format!("no interaction {i} (spec has {n})"))?;
        match field.as_str() {
            "ux" => t.ux = value,
            "uy" => t.uy = value,
            "uz" => t.uz = value,
            _ => return Err(format!("unknown interaction field {field:?}")),
        }
    } else if let Some(field) = path.strip_prefix("coupling.") {
        if terms.is_empty() {
            return Err("spec has no interactions to scale".into());
        }
        for t in &mut terms {
            match field {
                "ux" => t.ux = value,
                "uy" => t.uy = value,
                "uz" => t.uz = value,
                "u" => (t.ux, t.uy) = (value, value),
                _ => return Err(format!("unknown coupling field {field:?}")),
            }
        }
    } else if path == "delta" {
        if qubits.len() < 2 {
            return Err("delta needs at least two qubits".into());
        }
        qubits[0].omega = qubits[1].omega + value;
    } else {
        return Err(format!("unknown parameter path {path:?}"));
    }
    SystemSpec::new(qubits, terms, spec.topology()).map_err(|e| e.to_string())
}

pub fn steady_options(cfg: &RunConfig) -> SteadyOptions {
    SteadyOptions { method: cfg.params.steady_method, tol: cfg.params.steady_tol, ..Default::default() }
}

/// Pair columns `s_max_j_k`, `phi0_j_k`, `flip_flop_j_k` for every pair.
pub fn pair_columns(n: usize) -> Vec<Column> {
    let mut cols = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            cols.push(Column::real(format!("s_max_{j}_{k}"), format!("(π/16)|⟨σ{j}⁺σ{k}⁻⟩|")));
            cols.push(Column::real(format!("phi0_{j}_{k}"), "locking phase arg⟨σ⁺σ⁻⟩ in (−π, π] (rad)"));
            cols.push(Column::complex(format!("flip_flop_{j}_{k}"), format!("⟨σ{j}⁺σ{k}⁻⟩")));
        }
    }
    cols
}

/// Steady state and synchronization report of one spec, as sweep values:
/// `s_total`, the pair columns, `residual`, `max_corr`.
pub fn steady_sync_values(spec: &SystemSpec, opts: &SteadyOptions) -> Result<Vec<Value>, String> {
    let liouv = Liouvillian::new(spec).map_err(|e| e.to_string())?;
    let ss = steady_state_with(&liouv, opts).map_err(|e| e.to_string())?;
    let report = sync_report(&ss.rho_ss, spec).map_err(|e| e.to_string())?;
    let mut values = vec![Value::Real(report.total)];
    for p in report.per_pair.values() {
        values.extend([Value::Real(p.s_max), Value::Real(p.phi0), Value::Complex(p.flip_flop)]);
    }
    values.push(Value::Real(ss.residual_norm));
    values.push(Value::Real(max_connected_correlation(&ss.rho_ss).map_err(|e| e.to_string())?));
    Ok(values)
}

pub fn steady_sync_columns(n: usize) -> Vec<Column> {
    let mut cols = vec![Column::real("s_total", "Σ_{j<k} S_jk^max")];
    cols.extend(pair_columns(n));
    cols.push(Column::real("residual", "‖L[ρ_ss]‖_F"));
    cols.push(Column::real("max_corr", "largest connected correlation modulus over pairs and axes x,y,z,+,−"));
    cols
}

/// Sweep described by `params.sweep`: a steady state and synchronization
/// report per grid point.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepGrid, CliError> {
    run_sweep_with(cfg, SweepOptions::new(cfg.worker_count))
}

pub fn run_sweep_with(cfg: &RunConfig, opts: SweepOptions) -> Result<SweepGrid, CliError> {
    let base = cfg.spec()?;
    if cfg.params.sweep.is_empty() {
        return Err(CliError::config("params.sweep", "no sweep axes given"));
    }
    let axes: Vec<SweepAxis> = cfg.params.sweep.iter().map(|(p, v)| SweepAxis::new(p.clone(), v.clone())).collect();
    let steady = steady_options(cfg);
    let paths: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
    let job = SweepJob {
        outputs: steady_sync_columns(base.n_qubits()),
        preamble: vec![format!("qsync sweep, config {}", cfg.fingerprint())],
        axes,
        eval: Box::new(move |point: &[f64]| {
            let mut spec = base.clone();
            for (path, &v) in paths.iter().zip(point) {
                spec = apply_path(&spec, path, v)?;
            }
            steady_sync_values(&spec, &steady)
        }),
    };
    execute_sweep(&job, Some(&cfg.output_path), opts)
}
