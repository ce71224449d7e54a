//! Run configuration. Documents are TOML; a JSON sidecar written next to any
//! output is accepted too, so a run can be replayed from its sidecar alone.

use std::fmt;
use std::path::{Path, PathBuf};

use qsync_core::engine::SteadyMethod;
use qsync_core::model::{InteractionTerm, ModelError, QubitParams, StateInit, SystemSpec, Topology};
use qsync_core::spin1::{DissipationScheme, Spin1Spec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::presets::Preset;

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;
pub const DEFAULT_STEADY_TOL: f64 = 1e-9;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    Steady,
    Sync,
    Sweep,
    VerifyNogo,
    Spin1Check,
    AlgebraCheck,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Steady => "steady",
            Command::Sync => "sync",
            Command::Sweep => "sweep",
            Command::VerifyNogo => "verify-nogo",
            Command::Spin1Check => "spin1-check",
            Command::AlgebraCheck => "algebra-check",
        }
    }

    /// Commands that need a qubit register.
    fn needs_spec(self) -> bool {
        !matches!(self, Command::Spin1Check)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Uniform coupling applied to every pair of a named topology.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    #[serde(default)]
    pub ux: f64,
    #[serde(default)]
    pub uy: f64,
    #[serde(default)]
    pub uz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDoc {
    pub qubits: Vec<QubitParams>,
    #[serde(default)]
    pub topology: Topology,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Coupling>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interactions: Vec<InteractionTerm>,
}

impl SpecDoc {
    pub fn from_spec(spec: &SystemSpec) -> Self {
        Self {
            qubits: spec.qubits().to_vec(),
            topology: spec.topology(),
            coupling: None,
            interactions: spec.interactions().to_vec(),
        }
    }

    pub fn build(&self) -> Result<SystemSpec, ModelError> {
        match (self.coupling, self.topology) {
            (Some(_), Topology::Custom) => Err(ModelError::Invalid {
                path: "coupling".into(),
                reason: "a uniform coupling needs topology all_to_all or one_to_all".into(),
            }),
            (Some(_), _) if !self.interactions.is_empty() => Err(ModelError::Invalid {
                path: "interactions".into(),
                reason: "give either a uniform coupling or an interaction list, not both".into(),
            }),
            (Some(c), topology) => SystemSpec::uniform(self.qubits.clone(), topology, c.ux, c.uy, c.uz),
            (None, topology) => SystemSpec::new(self.qubits.clone(), self.interactions.clone(), topology),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitDoc {
    #[default]
    Ghz,
    /// Falls back to the run seed when `seed` is absent.
    RandomPure {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    ProductSteady,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeGrid {
    #[default]
    Linear,
    Log,
}

/// One sweep axis: explicit `values`, or `steps` points from `start` to
/// `stop` inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisDoc {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl AxisDoc {
    pub fn resolve(&self) -> Result<Vec<f64>, String> {
        let values = match (&self.values, self.start, self.stop, self.steps) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => linspace(a, b, n),
            _ => return Err("give either `values` or all of `start`, `stop`, `steps`".into()),
        };
        if values.is_empty() {
            return Err("empty range".into());
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err("values must be finite".into());
        }
        Ok(values)
    }
}

/// `n` evenly spaced points from `a` to `b` inclusive; `[a]` when `n = 1`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Command parameters. Every field is optional in a document; `resolve`
/// fills the defaults so that a sidecar echo is fully explicit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<TimeGrid>,
    /// First sample of a log grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_method: Option<SteadyMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_tol: Option<f64>,
    /// Points per axis of a preset grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Residual `‖L[ρ]‖_F` at which a horizon run stops.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_octave: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<AxisDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spin1Doc {
    #[serde(flatten)]
    pub spec: Spin1Spec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<DissipationScheme>,
}

/// The document as written by a user, or as echoed in a sidecar.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitDoc>,
    #[serde(default)]
    pub params: ParamsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin1: Option<Spin1Doc>,
}

/// Values given on the command line; they win over the document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub command: Option<Command>,
    pub preset: Option<String>,
    pub output_path: Option<PathBuf>,
    pub worker_count: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommandParams {
    pub preset: Option<Preset>,
    pub t_end: f64,
    pub samples: usize,
    pub time_grid: TimeGrid,
    pub t_min: f64,
    pub rtol: f64,
    pub atol: f64,
    pub steady_method: Option<SteadyMethod>,
    pub steady_tol: f64,
    pub grid_points: Option<usize>,
    pub residual_tol: f64,
    pub max_horizon: f64,
    pub points_per_octave: usize,
    pub sweep: Vec<(String, Vec<f64>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Absent only for `spin1-check`.
    pub spec: Option<SystemSpec>,
    pub init: StateInit,
    pub command: Command,
    pub params: CommandParams,
    pub output_path: PathBuf,
    pub worker_count: usize,
    pub seed: u64,
    pub spin1: Option<(Spin1Spec, Option<DissipationScheme>)>,
    /// Fully explicit document equivalent to this config.
    pub doc: ConfigDoc,
}

impl RunConfig {
    pub fn spec(&self) -> Result<&SystemSpec, CliError> {
        self.spec.as_ref().ok_or_else(|| CliError::config("spec", "this command needs a qubit spec"))
    }

    /// The document minus the fields that only affect where and how fast a
    /// run happens. Two runs with equal fingerprints produce equal bytes.
    pub fn fingerprint(&self) -> String {
        let mut doc = self.doc.clone();
        doc.output_path = None;
        doc.worker_count = None;
        serde_json::to_string(&doc).expect("config documents serialize")
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Parses a TOML document, or a JSON sidecar (detected by a leading `{`).
pub fn parse_document(text: &str) -> Result<ConfigDoc, CliError> {
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config("<document>", e.to_string()))?;
        // Sidecars wrap the document under "config".
        let inner = value.get("config").cloned().unwrap_or(value);
        return serde_path_to_error::deserialize(inner).map_err(path_error);
    }
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::config("<document>", e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(path_error)
}

fn path_error<E: fmt::Display>(e: serde_path_to_error::Error<E>) -> CliError {
    let path = e.path().to_string();
    let path = if path == "." { "<document>".to_string() } else { path };
    CliError::config(path, e.into_inner().to_string())
}

/// Parses and validates a document with no command-line overrides.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    resolve(parse_document(text)?, &Overrides::default())
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("--config", format!("cannot read {}: {e}", path.display())))?;
    resolve(parse_document(&text)?, overrides)
}

fn positive(path: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(path, format!("{v} must be positive")))
    }
}

/// Applies overrides, fills defaults and validates. The worker count is
/// taken from the overrides, then `QSYNC_WORKERS` (read by the binary into
/// the overrides), then the document.
pub fn resolve(mut doc: ConfigDoc, ov: &Overrides) -> Result<RunConfig, CliError> {
    if let Some(c) = ov.command {
        doc.command = Some(c);
    }
    if let Some(p) = &ov.preset {
        doc.params.preset = Some(p.clone());
    }
    if let Some(p) = &ov.output_path {
        doc.output_path = Some(p.display().to_string());
    }
    if let Some(w) = ov.worker_count {
        doc.worker_count = Some(w);
    }
    if let Some(s) = ov.seed {
        doc.seed = Some(s);
    }

    let preset = match doc.params.preset.as_deref() {
        Some(name) => Some(Preset::from_name(name).ok_or_else(|| {
            CliError::config("params.preset", format!("unknown preset {name:?}; known: {}", Preset::names().join(", ")))
        })?),
        None => None,
    };
    let command = match (doc.command, preset) {
        (Some(c), Some(p)) if c != p.command() => {
            return Err(CliError::config("command", format!("preset {} runs with `{}`, not `{c}`", p.name(), p.command())))
        }
        (Some(c), _) => c,
        (None, Some(p)) => p.command(),
        (None, None) => return Err(CliError::config("command", "no command given")),
    };
    doc.command = Some(command);

    let seed = *doc.seed.get_or_insert(DEFAULT_SEED);
    if doc.worker_count == Some(0) {
        return Err(CliError::config("worker_count", "must be at least 1"));
    }
    let worker_count = doc.worker_count.unwrap_or_else(default_workers);

    if let Some(p) = preset {
        if doc.spec.is_none() {
            doc.spec = Some(SpecDoc::from_spec(&p.base_spec()));
        }
    }
    let spec = match &doc.spec {
        Some(s) => Some(s.build().map_err(|e| CliError::from(e.within("spec")))?),
        None if command.needs_spec() => return Err(CliError::config("spec", "missing")),
        None => None,
    };

    let init = doc.init.get_or_insert_with(InitDoc::default);
    let init = match init {
        InitDoc::Ghz => StateInit::Ghz,
        InitDoc::ProductSteady => StateInit::ProductSteady,
        InitDoc::RandomPure { seed: s } => StateInit::RandomPure { seed: *s.get_or_insert(seed) },
    };

    let params = resolve_params(&mut doc.params, preset, spec.as_ref())?;

    let spin1 = match &doc.spin1 {
        Some(s) => {
            s.spec.validate().map_err(|e| CliError::from(e.within("spin1")))?;
            Some((s.spec.clone(), s.scheme))
        }
        None => None,
    };

    let output_path = PathBuf::from(&*doc.output_path.get_or_insert_with(|| {
        format!("qsync_{}.csv", preset.map(|p| p.name().to_string()).unwrap_or_else(|| command.label().to_string()))
    }));

    Ok(RunConfig { spec, init, command, params, output_path, worker_count, seed, spin1, doc })
}

fn resolve_params(p: &mut ParamsDoc, preset: Option<Preset>, spec: Option<&SystemSpec>) -> Result<CommandParams, CliError> {
    // Horizon runs need tolerances far below the defaults to drive the
    // residual under 1e-9; see Preset::default_tolerances.
    let (rtol0, atol0) = preset.map(Preset::default_tolerances).unwrap_or((DEFAULT_RTOL, DEFAULT_ATOL));
    let rtol = positive("params.rtol", *p.rtol.get_or_insert(rtol0))?;
    let atol = positive("params.atol", *p.atol.get_or_insert(atol0))?;
    let steady_tol = positive("params.steady_tol", *p.steady_tol.get_or_insert(DEFAULT_STEADY_TOL))?;
    let t_end = *p.t_end.get_or_insert(10.0);
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(CliError::config("params.t_end", format!("{t_end} must be finite and non-negative")));
    }
    let samples = *p.samples.get_or_insert(101);
    if samples < 2 {
        return Err(CliError::config("params.samples", "need at least 2 samples"));
    }
    let time_grid = *p.time_grid.get_or_insert(TimeGrid::Linear);
    let t_min = positive("params.t_min", *p.t_min.get_or_insert(1e-3))?;
    if time_grid == TimeGrid::Log && t_min >= t_end {
        return Err(CliError::config("params.t_min", "must be below t_end for a log grid"));
    }
    let residual_tol = positive("params.residual_tol", *p.residual_tol.get_or_insert(1e-9))?;
    let max_horizon = positive("params.max_horizon", *p.max_horizon.get_or_insert(1e4))?;
    let points_per_octave = *p.points_per_octave.get_or_insert(4);
    if points_per_octave == 0 {
        return Err(CliError::config("params.points_per_octave", "must be at least 1"));
    }
    if let Some(g) = preset.and_then(Preset::default_grid_points) {
        p.grid_points.get_or_insert(g);
    }
    if p.grid_points == Some(0) {
        return Err(CliError::config("params.grid_points", "must be at least 1"));
    }
    let mut sweep = Vec::new();
    for (i, axis) in p.sweep.iter().enumerate() {
        let values = axis.resolve().map_err(|r| CliError::config(format!("params.sweep[{i}]"), r))?;
        if let Some(spec) = spec {
            crate::sweep::apply_path(spec, &axis.path, values[0])
                .map_err(|r| CliError::config(format!("params.sweep[{i}].path"), r))?;
        }
        sweep.push((axis.path.clone(), values));
    }
    Ok(CommandParams {
        preset,
        t_end,
        samples,
        time_grid,
        t_min,
        rtol,
        atol,
        steady_method: p.steady_method,
        steady_tol,
        grid_points: p.grid_points,
        residual_tol,
        max_horizon,
        points_per_octave,
        sweep,
    })
}
