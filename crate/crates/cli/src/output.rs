//! CSV tables with a `#`-commented header, and the JSON sidecar.
//!
//! Reals are written with `{:e}`, the shortest representation that parses
//! back to the same bits, so identical runs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use qsync_core::operators::C64;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Real,
    /// Written as `<name>_re`, `<name>_im`.
    Complex,
    Int,
    Text,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: Kind,
    pub description: String,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: Kind, description: impl Into<String>) -> Self {
        Self { name: name.into(), kind, description: description.into() }
    }

    pub fn real(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self::new(name, Kind::Real, description)
    }

    pub fn complex(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self::new(name, Kind::Complex, description)
    }

    fn headers(&self) -> Vec<String> {
        match self.kind {
            Kind::Complex => vec![format!("{}_re", self.name), format!("{}_im", self.name)],
            _ => vec![self.name.clone()],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Complex(C64),
    Int(i64),
    Text(String),
}

impl Value {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_complex(&self) -> Option<C64> {
        match self {
            Value::Complex(z) => Some(*z),
            Value::Real(x) => Some(C64::new(*x, 0.0)),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Placeholder for a value a failed job could not produce.
    pub fn missing(kind: Kind) -> Self {
        match kind {
            Kind::Real => Value::Real(f64::NAN),
            Kind::Complex => Value::Complex(C64::new(f64::NAN, f64::NAN)),
            Kind::Int => Value::Int(-1),
            Kind::Text => Value::Text(String::new()),
        }
    }

    fn fields(&self) -> Vec<String> {
        match self {
            Value::Real(x) => vec![fmt_real(*x)],
            Value::Complex(z) => vec![fmt_real(z.re), fmt_real(z.im)],
            Value::Int(i) => vec![i.to_string()],
            Value::Text(s) => vec![s.clone()],
        }
    }

    fn parse(kind: Kind, fields: &[&str]) -> Option<Self> {
        Some(match kind {
            Kind::Real => Value::Real(fields[0].parse().ok()?),
            Kind::Complex => Value::Complex(C64::new(fields[0].parse().ok()?, fields[1].parse().ok()?)),
            Kind::Int => Value::Int(fields[0].parse().ok()?),
            Kind::Text => Value::Text(fields[0].to_string()),
        })
    }
}

pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    /// Free-form lines placed above the column descriptions.
    pub preamble: Vec<String>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Self {
        Self { preamble: Vec::new(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Comment block and the column-name line, newline-terminated.
    pub fn header(&self) -> String {
        let mut out = String::new();
        for line in &self.preamble {
            out.push_str(&format!("# {line}\n"));
        }
        for c in &self.columns {
            let tag = match c.kind {
                Kind::Complex => " (complex, split into _re/_im)",
                _ => "",
            };
            out.push_str(&format!("# {}: {}{}\n", c.name, c.description, tag));
        }
        out.push_str(&csv_line(&self.columns.iter().flat_map(Column::headers).collect::<Vec<_>>()));
        out
    }

    pub fn format_row(&self, row: &[Value]) -> String {
        csv_line(&row.iter().flat_map(Value::fields).collect::<Vec<_>>())
    }

    /// Parses a data line written by [`Table::format_row`].
    pub fn parse_row(&self, line: &str) -> Option<Vec<Value>> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(line.as_bytes());
        let record = rdr.records().next()?.ok()?;
        let fields: Vec<&str> = record.iter().collect();
        let mut at = 0;
        let mut out = Vec::with_capacity(self.columns.len());
        for c in &self.columns {
            let width = if c.kind == Kind::Complex { 2 } else { 1 };
            out.push(Value::parse(c.kind, fields.get(at..at + width)?)?);
            at += width;
        }
        (at == fields.len()).then_some(out)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        ensure_parent(path)?;
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| CliError::io(path, e);
        w.write_all(self.header().as_bytes()).map_err(io)?;
        for row in &self.rows {
            w.write_all(self.format_row(row).as_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(fields).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

/// `<output>.json`
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    preset: Option<&'static str>,
    output: String,
    seed: u64,
    rng: &'static str,
    rtol: f64,
    atol: f64,
    steady_tol: f64,
    workers: usize,
    wall_time_s: f64,
    /// Everything needed to rerun; `qsync --config <this file>` accepts it.
    config: &'a crate::config::ConfigDoc,
    results: &'a serde_json::Value,
}

pub fn write_sidecar(cfg: &RunConfig, wall: Duration, results: &serde_json::Value) -> Result<PathBuf, CliError> {
    let path = sidecar_path(&cfg.output_path);
    let doc = Sidecar {
        tool: "qsync",
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.label(),
        preset: cfg.params.preset.map(|p| p.name()),
        output: cfg.output_path.display().to_string(),
        seed: cfg.seed,
        rng: qsync_core::random::RNG_NAME,
        rtol: cfg.params.rtol,
        atol: cfg.params.atol,
        steady_tol: cfg.params.steady_tol,
        workers: cfg.worker_count,
        wall_time_s: wall.as_secs_f64(),
        config: &cfg.doc,
        results,
    };
    ensure_parent(&path)?;
    let text = serde_json::to_string_pretty(&doc).expect("sidecar serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// JSON number, with non-finite values as strings (JSON has no NaN).
pub fn json_real(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map(serde_json::Value::Number).unwrap_or_else(|| serde_json::Value::String(fmt_real(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new(vec![
            Column::real("t", "time"),
            Column::complex("c", "a correlation"),
            Column::new("status", Kind::Text, "ok or error"),
        ]);
        t.preamble.push("demo".into());
        t.push(vec![Value::Real(0.1), Value::Complex(C64::new(1e-300, -2.5)), Value::Text("a, \"b\"".into())]);
        t.push(vec![Value::Real(f64::NAN), Value::Complex(C64::new(0.0, 1.0 / 3.0)), Value::Text("ok".into())]);
        t
    }

    #[test]
    fn header_lists_split_complex_columns() {
        let h = table().header();
        assert!(h.starts_with("# demo\n# t: time\n"));
        assert!(h.ends_with("t,c_re,c_im,status\n"));
    }

    #[test]
    fn rows_round_trip_exactly() {
        let t = table();
        for row in &t.rows[..1] {
            assert_eq!(t.parse_row(t.format_row(row).trim_end()).unwrap(), *row);
        }
        let back = t.parse_row(&t.format_row(&t.rows[1])).unwrap();
        assert!(back[0].as_real().unwrap().is_nan());
        assert_eq!(back[1], t.rows[1][1]);
        assert!(t.parse_row("1,2").is_none());
    }

    #[test]
    fn sidecar_sits_next_to_output() {
        assert_eq!(sidecar_path(Path::new("out/run.csv")), PathBuf::from("out/run.csv.json"));
    }
}
