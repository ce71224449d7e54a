use std::f64::consts::PI;
use std::fs;
use std::io::Write;

use qsync::config::parse_config;
use qsync::presets::{run_fig2, Preset};
use qsync::sweep::{run_sweep_with, SweepOptions};
use qsync::RunConfig;
use qsync_core::sync::{two_qubit_analytic, TwoQubitAnalyticParams};
use qsync_core::{steady_state, sync_report, Liouvillian, SteadyMethod};

const BASE: &str = r#"
command = "sweep"
[spec]
topology = "all_to_all"
coupling = { ux = 1.0, uy = 1.0, uz = 0.5 }
[[spec.qubits]]
omega = 0.5
gamma_gain = 0.2
gamma_damp = 1.0
[[spec.qubits]]
omega = -0.5
gamma_gain = 1.0
gamma_damp = 0.3
"#;

fn config(dir: &tempfile::TempDir, name: &str, axes: &str) -> RunConfig {
    let out = dir.path().join(name);
    let text = format!("output_path = {:?}\n{BASE}\n{axes}", out.display().to_string());
    parse_config(&text).unwrap()
}

const GRID_5X4: &str = r#"
[[params.sweep]]
path = "delta"
start = -2.0
stop = 2.0
steps = 5
[[params.sweep]]
path = "coupling.u"
values = [0.25, 0.5, 1.0, 2.0]
"#;

#[test]
fn single_point_matches_a_direct_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "one.csv", "[[params.sweep]]\npath = \"qubits[1].gamma_damp\"\nvalues = [0.3]\n");
    let grid = run_sweep_with(&cfg, SweepOptions::new(1)).unwrap();
    assert_eq!(grid.table.rows.len(), 1);

    let spec = cfg.spec().unwrap();
    let ss = steady_state(&Liouvillian::new(spec).unwrap(), SteadyMethod::Nullspace, 1e-9).unwrap();
    let report = sync_report(&ss.rho_ss, spec).unwrap();
    let pair = report.per_pair[&(0, 1)];
    assert_eq!(grid.reals("s_total").unwrap()[0], report.total);
    assert_eq!(grid.reals("s_max_0_1").unwrap()[0], pair.s_max);
    assert_eq!(grid.complexes("flip_flop_0_1").unwrap()[0], pair.flip_flop);
}

#[test]
fn two_axes_give_the_product_of_their_lengths_in_row_major_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "grid.csv", GRID_5X4);
    let grid = run_sweep_with(&cfg, SweepOptions::new(2)).unwrap();
    assert_eq!(grid.table.rows.len(), 20);
    assert!(grid.is_complete());
    assert_eq!(grid.failures(), 0);
    let delta = grid.reals("delta").unwrap();
    let u = grid.reals("coupling.u").unwrap();
    assert_eq!(&delta[..5], &[-2.0, -2.0, -2.0, -2.0, -1.0]);
    assert_eq!(&u[..5], &[0.25, 0.5, 1.0, 2.0, 0.25]);
    let text = fs::read_to_string(&cfg.output_path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 21);
}

#[test]
fn output_bytes_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for workers in [1, 3] {
        let cfg = config(&dir, &format!("w{workers}.csv"), GRID_5X4);
        run_sweep_with(&cfg, SweepOptions::new(workers)).unwrap();
        bytes.push(fs::read(&cfg.output_path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn interrupted_sweep_resumes_to_the_same_file() {
    let dir = tempfile::tempdir().unwrap();
    let full = config(&dir, "full.csv", GRID_5X4);
    run_sweep_with(&full, SweepOptions::new(2)).unwrap();
    let expected = fs::read(&full.output_path).unwrap();

    let cfg = config(&dir, "part.csv", GRID_5X4);
    let partial = run_sweep_with(&cfg, SweepOptions { workers: 2, stop_after: Some(7) }).unwrap();
    assert!(!partial.is_complete());
    let resumed = run_sweep_with(&cfg, SweepOptions::new(2)).unwrap();
    assert!(resumed.is_complete());
    assert_eq!(fs::read(&cfg.output_path).unwrap(), expected);
}

#[test]
fn truncated_last_line_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "cut.csv", GRID_5X4);
    run_sweep_with(&cfg, SweepOptions::new(1)).unwrap();
    let expected = fs::read(&cfg.output_path).unwrap();

    // Keep the header and 9 rows, then half of the 10th.
    let text = String::from_utf8(expected.clone()).unwrap();
    let header_lines = text.lines().take_while(|l| l.starts_with('#')).count() + 1;
    let lines: Vec<&str> = text.lines().collect();
    let mut cut = lines[..header_lines + 9].join("\n");
    cut.push('\n');
    cut.push_str(&lines[header_lines + 9][..10]);
    fs::write(&cfg.output_path, &cut).unwrap();

    run_sweep_with(&cfg, SweepOptions::new(1)).unwrap();
    assert_eq!(fs::read(&cfg.output_path).unwrap(), expected);
}

#[test]
fn file_from_a_different_config_is_replaced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "other.csv", GRID_5X4);
    let mut f = fs::File::create(&cfg.output_path).unwrap();
    writeln!(f, "# something else\na,b\n1,2").unwrap();
    drop(f);
    let grid = run_sweep_with(&cfg, SweepOptions::new(1)).unwrap();
    assert!(grid.is_complete());
    assert!(!fs::read_to_string(&cfg.output_path).unwrap().contains("something else"));
}

#[test]
fn fig2b_zero_detuning_column_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2b.csv");
    let text = format!("command = \"sweep\"\noutput_path = {:?}\n[params]\npreset = \"fig2b\"\n", out.display().to_string());
    let cfg = parse_config(&text).unwrap();
    let grid = run_fig2(&cfg, Preset::Fig2b, SweepOptions::new(1)).unwrap();
    assert_eq!(grid.table.rows.len(), 21 * 21);

    let delta = grid.reals("delta").unwrap();
    let u = grid.reals("u").unwrap();
    let s = grid.reals("s_max").unwrap();
    let mut checked = 0;
    for i in 0..delta.len() {
        if delta[i] != 0.0 {
            continue;
        }
        // Independent closed form: m1 = −m2 = 1/4, larger rate 1.
        let (gain1, damp1) = (1.0, 0.6);
        let (gain2, damp2) = (0.6, 1.0);
        let p = TwoQubitAnalyticParams::new(0.0, u[i], gain1 + damp1, gain2 + damp2, 0.25, -0.25).unwrap();
        let expected = PI / 16.0 * two_qubit_analytic(&p).norm();
        assert!((s[i] - expected).abs() <= 1e-8 * expected.max(1e-4), "U = {}: {} vs {}", u[i], s[i], expected);
        checked += 1;
    }
    assert_eq!(checked, 21);
}
