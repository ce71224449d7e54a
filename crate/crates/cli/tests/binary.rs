use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TWO_QUBITS: &str = r#"
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

const SAME_RATIO: &str = r#"
[spec]
topology = "one_to_all"
coupling = { ux = 2.0, uy = 2.0, uz = 1.0 }
[[spec.qubits]]
omega = 0.3
gamma_gain = 0.5
gamma_damp = 1.0
[[spec.qubits]]
omega = -0.2
gamma_gain = 1.5
gamma_damp = 3.0
[[spec.qubits]]
omega = 0.0
gamma_gain = 0.1
gamma_damp = 0.2
"#;

fn qsync(dir: &Path, args: &[&str], env_workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qsync"));
    cmd.current_dir(dir).args(args).env_remove("QSYNC_WORKERS");
    if let Some(w) = env_workers {
        cmd.env("QSYNC_WORKERS", w);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn every_subcommand_succeeds_on_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "two.toml", &format!("{TWO_QUBITS}\n[params]\nt_end = 2.0\nsamples = 5\n"));
    for cmd in ["evolve", "steady", "sync", "algebra-check", "verify-nogo", "spin1-check"] {
        let out = format!("{cmd}.csv");
        let o = qsync(dir.path(), &[cmd, "--config", "two.toml", "--out", &out], None);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(&out).exists());
        let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join(format!("{out}.json"))).unwrap()).unwrap();
        assert_eq!(sidecar["command"], cmd);
        assert_eq!(sidecar["seed"], 1);
    }
}

#[test]
fn steady_csv_holds_the_full_density_matrix() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "two.toml", TWO_QUBITS);
    assert!(qsync(dir.path(), &["steady", "--config", "two.toml", "--out", "rho.csv"], None).status.success());
    let text = fs::read_to_string(dir.path().join("rho.csv")).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "i,j,rho_re,rho_im");
    assert_eq!(data.len(), 1 + 16);
    let trace: f64 = data[1..]
        .iter()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[0] == f[1])
        .map(|f| f[2].parse::<f64>().unwrap())
        .sum();
    assert!((trace - 1.0).abs() < 1e-12);
}

#[test]
fn verify_nogo_passes_when_rates_share_a_ratio() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "same.toml", SAME_RATIO);
    let o = qsync(dir.path(), &["verify-nogo", "--config", "same.toml", "--out", "nogo.csv"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("nogo.csv")).unwrap();
    assert_eq!(text.matches(",PASS").count(), 4);
    assert!(!text.contains(",FAIL"));
}

#[test]
fn config_errors_exit_with_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.toml", &TWO_QUBITS.replace("gamma_gain = 0.2", "gamma_gain = -0.2"));
    let o = qsync(dir.path(), &["steady", "--config", "bad.toml"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("spec.qubits[0].gamma_gain"));

    let o = qsync(dir.path(), &["sweep", "--preset", "fig9"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = qsync(dir.path(), &["steady", "--config", "missing.toml"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = qsync(dir.path(), &["steady", "--config", "bad.toml", "--workers", "0"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solver_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tight.toml", &format!("{TWO_QUBITS}\n[params]\nsteady_tol = 1e-30\n"));
    let o = qsync(dir.path(), &["steady", "--config", "tight.toml"], None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failed_checks_exit_with_three() {
    // Pure damping on every site: the jumps generate only part of the algebra.
    let dir = tempfile::tempdir().unwrap();
    let text = TWO_QUBITS.replace("gamma_gain = 0.2", "gamma_gain = 0.0").replace("gamma_gain = 1.0", "gamma_gain = 0.0");
    write(dir.path(), "damp.toml", &format!("{text}\n[params]\nsteady_method = \"direct\"\n"));
    let o = qsync(dir.path(), &["algebra-check", "--config", "damp.toml", "--out", "alg.csv"], None);
    let csv = fs::read_to_string(dir.path().join("alg.csv")).unwrap_or_default();
    assert_eq!(o.status.code(), Some(3), "{}\n{csv}", String::from_utf8_lossy(&o.stderr));
    assert!(csv.contains(",FAIL"));
}

#[test]
fn flag_beats_environment_beats_document_for_workers() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "w.toml", &format!("worker_count = 2\n{TWO_QUBITS}"));
    let workers = |args: &[&str], env: Option<&str>| {
        let mut all = vec!["steady", "--config", "w.toml", "--out", "w.csv"];
        all.extend_from_slice(args);
        assert!(qsync(dir.path(), &all, env).status.success());
        let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("w.csv.json")).unwrap()).unwrap();
        v["workers"].as_u64().unwrap()
    };
    assert_eq!(workers(&[], None), 2);
    assert_eq!(workers(&[], Some("3")), 3);
    assert_eq!(workers(&["--workers", "4"], Some("3")), 4);
}

#[test]
fn rerun_from_the_sidecar_reproduces_the_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "two.toml", &format!("seed = 7\n{TWO_QUBITS}\n[init]\nkind = \"random_pure\"\n[params]\nt_end = 1.0\nsamples = 3\n"));
    assert!(qsync(dir.path(), &["evolve", "--config", "two.toml", "--out", "a.csv"], None).status.success());
    assert!(qsync(dir.path(), &["evolve", "--config", "a.csv.json", "--out", "b.csv"], None).status.success());
    assert!(qsync(dir.path(), &["evolve", "--config", "two.toml", "--out", "c.csv", "--workers", "3"], None).status.success());
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(a, fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn seed_flag_changes_random_initial_states() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "two.toml", &format!("{TWO_QUBITS}\n[init]\nkind = \"random_pure\"\n[params]\nt_end = 1.0\nsamples = 2\n"));
    assert!(qsync(dir.path(), &["evolve", "--config", "two.toml", "--out", "a.csv", "--seed", "1"], None).status.success());
    assert!(qsync(dir.path(), &["evolve", "--config", "two.toml", "--out", "b.csv", "--seed", "2"], None).status.success());
    let data = |f: &str| -> Vec<String> {
        fs::read_to_string(dir.path().join(f)).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
    };
    assert_ne!(data("a.csv"), data("b.csv"));
}
