use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cca_cli::config;
use cca_cli::output::{Metadata, Table};
use cca_cli::tasks;

const SPECTRUM: &str = r#"
task = "eigenspectrum"

[model]
omega_q = 7.0
omega_c = 6.0
J = 1.0

[space]
n_sites = 2
cutoff = { total_excitations = 2 }

[task_params]
delta_grid = { start = -2.0, stop = 2.0, points = 9 }
"#;

const STEADY: &str = r#"
task = "steady-sweep"

[model]
omega_q = 70.0
omega_c = 60.0
J = 1.0
kappa = 1e-2
gamma = 1e-3
gamma_phi = 1e-4
dephasing = "half_pauli_z"
drive = { kind = "cavity", amplitude = 1.0 }

[space]
n_sites = 2
cutoff = { per_mode_max = 1 }

[task_params]
omega_d_grid = [62.0, 65.5, 69.0, 70.0]
"#;

fn cca(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cca")).args(args).current_dir(cwd).output().unwrap()
}

fn run_config(text: &str, dir: &Path, out: &str) -> Output {
    let cfg = dir.join(format!("{out}.toml"));
    fs::write(&cfg, text).unwrap();
    cca(&["run", cfg.to_str().unwrap(), "--out", dir.join(out).to_str().unwrap()], dir)
}

#[test]
fn written_files_parse_back_to_the_computed_tables() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in [("spectrum", SPECTRUM), ("steady", STEADY)] {
        let out = run_config(text, tmp.path(), name);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let r = config::parse(text).unwrap();
        let expected = tasks::run(&r).unwrap();
        let dir = tmp.path().join(name);
        for t in &expected.tables {
            let bytes = fs::read(dir.join(t.file_name())).unwrap();
            let (hash, back) = Table::from_csv(&t.name, &t.kinds, &bytes).unwrap();
            assert_eq!(hash, r.hash);
            assert_eq!(&back, t);
        }
        let meta_bytes = fs::read(dir.join("metadata.json")).unwrap();
        let meta: Metadata = serde_json::from_slice(&meta_bytes).unwrap();
        assert_eq!(meta.config_sha256, r.hash);
        assert_eq!(meta.summary, expected.summary);
        assert_eq!(serde_json::to_vec_pretty(&meta).unwrap(), meta_bytes);
        // the embedded config resolves to the same run
        let again: config::ExperimentConfig = serde_json::from_value(meta.config).unwrap();
        assert_eq!(config::config_hash(&again), r.hash);
    }
}

#[test]
fn identical_configs_give_identical_tables() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        assert!(run_config(STEADY, tmp.path(), out).status.success());
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let csv = fs::read(a.join("steady_sweep.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("steady_sweep.csv")).unwrap());
}

#[test]
fn empty_grid_is_rejected_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let text = STEADY.replace("[62.0, 65.5, 69.0, 70.0]", "[]");
    let out = run_config(&text, tmp.path(), "empty");
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["status"], "invalid-config");
    assert!(!tmp.path().join("empty").exists());
}

#[test]
fn every_unknown_key_and_unit_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SPECTRUM.replace("omega_c = 6.0", "omega_c = \"6 GHz\"\nomega_x = 1.0").replace("[space]", "[space]\nsites = 3");
    let out = run_config(&text, tmp.path(), "bad");
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    let problems = err["problems"].as_array().unwrap().iter().map(|p| p.as_str().unwrap().to_string()).collect::<Vec<_>>().join("\n");
    for needle in ["model.omega_x", "space.sites", "omega_c"] {
        assert!(problems.contains(needle), "{needle} missing from:\n{problems}");
    }
}

#[test]
fn reproduce_fig2_passes_its_assertions() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cca(&["reproduce", "fig2", "--out", "results"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("results/fig2/assertions.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.ends_with(",yes")), "{text}");
    assert!(tmp.path().join("results/fig2/fig2_eigenspectrum/eigenspectrum.csv").exists());
}

#[test]
fn unknown_figure_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cca(&["reproduce", "fig11"], tmp.path());
    assert!(!out.status.success());
    assert!(!tmp.path().join("results").exists());
}
