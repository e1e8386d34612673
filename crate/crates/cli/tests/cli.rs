use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsplit"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("QSPLIT_OUT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let o = qsplit(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn error_json(o: &Output) -> Value {
    let line = String::from_utf8_lossy(&o.stderr).lines().last().unwrap_or("").to_string();
    serde_json::from_str(&line).unwrap_or_else(|_| panic!("stderr is not error JSON: {line}"))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SMALL_SCAN: &str = r#"
n_values = [4, 6]
m_values = [2, "N"]
layers_equal_n = true
samples = 50
seed = 3
"#;

#[test]
fn bp_scan_writes_schema_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    fs::write(&cfg, SMALL_SCAN).unwrap();
    let out = dir.path().join("out");
    ok(&["bp-scan", "--config", s(&cfg), "--out", s(&out)]);

    let csv = fs::read_to_string(out.join("bp_scan.csv")).unwrap();
    assert!(csv.starts_with("# schema: variance_record v1"), "{csv}");
    let records: Vec<_> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(records.len(), 4);

    let m = json(&out.join("manifest.json"));
    assert_eq!(m["subcommand"], "bp-scan");
    assert_eq!(m["seed"], 3);
    let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|a| a["file"].as_str().unwrap()).collect();
    for f in ["bp_scan.csv", "bp_fits.json", "resolved.toml"] {
        assert!(files.contains(&f), "{files:?}");
    }
    let fits = json(&out.join("bp_fits.json"));
    assert_eq!(fits["schema"], "bp_fits v1");
}

#[test]
fn missing_config_is_a_config_error() {
    let o = qsplit(&["bp-scan", "--config", "/definitely/not/here.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "config");

    let o = qsplit(&["bp-scan"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    fs::write(&cfg, format!("{SMALL_SCAN}\nsampels = 10\n")).unwrap();
    let o = qsplit(&["bp-scan", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"]["kind"], "config");
    assert!(e["error"]["message"].as_str().unwrap().contains("sampels"));
}

#[test]
fn bad_flags_are_config_errors() {
    let o = qsplit(&["vqe", "--n", "4", "--depth", "2", "--t", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qsplit(&["vqe", "--n", "6", "--m", "4", "--depth", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qsplit(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "config");
}

#[test]
fn vqe_flags_produce_per_seed_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("vqe");
    ok(&[
        "vqe", "--n", "4", "--m", "2", "--depth", "3", "--t", "1", "--seeds", "3", "--iterations", "40", "--out", s(&out),
    ]);
    let v = json(&out.join("vqe_summary.json"));
    assert_eq!(v["schema"], "vqe_summary v1");
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    let exact = v["exact_energy"].as_f64().unwrap();
    for r in runs {
        assert!(r["final_energy"].as_f64().unwrap() >= exact - 1e-9);
        assert!(r["final_error"].as_f64().unwrap() >= -1e-9);
    }
    let steps = fs::read_to_string(out.join("vqe_steps.csv")).unwrap();
    assert_eq!(steps.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 40);
}

/// Data columns with `wall_time` removed.
fn strip_wall_time(csv: &str) -> Vec<String> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| header[i] != "wall_time").collect();
    std::iter::once(header.join(","))
        .chain(lines.map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            keep.iter().map(|&i| cols[i]).collect::<Vec<_>>().join(",")
        }))
        .collect()
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    fs::write(&cfg, SMALL_SCAN).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["bp-scan", "--config", s(&cfg), "--workers", "1", "--out", s(&a)]);
    ok(&["bp-scan", "--config", s(&cfg), "--workers", "4", "--out", s(&b)]);
    assert_eq!(fs::read(a.join("bp_scan.csv")).unwrap(), fs::read(b.join("bp_scan.csv")).unwrap());

    let (a, b) = (dir.path().join("va"), dir.path().join("vb"));
    let common = ["vqe", "--n", "4", "--m", "2", "--depth", "2", "--seeds", "2", "--iterations", "30"];
    let mut args = common.to_vec();
    args.extend(["--workers", "1", "--out", s(&a)]);
    ok(&args);
    let mut args = common.to_vec();
    args.extend(["--workers", "3", "--out", s(&b)]);
    ok(&args);
    let read = |p: &Path| strip_wall_time(&fs::read_to_string(p.join("vqe_steps.csv")).unwrap());
    assert_eq!(read(&a), read(&b));
    assert_eq!(fs::read(a.join("params.json")).unwrap(), fs::read(b.join("params.json")).unwrap());
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    ok(&["vqe", "--n", "4", "--depth", "2", "--seeds", "2", "--iterations", "25", "--seed", "5", "--out", s(&a)]);
    let b = dir.path().join("b");
    ok(&["vqe", "--config", s(&a.join("resolved.toml")), "--out", s(&b)]);
    let read = |p: &Path| strip_wall_time(&fs::read_to_string(p.join("vqe_steps.csv")).unwrap());
    assert_eq!(read(&a), read(&b));
    assert_eq!(fs::read(a.join("resolved.toml")).unwrap(), fs::read(b.join("resolved.toml")).unwrap());
}

#[test]
fn gen_dataset_and_train_classify() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    ok(&["gen-dataset", "--kind", "classical", "--n-features", "4", "--seed", "2", "--out", s(&out)]);
    let data = out.join("classical.csv");
    assert!(fs::read_to_string(&data).unwrap().starts_with("# schema: classical_dataset v1"));

    let cfg = dir.path().join("train.toml");
    fs::write(
        &cfg,
        r#"
seeds = 2
[train]
epochs = 3
[train.spec]
num_qubits = 4
block_size = 2
cs_layers = 2
standard_layers = 0
block_family = "ladder_ry_cx"
"#,
    )
    .unwrap();
    let t = dir.path().join("train");
    ok(&["train-classify", "--config", s(&cfg), "--dataset", s(&data), "--out", s(&t)]);
    let summary = json(&t.join("classify_summary.json"));
    assert_eq!(summary["runs"].as_array().unwrap().len(), 2);
    assert_eq!(summary["summary"]["runs"], 2);
    let epochs = fs::read_to_string(t.join("epochs.csv")).unwrap();
    assert_eq!(epochs.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 3);

    // qubit count of the circuit must match the dataset
    let bad = fs::read_to_string(&cfg).unwrap().replace("num_qubits = 4", "num_qubits = 8");
    fs::write(&cfg, bad).unwrap();
    let o = qsplit(&["train-classify", "--config", s(&cfg), "--dataset", s(&data), "--out", s(&t)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn quantum_dataset_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q");
    ok(&[
        "gen-dataset", "--kind", "quantum", "--n-qubits", "2", "--targets", "0.05,0.2", "--per-class", "20", "--out", s(&out),
    ]);
    let m = json(&out.join("manifest.json"));
    let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|a| a["file"].as_str().unwrap()).collect();
    assert!(files.contains(&"quantum.csv"));
    assert_eq!(files.iter().filter(|f| f.ends_with(".json")).count(), 2, "{files:?}");
}

#[test]
fn transpile_count_and_single_circuit_routing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    fs::write(&cfg, "n_values = [4]\nm_values = [2, \"N\"]\nl_values = [2]\nentanglement = [\"linear\"]\n").unwrap();
    let out = dir.path().join("t");
    ok(&["transpile-count", "--config", s(&cfg), "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("transpile_count.csv")).unwrap();
    assert!(csv.starts_with("# schema: transpile_count v1"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);

    let circ = dir.path().join("c.txt");
    fs::write(&circ, "qubits 4\nry 0 p0\ncx 0 3\ncx 1 2\nrz 3 p1\n").unwrap();
    let r = dir.path().join("r");
    ok(&["transpile-count", "--circuit", s(&circ), "--out", s(&r)]);
    let v = json(&r.join("routed_summary.json"));
    assert_eq!(v["native_cx"], 2);
    assert_eq!(v["cx_count"].as_u64().unwrap(), 2 + 3 * v["swaps"].as_u64().unwrap());
    assert!(v["equivalence_infidelity"].as_f64().unwrap().abs() < 1e-10);
    assert!(r.join("routed.txt").exists());
}

#[test]
fn haar_verify_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h");
    ok(&["haar-verify", "--dims", "2,3", "--samples", "4000", "--seed", "1", "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("haar_checks.csv")).unwrap();
    assert!(csv.contains("gradient_variance"));
    assert_eq!(json(&out.join("haar_report.json"))["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn shipped_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    // Cheap overrides keep these runs short; parsing is what is being checked.
    let o = dir.path().join("x");
    let cases: Vec<Vec<String>> = vec![
        vec!["vqe".into(), "--seeds".into(), "1".into(), "--iterations".into(), "2".into()],
        vec!["train-classify".into(), "--seeds".into(), "1".into(), "--epochs".into(), "1".into()],
    ];
    let files = ["vqe.toml", "classify.toml"];
    for (file, mut args) in files.iter().zip(cases) {
        args.extend(["--config".into(), configs().join(file).to_string_lossy().into_owned(), "--out".into(), s(&o).into()]);
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(&a);
    }
    // Few samples may fail a check (exit 1) but must not be a config error.
    let haar = configs().join("haar.toml");
    let h = qsplit(&["haar-verify", "--samples", "200", "--dims", "2", "--config", s(&haar), "--out", s(&o)]);
    assert!(matches!(h.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&h.stderr));

    // The rest are shrunk by text substitution, then run through the binary.
    let shrunk: [(&str, &str, &[(&str, &str)]); 6] = [
        ("bp-scan", "bp_scan_n.toml", &[("samples = 2000", "samples = 4"), ("10, 12", "8")]),
        ("bp-scan", "bp_layers.toml", &[("samples = 2000", "samples = 4"), (", 16, 32, 64", "")]),
        ("bp-scan", "bp_tail.toml", &[("samples = 2000", "samples = 4"), ("10, 12", "8")]),
        ("gen-dataset", "dataset_classical.toml", &[]),
        ("gen-dataset", "dataset_quantum.toml", &[("per_class = 200", "per_class = 8")]),
        ("transpile-count", "transpile.toml", &[("[4, 16, 36]", "[4]")]),
    ];
    for (cmd, file, subs) in shrunk {
        let mut text = fs::read_to_string(configs().join(file)).unwrap();
        for (from, to) in subs {
            assert!(text.contains(from), "{file}: {from}");
            text = text.replace(from, to);
        }
        let cfg = dir.path().join(file);
        fs::write(&cfg, text).unwrap();
        ok(&[cmd, "--config", s(&cfg), "--out", s(&o)]);
    }
}
