use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

struct Out {
    code: i32,
    summary: Value,
}

fn barylab(args: &[&str]) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_barylab"))
        .args(args)
        .env_remove("BARYLAB_CACHE")
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout.lines().last().unwrap_or("null");
    Out {
        code: out.status.code().unwrap_or(-1),
        summary: serde_json::from_str(line).unwrap_or(Value::Null),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn space(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut all = vec!["space"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", p(&path)]);
    let out = barylab(&all);
    assert_eq!(out.code, 0, "{}", out.summary);
    path
}

fn measure(dir: &Path, space: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut all = vec!["measure", "--space", p(space)];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", p(&path)]);
    let out = barylab(&all);
    assert_eq!(out.code, 0, "{}", out.summary);
    path
}

#[test]
fn space_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = barylab(&[
        "space",
        "--kind",
        "interval",
        "--n",
        "50",
        "--length",
        "1",
        "--out",
        p(&dir.path().join("i.json")),
    ]);
    assert_eq!(out.code, 0);
    assert_eq!(out.summary["diameter"], 1.0);
    assert_eq!(out.summary["command"], "space");

    let out = barylab(&[
        "space",
        "--kind",
        "circle",
        "--n",
        "64",
        "--circumference",
        "1",
        "--out",
        p(&dir.path().join("c.json")),
    ]);
    assert_eq!(out.summary["diameter"], 0.5);

    let cone = space(
        dir.path(),
        "cone.json",
        &["--kind", "cone", "--n", "64", "--angle", "3.14159"],
    );
    let out = barylab(&["validate", p(&cone)]);
    assert_eq!(out.code, 0);
    assert_eq!(out.summary["validation"], "pass");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // unknown flag value and out-of-range parameters are bad input
    assert_eq!(barylab(&["space", "--kind", "torus"]).code, 2);
    let out = barylab(&[
        "space",
        "--kind",
        "cone",
        "--angle",
        "7",
        "--out",
        p(&dir.path().join("x.json")),
    ]);
    assert_eq!(out.code, 2);
    assert_eq!(out.summary["ok"], false);
    assert_eq!(
        barylab(&["w2", "--space", "/nonexistent.json", "a", "b"]).code,
        2
    );

    // a hand-written space that breaks the triangle inequality
    let bad = dir.path().join("bad.json");
    let good = space(dir.path(), "s.json", &["--kind", "interval", "--n", "3"]);
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();
    v["dist"] = serde_json::json!([0.0, 0.1, 1.0, 0.1, 0.0, 0.1, 1.0, 0.1, 0.0]);
    std::fs::write(&bad, v.to_string()).unwrap();
    let out = barylab(&["validate", p(&bad)]);
    assert_eq!(out.code, 3);
    assert_eq!(out.summary["flags"]["triangle"], false);
    assert_eq!(barylab(&["net", "--space", p(&bad)]).code, 3);
}

#[test]
fn solver_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = space(d, "s.json", &["--kind", "interval", "--n", "3"]);
    let a = measure(d, &s, "a.json", &["--kind", "dirac", "--at", "0"]);
    let b = measure(d, &s, "b.json", &["--kind", "dirac", "--at", "2"]);
    let g = measure(d, &s, "g.json", &["--kind", "good", "--seed", "4"]);

    let out = barylab(&[
        "w2",
        "--space",
        p(&s),
        p(&g),
        p(&g),
        "--out",
        p(&d.join("w.json")),
    ]);
    assert_eq!(out.code, 0);
    assert_eq!(out.summary["value"], 0.0);

    let out = barylab(&[
        "barycenter",
        "--space",
        p(&s),
        "--atom",
        p(&a),
        "--atom",
        p(&b),
        "--out",
        p(&d.join("bc.json")),
    ]);
    assert_eq!(out.code, 0);
    assert!((out.summary["variance"].as_f64().unwrap() - 0.125).abs() <= 1e-9);
    let bc: Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("bc.json")).unwrap()).unwrap();
    assert_eq!(bc["weights"], serde_json::json!([0.0, 1.0, 0.0]));

    let out = barylab(&[
        "balance",
        "--space",
        p(&s),
        "--atom",
        &format!("{}@2", p(&g)),
        "--out",
        p(&d.join("bal.json")),
    ]);
    assert_eq!(out.code, 0);
    assert_eq!(out.summary["residual"], 0.0);
    let bal: Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("bal.json")).unwrap()).unwrap();
    assert!(bal["pairs"][0]["psi"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v == 0.0));

    // a measure file from another space is rejected
    let c = space(d, "c.json", &["--kind", "circle", "--n", "3"]);
    assert_eq!(barylab(&["w2", "--space", p(&c), p(&a), p(&a)]).code, 2);
}

#[test]
fn balance_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = space(d, "s.json", &["--kind", "circle", "--n", "12"]);
    let a = measure(d, &s, "a.json", &["--kind", "good", "--seed", "1"]);
    let b = measure(d, &s, "b.json", &["--kind", "good", "--seed", "2"]);
    let out = barylab(&[
        "balance",
        "--space",
        p(&s),
        "--atom",
        p(&a),
        "--atom",
        p(&b),
        "--max-iters",
        "0",
        "--out",
        p(&d.join("x.json")),
    ]);
    assert_eq!(out.code, 5, "{}", out.summary);
    assert_eq!(out.summary["exit_code"], 5);
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_deficit_scan() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", "experiment = \"deficit_scan\"\n");
    let out_dir = dir.path().join("out");
    let out = barylab(&["run", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(out.code, 0, "{}", out.summary);
    assert_eq!(out.summary["passed"], true);
    let csv = std::fs::read_to_string(out_dir.join("deficit_scan.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|&h| h == "D").unwrap();
    let hash = out.summary["config_hash"].as_str().unwrap();
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert!(cols[k].parse::<f64>().unwrap() >= -1e-8);
        assert_eq!(cols[cols.len() - 2], hash);
        rows += 1;
    }
    assert_eq!(rows, 13);
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("deficit_scan.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["config_hash"], hash);
    assert_eq!(sidecar["seed"], 1);
    let svg = std::fs::read_to_string(out_dir.join("deficit_scan.log_D_vs_log_R.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(hash));
    let fig = std::fs::read_to_string(out_dir.join("deficit_scan.log_D_vs_log_R.csv")).unwrap();
    assert!(fig.starts_with("R,D,fitted,config_hash,seed"));
}

#[test]
fn run_empirical_rate_of_a_single_measure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "e.toml",
        "experiment = \"empirical_rate\"\nn_list = [4, 8, 16]\ntrials = 3\n\
         [law]\nkind = \"atoms\"\natoms = [{ measure = { kind = \"uniform\" }, weight = 1.0 }]\n",
    );
    let out_dir = dir.path().join("out");
    let out = barylab(&["run", p(&cfg), "--out", p(&out_dir), "--no-svg"]);
    assert_eq!(out.code, 0, "{}", out.summary);
    let csv = std::fs::read_to_string(out_dir.join("empirical_rate.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let w1 = header.iter().position(|&h| h == "W1").unwrap();
    let err = header.iter().position(|&h| h == "bary_err").unwrap();
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    for r in rows {
        assert_eq!(r[w1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[err].parse::<f64>().unwrap(), 0.0);
    }
    assert!(!out_dir.join("empirical_rate.log_W1_vs_log_N.svg").exists());
}

#[test]
fn runs_are_reproducible_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "b.toml",
        "experiment = \"barycenter_stability\"\nscales = [0.4, 0.2, 0.1]\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        barylab(&["run", p(&cfg), "--jobs", "1", "--out", p(&a)]).code,
        0
    );
    assert_eq!(
        barylab(&["run", p(&cfg), "--jobs", "8", "--out", p(&b)]).code,
        0
    );
    let read = |d: &Path| std::fs::read(d.join("barycenter_stability.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn runtime_cap_flushes_a_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.toml",
        "experiment = \"empirical_rate\"\nruntime_cap_secs = 1e-9\n",
    );
    let out_dir = dir.path().join("out");
    let out = barylab(&["run", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(out.code, 0, "{}", out.summary);
    assert_eq!(out.summary["partial"], true);
    let sidecar: Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("empirical_rate.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["partial"], true);
}

#[test]
fn overrides_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.toml", "experiment = \"kappa_scan\"\n");
    let out = barylab(&[
        "run",
        p(&cfg),
        "--seed",
        "7",
        "--sigma",
        "0.25",
        "--out",
        p(&dir.path().join("o")),
        "--format",
        "json",
    ]);
    assert_eq!(out.code, 0, "{}", out.summary);
    assert_eq!(out.summary["seed"], 7);
    let rows: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("o/kappa_scan.rows.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(rows["config"]["experiment"]["sigma"], 0.25);

    let bad = write_config(dir.path(), "bad.toml", "experiment = \"nope\"\n");
    assert_eq!(barylab(&["run", p(&bad)]).code, 2);
    assert_eq!(barylab(&["validate", p(&bad)]).code, 2);
    let neg = write_config(
        dir.path(),
        "neg.toml",
        "experiment = \"g_probe\"\n[tolerances]\nbalance = -1.0\n",
    );
    assert_eq!(barylab(&["validate", p(&neg)]).code, 2);
    assert_eq!(barylab(&["run", p(&cfg), "--tol", "0"]).code, 2);
}

#[test]
fn shipped_configs_parse_and_match_the_defaults() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let out = barylab(&["validate", p(&path)]);
        assert_eq!(out.code, 0, "{}: {}", path.display(), out.summary);
        let kind = out.summary["experiment"].as_str().unwrap().to_string();
        let printed = Command::new(env!("CARGO_BIN_EXE_barylab"))
            .args(["run", "--print-default", &kind])
            .output()
            .unwrap();
        assert_eq!(
            String::from_utf8(printed.stdout).unwrap(),
            std::fs::read_to_string(&path).unwrap()
        );
        seen += 1;
    }
    assert_eq!(seen, 8);
}
