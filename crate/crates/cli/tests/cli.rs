use std::path::Path;
use std::process::{Command, Output};

fn ncd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncd"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn ncd")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = ncd(dir, args);
    assert!(
        out.status.success(),
        "ncd {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_line(out: &Output) -> String {
    let err = String::from_utf8_lossy(&out.stderr);
    err.lines().find(|l| l.starts_with("ncd: error")).unwrap_or_default().to_string()
}

fn result_value(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{stdout}"))
        .trim()
        .parse()
        .unwrap()
}

/// Small ball, its modes and a dataset.
fn fem_setup(dir: &Path) {
    ok(dir, &["gen-assets", "--subdiv", "1", "--cell", "0.1"]);
    ok(dir, &["modes", "--tet", "assets/ball.node", "--m", "6", "--out", "basis.bin"]);
    ok(
        dir,
        &["sample", "--tet", "assets/ball.node", "--basis", "basis.bin", "--poses", "12", "--per-pose", "200", "--out", "fem.ds"],
    );
}

#[test]
fn bad_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncd(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncd(dir.path(), &["modes", "--tet", "nope.node"]);
    assert_eq!(out.status.code(), Some(2));
    let line = error_line(&out);
    assert!(line.starts_with("ncd: error code=2 kind=io message="), "{line}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.cfg"), "subdiv = 1\nwidgets = 3\n").unwrap();
    let out = ncd(dir.path(), &["gen-assets", "--config", "c.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_line(&out).contains("widgets"));
}

#[test]
fn diverging_training_is_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    fem_setup(dir.path());
    let out = ncd(
        dir.path(),
        &["train", "--data", "fem.ds", "--lr", "1e38", "--epochs", "3", "--layers", "1", "--width", "4"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(error_line(&out).contains("kind=numeric"));
}

#[test]
fn flags_override_config_and_manifest_echoes_both() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("c.cfg"), "# fixture\nsubdiv = 2\ncell = 0.1\n").unwrap();
    let stdout = ok(p, &["gen-assets", "--config", "c.cfg", "--subdiv", "1", "--run-dir", "run"]);
    assert_eq!(result_value(&stdout, "ball.surface_triangles"), 80.0);
    let manifest = std::fs::read_to_string(p.join("run/gen-assets.manifest")).unwrap();
    assert!(manifest.lines().any(|l| l == "subdiv = 1"));
    assert!(manifest.lines().any(|l| l == "cell = 0.1"));
    assert!(manifest.lines().any(|l| l == "bumps = 6"));
}

#[test]
fn sample_ratio_default_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    fem_setup(dir.path());
    let manifest = std::fs::read_to_string(dir.path().join("sample.manifest")).unwrap();
    assert!(manifest.lines().any(|l| l == "ratio = 2:2:1"), "{manifest}");
    assert!(manifest.lines().any(|l| l == "per-pose = 200"));
}

#[test]
fn train_defaults_match_reference_hyperparameters() {
    let dir = tempfile::tempdir().unwrap();
    fem_setup(dir.path());
    ok(dir.path(), &["train", "--data", "fem.ds", "--epochs", "1", "--out", "d.ckpt"]);
    let manifest = std::fs::read_to_string(dir.path().join("train.manifest")).unwrap();
    for line in ["lr = 0.0001", "delta = 0.1", "layers = 8", "width = 128"] {
        assert!(manifest.lines().any(|l| l == line), "missing `{line}` in\n{manifest}");
    }
}

#[test]
fn manifest_rerun_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fem_setup(p);
    ok(p, &["train", "--data", "fem.ds", "--epochs", "2", "--layers", "2", "--width", "8", "--out", "a.ckpt"]);
    std::fs::rename(p.join("sample.manifest"), p.join("sample.cfg")).unwrap();
    std::fs::rename(p.join("train.manifest"), p.join("train.cfg")).unwrap();
    ok(p, &["sample", "--config", "sample.cfg", "--out", "again.ds"]);
    assert_eq!(std::fs::read(p.join("fem.ds")).unwrap(), std::fs::read(p.join("again.ds")).unwrap());
    ok(p, &["train", "--config", "train.cfg", "--threads", "2", "--out", "b.ckpt"]);
    assert_eq!(std::fs::read(p.join("a.ckpt")).unwrap(), std::fs::read(p.join("b.ckpt")).unwrap());
}

#[test]
fn fem_pipeline_query_slice_eval_bench() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fem_setup(p);
    ok(
        p,
        &["train", "--data", "fem.ds", "--epochs", "2", "--layers", "2", "--width", "8", "--lr", "1e-3", "--out", "n.ckpt"],
    );
    std::fs::write(p.join("pts.txt"), "0 0 0\n0.5 0.1 0.2\n").unwrap();
    let stdout = ok(
        p,
        &["query", "--net", "n.ckpt", "--tet", "assets/ball.node", "--points", "pts.txt", "--triangles", "--out", "q.csv"],
    );
    assert_eq!(result_value(&stdout, "points"), 2.0);
    let q = std::fs::read_to_string(p.join("q.csv")).unwrap();
    assert_eq!(q.lines().count(), 3);
    assert!(q.starts_with("x,y,z,distance,nx,ny,nz,triangle"));

    ok(p, &["slice", "--net", "n.ckpt", "--tet", "assets/ball.node", "--res", "8", "--out", "s"]);
    let pgm = std::fs::read(p.join("s.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
    assert_eq!(std::fs::read_to_string(p.join("s.csv")).unwrap().lines().count(), 65);

    let stdout = ok(p, &["eval", "--net", "n.ckpt", "--tet", "assets/ball.node", "--points", "50", "--poses", "2"]);
    let sign = result_value(&stdout, "sign_agreement");
    assert!((0.0..=1.0).contains(&sign));

    ok(
        p,
        &["bench", "--net", "n.ckpt", "--tet", "assets/ball.node", "--ns", "1,4", "--reps", "5", "--out", "b.csv"],
    );
    let csv = std::fs::read_to_string(p.join("b.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("method,N,ns,pose_set"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn skin_pipeline_query_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["gen-assets", "--subdiv", "1", "--cell", "0.1"]);
    let stdout = ok(
        p,
        &["sample", "--kind", "skin", "--mesh", "assets/character.obj", "--skin", "assets/character.skin", "--per-pose", "50", "--out", "s.ds"],
    );
    assert!(result_value(&stdout, "held_out_frames") > 0.0);
    ok(p, &["train", "--data", "s.ds", "--epochs", "1", "--layers", "1", "--width", "8", "--out", "s.ckpt"]);
    std::fs::write(p.join("pts.txt"), "0 0.4 0\n").unwrap();
    std::fs::write(p.join("root.txt"), "1 0 0 0 1 0 0 0 1 5 0 0\n").unwrap();
    let common = ["--net", "s.ckpt", "--mesh", "assets/character.obj", "--skin", "assets/character.skin"];
    let mut args = vec!["query"];
    args.extend(common);
    args.extend(["--points", "pts.txt", "--root", "root.txt", "--out", "q.csv"]);
    ok(p, &args);
    let q = std::fs::read_to_string(p.join("q.csv")).unwrap();
    let row: Vec<&str> = q.lines().nth(1).unwrap().split(',').collect();
    // five units from a root-translated body the field is positive
    assert!(row[3].parse::<f64>().unwrap() > 0.0);

    let mut args = vec!["eval"];
    args.extend(common);
    args.extend(["--points", "20"]);
    let stdout = ok(p, &args);
    assert!(result_value(&stdout, "points") > 0.0);
}
