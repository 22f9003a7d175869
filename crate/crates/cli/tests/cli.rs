use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shiftflow"))
}

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn shiftflow")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Synthesizes `one_bar.toml` into `dir`, returning (events, ground truth).
fn synth_one_bar(dir: &Path, seed: &str) -> (PathBuf, PathBuf) {
    let ev = dir.join(format!("events_{seed}.txt"));
    let gt = dir.join(format!("gt_{seed}.csv"));
    let out = run(&["synth", "--scene", p(&scene("one_bar.toml")), "--seed", seed, "--events", p(&ev), "--gt", p(&gt)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    (ev, gt)
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, gt_a) = synth_one_bar(dir.path(), "5");
    let copy = dir.path().join("again.txt");
    fs::copy(&a, &copy).unwrap();
    let (b, _) = synth_one_bar(dir.path(), "5");
    assert_eq!(fs::read(&copy).unwrap(), fs::read(&b).unwrap());
    let (c, _) = synth_one_bar(dir.path(), "6");
    assert_ne!(fs::read(&b).unwrap(), fs::read(&c).unwrap());
    let gt = fs::read_to_string(gt_a).unwrap();
    assert!(gt.starts_with("t_start_us,t_end_us,axis,expected_j,object_id\n"));
    assert!(gt.contains(",x,3,1"), "{gt}");
}

#[test]
fn run_writes_detections_and_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let (ev, gt) = synth_one_bar(dir.path(), "11");
    let det = dir.path().join("det.csv");
    let svgs = dir.path().join("svg");
    let out = run(&[
        "run",
        "-i",
        p(&ev),
        "-o",
        p(&det),
        "--config",
        p(&scene("synthetic_params.toml")),
        "--J",
        "5",
        "--segments",
        p(&gt),
        "--svg-dir",
        p(&svgs),
        "--audit",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&det).unwrap();
    // flag overrides the file's J = 6; the preset supplies dt and theta_e
    for line in ["# J = 5", "# delta_t_us = 200", "# theta_e = 20", "# geometry = 128x32"] {
        assert!(text.lines().any(|l| l == line), "missing {line:?}");
    }
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "bin,t_us,x,y_med,jx,jy,vx_px_s,vy_px_s,R,H,assoc");
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(rows.len() > 50, "{} detections", rows.len());
    let err = stderr(&out);
    assert!(err.contains("overall 100.0%"), "{err}");
    assert!(err.contains("0 violations"), "{err}");
    assert!(fs::read_dir(&svgs).unwrap().count() > 0);
}

#[test]
fn render_reads_bin_duration_from_detections() {
    let dir = tempfile::tempdir().unwrap();
    let (ev, _) = synth_one_bar(dir.path(), "2");
    let det = dir.path().join("det.csv");
    let out = run(&["run", "-i", p(&ev), "-o", p(&det), "--preset", "synthetic", "--nx", "128", "--ny", "32"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let first_bin = fs::read_to_string(&det)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .nth(1)
        .and_then(|l| l.split(',').next().map(str::to_owned))
        .expect("at least one detection");
    let svg = dir.path().join("bin.svg");
    let out = run(&[
        "render",
        "--detections",
        p(&det),
        "--events",
        p(&ev),
        "--bin",
        &first_bin,
        "--nx",
        "128",
        "--ny",
        "32",
        "-o",
        p(&svg),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = fs::read_to_string(svg).unwrap();
    assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
}

#[test]
fn missing_timing_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (ev, _) = synth_one_bar(dir.path(), "1");
    let out = run(&["run", "-i", p(&ev), "--nx", "128", "--ny", "32", "--dt-us", "200"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--theta-e"), "{}", stderr(&out));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (ev, _) = synth_one_bar(dir.path(), "1");
    let bad_key = dir.path().join("bad.toml");
    fs::write(&bad_key, "dt = 200\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["--preset", "synthetic", "--theta-s", "3", "--theta-s-frac", "0.2"],
        vec!["--preset", "synthetic", "--theta-e", "300"],
        vec!["--preset", "synthetic", "--L", "8", "--beta", "9"],
        vec!["--preset", "synthetic", "--mode", "fancy"],
        vec!["--config", p(&bad_key)],
        vec!["--preset", "synthetic", "--variant", "incremental", "--indexing", "literal"],
    ];
    for extra in cases {
        let mut args = vec!["run", "-i", p(&ev), "--nx", "128", "--ny", "32"];
        args.extend(&extra);
        let out = run(&args);
        assert_eq!(code(&out), 2, "{extra:?}: {}", stderr(&out));
    }
}

#[test]
fn processing_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let out = run(&["run", "-i", p(&missing), "--preset", "synthetic"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));

    // out of bounds for the default 240x180 geometry
    let oob = dir.path().join("oob.txt");
    fs::write(&oob, "0.000001 10 10 1\n0.000002 500 10 1\n").unwrap();
    let out = run(&["run", "-i", p(&oob), "--preset", "synthetic"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));

    let backwards = dir.path().join("back.txt");
    fs::write(&backwards, "0.000010 10 10 1\n0.000002 11 10 1\n").unwrap();
    let out = run(&["run", "-i", p(&backwards), "--preset", "synthetic"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn overlapping_ground_truth_is_rejected_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("ev.txt");
    let gt = dir.path().join("gt.csv");
    let out = run(&["synth", "--scene", p(&scene("two_bars.toml")), "--events", p(&ev), "--gt", p(&gt)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&["run", "-i", p(&ev), "--preset", "synthetic", "--nx", "128", "--ny", "32", "--segments", p(&gt)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("overlapping"));
}

#[test]
fn sweep_over_scene_writes_table_and_heat_map() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cells.csv");
    let svg = dir.path().join("cells.svg");
    let out = run(&[
        "sweep",
        "--scene",
        p(&scene("two_bars.toml")),
        "--config",
        p(&scene("synthetic_params.toml")),
        "--dt-us-list",
        "100,200",
        "--theta-e-list",
        "5,20,40",
        "--csv",
        p(&csv),
        "--svg",
        p(&svg),
        "--parallel",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = fs::read_to_string(csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("delta_t_us,theta_e,density,n,accuracy_pct,band"));
    assert_eq!(lines.count(), 6);
    assert!(fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn sweep_input_requires_segments() {
    let out = run(&["sweep", "--input", "x.txt", "--dt-us-list", "100", "--theta-e-list", "5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn cost_reports_published_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cost.csv");
    let out = run(&["cost", "--csv", p(&csv)]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("6039 bits"), "{text}");
    assert!(text.contains("5040 cycles"), "{text}");
    assert!(fs::read_to_string(csv).unwrap().starts_with("quantity,value\n"));
    assert_eq!(code(&run(&["cost", "--L", "0"])), 2);
}

#[test]
fn oracle_check_passes() {
    let out = run(&["oracle-check", "--cases", "300", "--seed", "9"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("300 cases,") && text.contains(" 0 mismatches"), "{text}");
}
