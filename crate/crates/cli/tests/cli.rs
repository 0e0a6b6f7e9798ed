//! End-to-end runs of the `relay-dde` binary.

use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relay-dde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// `(t, x)` pairs of a trajectory CSV.
fn samples(csv: &str) -> Vec<(f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            let t = it.next().unwrap().parse().unwrap();
            let x = it.next().unwrap().parse().unwrap();
            (t, x)
        })
        .collect()
}

fn value_at(rows: &[(f64, f64)], t: f64) -> f64 {
    rows.iter()
        .find(|(s, _)| (s - t).abs() < 1e-12)
        .expect("sample present")
        .1
}

#[test]
fn analyze_reports_the_fixed_point() {
    let out = run(&["analyze", "--preset", "p1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let text = v.to_string();
    assert!(text.contains("1.0216173412814"), "{text}");
}

#[test]
fn exit_codes() {
    // bad input
    let out = run(&[
        "analyze", "--a1", "0", "--a2", "0.1", "--p1", "3", "--p2", "1", "--mu", "0.1",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("a1 must be > 0"), "{}", stderr(&out));
    assert_eq!(code(&run(&["analyze"])), 1);
    assert_eq!(code(&run(&["no-such-command"])), 1);
    assert_eq!(code(&run(&["sweep", "--table", "3"])), 1);
    // hypothesis or shape failure
    assert_eq!(
        code(&run(&["analyze", "--preset", "p1", "--regime", "double"])),
        2
    );
    let out = run(&["simulate", "--preset", "p1", "--exact", "--h", "50"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("t2<p1"), "{}", stderr(&out));
    // residual breach: a repeated delta cannot decrease strictly
    let out = run(&["verify", "--preset", "p1", "--deltas", "1e-3,1e-3"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    // help is not an error
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn exact_orbit_returns_every_period() {
    let out = run(&[
        "simulate",
        "--preset",
        "p1",
        "--exact",
        "--periods",
        "2",
        "--sample",
        "0.5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = samples(&stdout(&out));
    let h = value_at(&rows, 0.0);
    assert!((h - 1.0216173412814014).abs() < 1e-12);
    assert!((value_at(&rows, 4.0) - h).abs() < 1e-9);
    assert!((value_at(&rows, 8.0) - h).abs() < 1e-9);
}

#[test]
fn negative_history_negates_the_trajectory() {
    let up = run(&[
        "simulate", "--preset", "p1", "--exact", "--h", "0.8", "--sample", "0.25",
    ]);
    let down = run(&[
        "simulate", "--preset", "p1", "--exact", "--h", "-0.8", "--sample", "0.25",
    ]);
    assert_eq!(code(&up), 0);
    assert_eq!(code(&down), 0, "{}", stderr(&down));
    let (a, b) = (samples(&stdout(&up)), samples(&stdout(&down)));
    assert_eq!(a.len(), b.len());
    for ((t, x), (s, y)) in a.iter().zip(&b) {
        assert_eq!(t, s);
        assert!((x + y).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn double_orbit_is_antiperiodic() {
    let out = run(&[
        "simulate",
        "--preset",
        "p2",
        "--exact",
        "--periods",
        "2",
        "--sample",
        "0.25",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = samples(&stdout(&out));
    let h = value_at(&rows, 0.0);
    assert!((value_at(&rows, 1.5) + h).abs() < 1e-9);
    assert!((value_at(&rows, 3.0) - h).abs() < 1e-9);
}

#[test]
fn output_is_deterministic() {
    let args = ["sweep", "--table", "1", "--golden"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let args = ["verify", "--preset", "p1", "--deltas", "1e-2,1e-3"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.conf");
    fs::write(
        &cfg,
        "# reference set\na1 = 2\na2 = 0.1\np1 = 3\np2 = 1\nmu = 0.5\n",
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let from_file = run(&["analyze", "--config", path, "--mu", "0.1"]);
    let preset = run(&["analyze", "--preset", "p1"]);
    assert_eq!(code(&from_file), 0, "{}", stderr(&from_file));
    assert_eq!(from_file.stdout, preset.stdout);

    fs::write(&cfg, "a1 = 2\nbogus = 1\n").unwrap();
    let out = run(&["analyze", "--config", path]);
    assert_eq!(code(&out), 1);
}

#[test]
fn files_are_written_where_asked() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t1.csv");
    let json = dir.path().join("t1.json");
    let out = run(&[
        "sweep",
        "--table",
        "2",
        "--out",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).is_empty());
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 19);
    assert!(table.starts_with("row,a1,a2,p1,p2,mu"));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert!(doc.to_string().contains("\"match\""));
    // row 1's intercept is flagged on stderr
    assert!(stderr(&out).contains("row 1:"), "{}", stderr(&out));
}

#[test]
fn smooth_exports_both_functions() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let a = dir.path().join("a.csv");
    let out = run(&[
        "smooth",
        "--preset",
        "p1",
        "--delta",
        "1e-3",
        "--f-csv",
        f.to_str().unwrap(),
        "--a-csv",
        a.to_str().unwrap(),
        "--samples",
        "100",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let spec: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(spec["R_delta"].as_f64().unwrap() > 0.0);
    assert!(fs::read_to_string(&f).unwrap().starts_with("u,f_tilde\n"));
    assert!(fs::read_to_string(&a).unwrap().starts_with("t,a_tilde\n"));
    assert_eq!(code(&run(&["smooth", "--preset", "p1", "--delta", "5"])), 1);
}

#[test]
fn smoothed_run_tracks_the_exact_orbit() {
    let exact = run(&["simulate", "--preset", "p1", "--exact", "--sample", "0.5"]);
    let smooth = run(&[
        "simulate",
        "--preset",
        "p1",
        "--smoothed",
        "--delta",
        "1e-3",
        "--stride",
        "100",
    ]);
    assert_eq!(code(&smooth), 0, "{}", stderr(&smooth));
    let (e, s) = (samples(&stdout(&exact)), samples(&stdout(&smooth)));
    // away from the exceptional windows the two agree closely
    for t in [0.5, 1.0, 2.0, 3.0] {
        assert!((value_at(&e, t) - value_at(&s, t)).abs() < 1e-6, "t = {t}");
    }
}
