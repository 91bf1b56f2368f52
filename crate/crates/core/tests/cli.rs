use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn gazekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gazekit")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_lays_out_subject_condition_block_dirs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gazekit(&[
        "simulate",
        "--seed",
        "1",
        "--subjects",
        "2",
        "--blocks",
        "2",
        "--rounds",
        "1",
        "--out",
        path(tmp.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut names: Vec<String> =
        fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 2 * 4 * 2);
    assert!(names.contains(&"s1_sticky_magnetic_b1".to_string()));
    assert_eq!(stdout(&o).lines().count(), 16);
}

#[test]
fn bad_flags_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = path(tmp.path());
    assert_eq!(code(&gazekit(&["simulate", "--out", out, "--condition", "sideways"])), 2);
    assert_eq!(code(&gazekit(&["simulate", "--out", out, "--subjects", "0"])), 2);
    assert_eq!(code(&gazekit(&["simulate", "--out", out, "--sim.dropout-rate", "1.5"])), 2);
    assert_eq!(code(&gazekit(&["simulate", "--out", out, "--bogus"])), 2);
    assert_eq!(code(&gazekit(&["frobnicate"])), 2);
    assert_eq!(code(&gazekit(&["classify", "--in", out, "--window-ms", "-1"])), 2);
}

#[test]
fn early_offset_produces_raw_early_triggers() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gazekit(&[
        "simulate",
        "--seed",
        "4",
        "--condition",
        "magnetic",
        "--subjects",
        "3",
        "--rounds",
        "2",
        "--sim.pinch-offset-mean",
        "-120",
        "--out",
        path(tmp.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for dir in gazekit::io::find_sessions(tmp.path()).unwrap() {
        let log = gazekit::io::read_session(&dir).unwrap();
        let early = log.selections.iter().filter(|s| s.outcome_raw == gazekit::classify::OutcomeClass::EarlyTrigger);
        assert!(early.count() > 0, "{}", dir.display());
    }
}

#[test]
fn classify_reproduces_logged_selections() {
    let dir = fixtures().join("golden_session");
    let o = gazekit(&["classify", "--in", path(&dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), fs::read_to_string(dir.join("selections.jsonl")).unwrap());

    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("wide.jsonl");
    let o = gazekit(&["classify", "--in", path(&dir), "--window-ms", "2000", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 18);
}

#[test]
fn classify_missing_session_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&gazekit(&["classify", "--in", path(&tmp.path().join("none"))])), 2);
}

#[test]
fn analyze_emits_one_row_per_session() {
    let o = gazekit(&["analyze", "--in", path(&fixtures().join("golden_study/sessions"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("session_id,subject_id,condition,"));
    assert_eq!(text.lines().count(), 13);
    assert_eq!(text, fs::read_to_string(fixtures().join("golden_study/report/sessions.csv")).unwrap());
}

#[test]
fn report_matches_golden_output() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gazekit(&["report", "--in", path(&fixtures().join("golden_study/sessions")), "--out", path(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let golden = fixtures().join("golden_study/report");
    let mut n = 0;
    for e in fs::read_dir(&golden).unwrap() {
        let name = e.unwrap().file_name();
        let want = fs::read(golden.join(&name)).unwrap();
        assert_eq!(fs::read(tmp.path().join(&name)).unwrap(), want, "{name:?}");
        n += 1;
    }
    assert_eq!(n, fs::read_dir(tmp.path()).unwrap().count());
    assert_eq!(stdout(&o), fs::read_to_string(golden.join("summary.txt")).unwrap());
}

#[test]
fn unbalanced_design_lists_missing_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let sessions = tmp.path().join("sessions");
    let o = gazekit(&["simulate", "--seed", "2", "--subjects", "3", "--rounds", "1", "--out", path(&sessions)]);
    assert_eq!(code(&o), 0);
    fs::remove_dir_all(sessions.join("s2_magnetic_b0")).unwrap();
    let o = gazekit(&["report", "--in", path(&sessions), "--out", path(&tmp.path().join("r"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("s2") && stderr(&o).contains("magnetic"), "{}", stderr(&o));
}

#[test]
fn validate_exit_codes() {
    let golden = fixtures().join("golden_session");
    assert_eq!(code(&gazekit(&["validate", path(&golden)])), 0);
    assert_eq!(code(&gazekit(&["validate", path(&fixtures().join("golden_study/sessions"))])), 0);

    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&gazekit(&["validate", path(&tmp.path().join("absent"))])), 2);

    let bad = tmp.path().join("bad");
    fs::create_dir(&bad).unwrap();
    for f in ["manifest.json", "frames.jsonl", "selections.jsonl"] {
        fs::copy(golden.join(f), bad.join(f)).unwrap();
    }
    let text = fs::read_to_string(bad.join("frames.jsonl")).unwrap().replacen("\"valid\":true", "\"valid\":7", 1);
    fs::write(bad.join("frames.jsonl"), text).unwrap();
    let o = gazekit(&["validate", path(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("frames.jsonl:1"), "{}", stdout(&o));
}

#[test]
fn serve_on_a_taken_port_exits_one() {
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = held.local_addr().unwrap().port().to_string();
    let tmp = tempfile::tempdir().unwrap();
    let o = gazekit(&["serve", "--port", &port, "--out", path(tmp.path())]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}
