use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn mflq(args: &[&str], out: &Path) -> (Output, Option<Value>) {
    let output = Command::new(env!("CARGO_BIN_EXE_mflq"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    let report = std::fs::read_to_string(out.join("report.json")).ok().map(|t| serde_json::from_str(&t).unwrap());
    (output, report)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn check_value(report: &Value, name: &str) -> f64 {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()["value"].as_f64().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_embedded_example_gives_closed_form_value() {
    let dir = TempDir::new().unwrap();
    let (o, report) = mflq(&["solve", "--example", "61", "--embed-eps", "0.5", "--x", "1", "--grid", "500"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = report.unwrap();
    assert!((report["stages"]["saddle_value"]["value"].as_f64().unwrap() + 3.0).abs() < 1e-6);
    assert_eq!(report["passed"], true);
    assert!(report["config_hash"].as_str().unwrap().len() == 64);
    for (file, header) in [
        ("P.csv", "t,P_0_0"),
        ("Pi.csv", "t,Pi_0_0"),
        ("feedback.csv", "t,Theta_0_0,Theta_1_0,ThetaBar_0_0,ThetaBar_1_0"),
        ("moments.csv", "t,m_0,L_0_0"),
    ] {
        let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
        assert!(text.starts_with(header), "{file}: {}", text.lines().next().unwrap());
        assert_eq!(text.lines().count(), 502);
    }
}

#[test]
fn zero_weights_solve_to_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.json",
        r#"{"dims":{"n":2,"m1":1,"m2":1},"horizon":1.0,
            "coefficients":{"B1":{"kind":"constant","data":[[1.0],[0.0]]}},
            "weights":{"R11":[[1.0]],"R22":[[-1.0]]}}"#,
    );
    let out = dir.path().join("out");
    let (o, report) = mflq(&["solve", "--config", cfg.to_str().unwrap(), "--grid", "50", "--x", "0.3,-2"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report.unwrap()["stages"]["saddle_value"]["value"].as_f64().unwrap(), 0.0);
    let feedback = std::fs::read_to_string(out.join("feedback.csv")).unwrap();
    assert!(feedback.lines().skip(1).all(|l| l.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0)));
}

#[test]
fn solve_reports_breakdown_and_input_errors() {
    let dir = TempDir::new().unwrap();
    let singular = write_config(
        dir.path(),
        "singular.json",
        r#"{"dims":{"n":1,"m1":1,"m2":1},"horizon":1.0,"weights":{"R11":[[1.0]]}}"#,
    );
    let (o, _) = mflq(&["solve", "--config", singular.to_str().unwrap(), "--grid", "20"], &dir.path().join("a"));
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--embed-eps"));

    let bad = write_config(dir.path(), "bad.json", r#"{"dims":{"n":1,"m1":1,"m2":1},"horizon":1.0,"weights":{"R21":[[1.0]]}}"#);
    let (o, _) = mflq(&["solve", "--config", bad.to_str().unwrap()], &dir.path().join("b"));
    assert_eq!(code(&o), 2);
    let (o, _) = mflq(&["solve", "--example", "61", "--x", "1,2"], &dir.path().join("c"));
    assert_eq!(code(&o), 2);
    let (o, _) = mflq(&["solve", "--example", "61", "--grid", "5"], &dir.path().join("d"));
    assert_eq!(code(&o), 2);
    let (o, _) = mflq(&["solve", "--config", "/nonexistent.json"], &dir.path().join("e"));
    assert_eq!(code(&o), 2);
}

#[test]
fn check_passes_on_examples_and_certifies_a_failure() {
    let dir = TempDir::new().unwrap();
    for id in ["61", "52"] {
        let (o, report) = mflq(&["check", "--example", id, "--grid", "200"], &dir.path().join(id));
        assert_eq!(code(&o), 0);
        let section = &report.unwrap()["stages"]["section"];
        assert_eq!(section["passed"], true);
        assert_eq!(section["conclusive"], false);
    }
    let cfg = configs().join("example_6_1_positive_terminal.json");
    let out = dir.path().join("fail");
    let (o, report) = mflq(&["check", "--config", cfg.to_str().unwrap(), "--grid", "200", "--blocks", "8"], &out);
    assert_eq!(code(&o), 1);
    let report = report.unwrap();
    assert_eq!(report["stages"]["section"]["witness"]["player"], "Two");
    assert!(check_value(&report, "lambda_max(M22)") > 0.5);
    let witness = std::fs::read_to_string(out.join("witness.csv")).unwrap();
    assert!(witness.starts_with("coordinate,block,t_start,t_end,control\n"));
    assert_eq!(witness.lines().count(), 17);
    assert!(std::fs::read_to_string(out.join("section_M.csv")).unwrap().starts_with("c_0,"));
}

#[test]
fn perturb_classifies_the_examples() {
    let dir = TempDir::new().unwrap();
    let cases = [("61", "1", "not-solvable"), ("61", "0", "solvable"), ("52", "1", "solvable")];
    for (id, x, verdict) in cases {
        let out = dir.path().join(format!("{id}_{x}"));
        let (o, report) = mflq(&["perturb", "--example", id, "--x", x, "--grid", "400", "--eps-steps", "12"], &out);
        assert_eq!(code(&o), 0, "{id} {x}: {}", String::from_utf8_lossy(&o.stderr));
        let report = report.unwrap();
        assert_eq!(report["stages"]["family"]["verdict"], verdict);
        let csv = std::fs::read_to_string(out.join("eps_family.csv")).unwrap();
        assert!(csv.starts_with("eps,norm,value\n"));
        assert_eq!(csv.lines().count(), 13);
        assert_eq!(out.join("limit_feedback.csv").exists(), verdict == "solvable");
    }
    let cfg = configs().join("example_6_1_positive_terminal.json");
    let (o, report) = mflq(&["perturb", "--config", cfg.to_str().unwrap(), "--grid", "160"], &dir.path().join("cert"));
    assert_eq!(code(&o), 0);
    assert_eq!(report.unwrap()["stages"]["verdict"]["verdict"], "not-solvable");
}

#[test]
fn verify_candidates() {
    let dir = TempDir::new().unwrap();
    let pair = write_config(dir.path(), "pair.csv", "t,v_0,v_1\n0,0,-1\n1,0,-1\n");
    let zero = write_config(dir.path(), "zero.csv", "t,v_0,v_1\n0,0,0\n1,0,0\n");
    let args = |id: &'static str, x: &'static str, c: &Path| {
        vec!["verify", "--example", id, "--x", x, "--grid", "400", "--candidate"]
            .into_iter()
            .map(String::from)
            .chain([c.to_str().unwrap().to_string()])
            .collect::<Vec<_>>()
    };
    let run = |a: Vec<String>, out: &str| {
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        mflq(&refs, &dir.path().join(out))
    };
    let (o, _) = run(args("52", "1", &pair), "a");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (o, _) = run(args("61", "0", &zero), "b");
    assert_eq!(code(&o), 0);
    let (o, report) = run(args("61", "1", &zero), "c");
    assert_eq!(code(&o), 1);
    let entries = report.unwrap()["stages"]["saddle"]["entries"].as_array().unwrap().clone();
    let failing: Vec<_> = entries.iter().filter(|e| e["passed"] == false).collect();
    assert!(!failing.is_empty() && failing.iter().all(|e| e["player"] == "One"));
    let csv = std::fs::read_to_string(dir.path().join("c/expansion.csv")).unwrap();
    assert!(csv.starts_with("player,direction,lambda,linear,quadratic,passed\n"));

    let malformed = write_config(dir.path(), "bad.csv", "t,w_0\n0,1\n1,1\n");
    let (o, _) = run(args("52", "1", &malformed), "d");
    assert_eq!(code(&o), 2);
}

#[test]
fn solved_feedback_verifies_as_candidate() {
    let dir = TempDir::new().unwrap();
    let solved = dir.path().join("solved");
    let (o, _) = mflq(&["solve", "--example", "61", "--embed-eps", "0.5", "--grid", "400"], &solved);
    assert_eq!(code(&o), 0);
    let feedback = solved.join("feedback.csv");
    // Gains read from file are interpolated linearly between nodes, an O(h²)
    // change of the law, so first-order terms are only ~1e-6 at this grid.
    let args = ["verify", "--example", "61", "--embed-eps", "0.5", "--grid", "400", "--tol", "1e-4", "--candidate"];
    let (o, report) = mflq(
        &[&args[..], &[feedback.to_str().unwrap()]].concat(),
        &dir.path().join("verified"),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(check_value(&report.unwrap(), "candidate gain identity residual") <= 1e-8);
}

#[test]
fn same_seed_gives_identical_outputs() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let (o, report) = mflq(&["solve", "--example", "61", "--embed-eps", "0.25", "--grid", "200", "--paths", "500", "--seed", "7"], &out);
        assert_eq!(code(&o), 0);
        let mut report = report.unwrap();
        report.as_object_mut().unwrap().remove("timings");
        report.as_object_mut().unwrap().remove("argv");
        let csvs: Vec<String> = ["P.csv", "Pi.csv", "feedback.csv", "moments.csv"]
            .iter()
            .map(|f| std::fs::read_to_string(out.join(f)).unwrap())
            .collect();
        (report, csvs)
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn reproduce_rejects_unknown_ids() {
    let dir = TempDir::new().unwrap();
    let (o, _) = mflq(&["reproduce", "99"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("61"));
}

#[test]
fn reproduce_examples_pass() {
    let dir = TempDir::new().unwrap();
    for id in ["61", "52"] {
        let out = dir.path().join(id);
        let (o, report) = mflq(&["reproduce", id, "--grid", "1000"], &out);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(report.unwrap()["passed"], true);
        let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
        assert!(table.starts_with("name,value,reference,tol,passed\n"));
        assert!(table.lines().skip(1).all(|l| l.ends_with(",true")));
    }
}
