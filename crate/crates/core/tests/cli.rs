use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use qsd::format::{parse_report, InstanceFile};
use qsd::quantum::{DensityMatrix, StateEnsemble};
use serde_json::Value;
use tempfile::TempDir;

fn qsd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsd"))
        .args(args)
        .output()
        .expect("qsd runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ket(a: f64, b: f64) -> Vec<Complex64> {
    vec![Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
}

fn trine() -> StateEnsemble {
    StateEnsemble::uniform(
        (0..3)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 3.0;
                DensityMatrix::pure(&ket((t / 2.0).cos(), (t / 2.0).sin())).unwrap()
            })
            .collect(),
    )
    .unwrap()
}

fn orthogonal() -> StateEnsemble {
    StateEnsemble::uniform(vec![
        DensityMatrix::pure(&ket(1.0, 0.0)).unwrap(),
        DensityMatrix::pure(&ket(0.0, 1.0)).unwrap(),
    ])
    .unwrap()
}

fn write_instance(dir: &TempDir, name: &str, ens: &StateEnsemble) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, InstanceFile::from_ensemble(ens).to_json()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn result_of(path: &Path) -> Value {
    parse_report(&std::fs::read_to_string(path).unwrap())
        .unwrap()
        .result
}

#[test]
fn solve_orthogonal_pair() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "orth.json", &orthogonal());
    let out = dir.path().join("report.json");
    let run = qsd(&["solve", s(&inst), "--output", s(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let value = result_of(&out)["value"].as_f64().unwrap();
    assert!((value - 1.0).abs() < 1e-12);
}

#[test]
fn solve_trine_then_certify() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "trine.json", &trine());
    let out = dir.path().join("report.json");
    assert_eq!(code(&qsd(&["solve", s(&inst), "--output", s(&out)])), 0);
    let result = result_of(&out);
    assert!((result["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-6);
    let certify = qsd(&["certify", s(&inst), s(&out)]);
    assert_eq!(
        code(&certify),
        0,
        "{}",
        String::from_utf8_lossy(&certify.stdout)
    );
    let table = String::from_utf8(certify.stdout).unwrap();
    assert!(table.contains("slackness") && !table.contains("FAIL"));
}

#[test]
fn report_residuals_round_trip() {
    use qsd::format::matrices_from_pairs;
    use qsd::solver::kkt_check;
    let dir = TempDir::new().unwrap();
    let ens = trine();
    let inst = write_instance(&dir, "trine.json", &ens);
    let out = dir.path().join("report.json");
    assert_eq!(code(&qsd(&["solve", s(&inst), "--output", s(&out)])), 0);
    let report = parse_report(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let m = report.matrices.unwrap();
    let elements = matrices_from_pairs("povm", &m.povm).unwrap();
    let k = matrices_from_pairs("k", &[m.k]).unwrap().remove(0);
    let kkt = kkt_check(&ens, &elements, &k).unwrap();
    let reported = &report.result["kkt"];
    for (name, v) in [
        ("primal_residual", kkt.primal_residual),
        ("dual_residual", kkt.dual_residual),
        ("slackness_residual", kkt.slackness_residual),
        ("gap", kkt.gap),
    ] {
        assert!(
            (reported[name].as_f64().unwrap() - v).abs() <= 1e-12,
            "{name}"
        );
    }
}

#[test]
fn corrupted_povm_fails_certification() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "trine.json", &trine());
    let out = dir.path().join("report.json");
    assert_eq!(code(&qsd(&["solve", s(&inst), "--output", s(&out)])), 0);
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let entry = &mut v["matrices"]["povm"][0][0][0][0];
    let corrupted = entry.as_f64().unwrap() + 1e-3;
    *entry = serde_json::json!(corrupted);
    std::fs::write(&out, serde_json::to_string(&v).unwrap()).unwrap();

    let certify = qsd(&["certify", s(&inst), s(&out)]);
    assert_eq!(code(&certify), 3);
    let table = String::from_utf8(certify.stdout).unwrap();
    let line = table
        .lines()
        .find(|l| l.starts_with("povm validity"))
        .unwrap();
    let residual: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((residual - 1e-3).abs() < 1e-6, "{line}");
    assert!(line.ends_with("FAIL"));
}

#[test]
fn certify_rejects_other_instance() {
    let dir = TempDir::new().unwrap();
    let a = write_instance(&dir, "trine.json", &trine());
    let b = write_instance(&dir, "orth.json", &orthogonal());
    let out = dir.path().join("report.json");
    assert_eq!(code(&qsd(&["solve", s(&a), "--output", s(&out)])), 0);
    let run = qsd(&["certify", s(&b), s(&out)]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("hash"));
}

#[test]
fn invalid_state_names_its_index() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"version": "qsd-1", "dimension": 2, "states": [
            {"prior": 0.5, "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
            {"prior": 0.5, "matrix": [[[0.45, 0], [0, 0]], [[0, 0], [0.45, 0]]]}
        ]}"#,
    )
    .unwrap();
    let run = qsd(&["solve", s(&path)]);
    assert_eq!(code(&run), 1);
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("state 1"), "{stderr}");
    assert!(stderr.contains("trace"), "{stderr}");
}

#[test]
fn missing_file_and_bad_json_are_input_errors() {
    assert_eq!(code(&qsd(&["solve", "/nonexistent/instance.json"])), 1);
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"version\": ").unwrap();
    assert_eq!(code(&qsd(&["bound", s(&path)])), 1);
}

#[test]
fn exhausted_budget_exits_two() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "trine.json", &trine());
    let run = qsd(&["solve", s(&inst), "--max-iter", "1", "--tolerance", "1e-14"]);
    assert_eq!(code(&run), 2);
    assert!(String::from_utf8_lossy(&run.stderr).contains("did not converge"));
}

#[test]
fn bound_command() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "trine.json", &trine());
    let out = dir.path().join("bound.json");
    assert_eq!(
        code(&qsd(&[
            "bound",
            s(&inst),
            "--best-cyclic",
            "--output",
            s(&out)
        ])),
        0
    );
    let result = result_of(&out);
    assert!((result["lower_bound"].as_f64().unwrap() - 0.6220085).abs() < 1e-6);
    assert!((result["best_cyclic"]["lower_bound"].as_f64().unwrap() - 0.6220085).abs() < 1e-6);

    let same = DensityMatrix::pure(&ket(0.6, 0.8)).unwrap();
    let inst = write_instance(
        &dir,
        "same.json",
        &StateEnsemble::uniform(vec![same; 4]).unwrap(),
    );
    assert_eq!(code(&qsd(&["bound", s(&inst), "--output", s(&out)])), 0);
    assert!((result_of(&out)["lower_bound"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn simulate_trine() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "trine.json", &trine());
    let out = dir.path().join("sim.json");
    let run = qsd(&[
        "simulate",
        s(&inst),
        "--shots",
        "1000000",
        "--seed",
        "0",
        "--output",
        s(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let result = result_of(&out);
    let sum = result["diagonal_sum"].as_f64().unwrap();
    assert!((sum - 1.0).abs() <= 3e-3, "{sum}");
    assert_eq!(result["nosignaling_ok"], Value::Bool(true));
}

#[test]
fn simulate_orthogonal_pair_matches_steering_probabilities() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "orth.json", &orthogonal());
    let out = dir.path().join("sim.json");
    assert_eq!(
        code(&qsd(&[
            "simulate",
            s(&inst),
            "--shots",
            "200000",
            "--seed",
            "5",
            "--output",
            s(&out)
        ])),
        0
    );
    let result = result_of(&out);
    let p = &result["probabilities"];
    let sd = (0.25f64 / 200000.0).sqrt();
    // Each message steers to its own state with probability ½ and to the other otherwise.
    for x in 0..2 {
        assert!((p[x][x].as_f64().unwrap() - 0.5).abs() < 4.0 * sd);
        let freq = result["first_member_frequencies"][x].as_f64().unwrap();
        assert!((freq - 0.5).abs() < 4.0 * sd);
    }
}

#[test]
fn simulate_rejects_zero_shots() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "trine.json", &trine());
    let run = qsd(&["simulate", s(&inst), "--shots", "0"]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("shots must be positive"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "trine.json", &trine());
    for args in [
        vec!["solve", s(&inst), "--seed", "3"],
        vec!["bound", s(&inst), "--best-cyclic"],
        vec!["simulate", s(&inst), "--shots", "20000", "--seed", "3"],
    ] {
        let a = qsd(&args);
        let b = qsd(&args);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}
