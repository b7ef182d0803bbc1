use std::process::{Command, Output};

fn aos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aos-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_reports_cg_aos_iterations_on_p1() {
    let o = aos(&["run", "--problem", "p1", "--n", "100", "--method", "cg_aos"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("CG_AOS: CONVERGED after 290 iterations"), "{out}");
}

#[test]
fn exact_gradient_run_on_tiny_problem_converges() {
    let o = aos(&["run", "--problem", "p1", "--n", "2", "--method", "gm", "--stepsize", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("GM_EXACT: CONVERGED"), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["run", "--n", "10", "--bogus"][..],
        &["run", "--n", "10", "--method", "nope"],
        &["run", "--n", "10", "--method", "gm_aos", "--beta", "fr"],
        &["run", "--n", "10", "--method", "bfgs_aos", "--theta", "2"],
        &["run", "--n", "1"],
        &["run", "--problem", "file", "--matrix", "a.mtx"],
        &["preset", "table9"],
        &["verify", "--trials", "0"],
        &[],
    ] {
        let o = aos(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn help_exits_cleanly() {
    let o = aos(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("preset"));
}

#[test]
fn numeric_failure_exit_code_depends_on_baseline() {
    // Unit steps from B0 = 0.001 I blow up.
    let baseline = aos(&["run", "--n", "100", "--method", "bfgs_1", "--b0-scale", "0.001"]);
    assert_eq!(baseline.status.code(), Some(0), "{}", stdout(&baseline));
    assert!(stdout(&baseline).contains("NUMERIC_FAILURE"));

    let custom = aos(&["run", "--n", "100", "--method", "qn", "--stepsize", "unit", "--fallback", "unit", "--b0-scale", "0.001"]);
    assert_eq!(custom.status.code(), Some(1), "{}", stdout(&custom));
    assert!(stdout(&custom).contains("BFGS_UNIT: NUMERIC_FAILURE"));
}

#[test]
fn trace_is_printed_before_summary() {
    let o = aos(&["run", "--n", "5", "--method", "gm_aos", "--trace"]);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("k,f,grad_inf,alpha,rule,restart"));
    assert!(lines.next().unwrap().starts_with("0,"));
    assert!(out.lines().last().unwrap().contains("GM_AOS: CONVERGED"));
}

#[test]
fn run_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("row.csv");
    let o = aos(&["run", "--problem", "p3", "--n", "50", "--seed", "3", "--method", "bb2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("problem,n,seed,method,status,iterations,grad_inf,restarts,skips,ms"));
    assert!(lines.next().unwrap().starts_with("P3,50,3,BB2,CONVERGED,"));
}

#[test]
fn file_problem_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (m, b) = (dir.path().join("a.mtx"), dir.path().join("b.txt"));
    std::fs::write(&m, "%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 4\n2 1 1\n2 2 3\n3 3 2\n").unwrap();
    std::fs::write(&b, "1\n2\n3\n").unwrap();
    let o = aos(&["run", "--problem", "file", "--matrix", m.to_str().unwrap(), "--rhs", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("FILE n=3 CG_AOS: CONVERGED"), "{}", stdout(&o));

    std::fs::write(&b, "1\n2\n").unwrap();
    let o = aos(&["run", "--problem", "file", "--matrix", m.to_str().unwrap(), "--rhs", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn table4_markdown_marks_unit_step_failure() {
    let o = aos(&["preset", "table4", "--format", "md", "--dims", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let unit_row = out.lines().find(|l| l.starts_with("| BFGS_1 |")).expect("BFGS_1 row");
    assert!(unit_row.starts_with("| BFGS_1 | F |"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("| BFGS_AOS |")));
}

#[test]
fn preset_output_is_identical_with_capped_workers() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let args = ["preset", "table3", "--dims", "100", "--repeats", "2", "--format", "json"];
    let a = Command::new(env!("CARGO_BIN_EXE_aos-bench"))
        .args(args)
        .args(["--out", &path("a.json")])
        .env("AOS_BENCH_THREADS", "1")
        .output()
        .unwrap();
    let b = aos(&[&args[..], &["--sequential", "--out", &path("b.json")]].concat());
    assert_eq!((a.status.code(), b.status.code()), (Some(0), Some(0)));
    let strip = |p: &str| {
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v["metadata"]["timestamp"] = "".into();
        v["metadata"]["parallel"] = false.into();
        for row in v["rows"].as_array_mut().unwrap() {
            row["ms"] = 0.into();
        }
        v
    };
    assert_eq!(strip(&path("a.json")), strip(&path("b.json")));
}

#[test]
fn verify_prints_one_line_per_check() {
    let o = aos(&["verify", "--trials", "300"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.lines().count() >= 9);
    assert!(out.lines().all(|l| l.starts_with("PASS ")), "{out}");
}
