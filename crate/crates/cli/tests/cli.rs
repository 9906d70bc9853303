use std::process::{Command, Output};

fn ncgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncgeom")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn record<'a>(text: &'a str, name: &str) -> &'a str {
    let key = format!("name={name} ");
    text.lines().find(|l| l.contains(&key)).unwrap_or_else(|| panic!("no record {name} in\n{text}"))
}

fn computed(line: &str) -> f64 {
    let start = line.find("computed=\"").unwrap() + 10;
    let end = start + line[start..].find('"').unwrap();
    line[start..end].parse().unwrap()
}

#[test]
fn palatini_check_reports_g0_action() {
    let o = ncgeom(&["--command", "palatini-check", "--metric", "paper-g0", "--format", "records"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!((computed(record(&text, "action")) + 1.0).abs() < 1e-10);
    assert!(text.contains("kind=summary checks=2 passed=2 failed=0"));
}

#[test]
fn palatini_check_counterexample_and_random() {
    for metric in ["paper-counterexample-8x8", "random-spd", "identity"] {
        let o = ncgeom(&["--command", "palatini-check", "--metric", metric, "--seed", "4"]);
        assert_eq!(o.status.code(), Some(0), "{metric}: {}", stdout(&o));
    }
}

#[test]
fn matrix_action_closed_form_matches_pipeline() {
    for n in ["2", "3"] {
        let o = ncgeom(&["--command", "matrix-action", "--n", n, "--metric", "identity", "--format", "records"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        let closed = computed(record(&text, "closed_form"));
        let pipe = computed(record(&text, "pipeline"));
        assert!(((closed - pipe) / pipe).abs() < 1e-8);
    }
}

#[test]
fn torus_action_split() {
    let o = ncgeom(&["--command", "torus-action", "--m", "1", "--metric", "random-spd", "--grid", "16", "--format", "records"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    let total = computed(record(&text, "total_action"));
    let parts = computed(record(&text, "classical_term")) + computed(record(&text, "quantum_term"));
    assert!(((total - parts) / total).abs() < 1e-6);
}

#[test]
fn torus_action_varying_quantum_block() {
    let o = ncgeom(&["--command", "torus-action", "--m", "2", "--grid", "8", "--metric", "fourier-perturbed:0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("total_action"));
}

#[test]
fn metric_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("ncgeom-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("field.txt");
    // m = 1, n = 2, N = 8: g_c = 1, g_q = 2 I on every point
    let mut text = String::from("1 2 8\n");
    for _ in 0..8 {
        text.push_str("1 2 0 2 0 0 2\n");
    }
    std::fs::write(&path, text).unwrap();
    let o = ncgeom(&["--command", "torus-action", "--metric-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    std::fs::write(&path, "1 2 8\n1 2 0\n").unwrap();
    let o = ncgeom(&["--command", "torus-action", "--metric-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn palatini_solve_converges() {
    let o = ncgeom(&["--command", "palatini-solve", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn verify_paper_passes_and_writes_output() {
    let path = std::env::temp_dir().join(format!("ncgeom-verify-{}.txt", std::process::id()));
    let o = ncgeom(&["--command", "verify-paper", "--seed", "1", "--out", path.to_str().unwrap(), "--format", "records"]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("failed=0"));
    assert!(!text.contains("status=fail"));
}

#[test]
fn impossible_tolerance_fails_verification() {
    let o = ncgeom(&["--command", "palatini-check", "--metric", "random-spd", "--tol", "1e-40"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn configuration_errors_exit_two() {
    for args in [
        &["--command", "bogus"][..],
        &["--command", "matrix-action", "--n", "5"],
        &["--command", "matrix-action", "--metric", "sphere"],
        &["--command", "torus-action", "--metric-file", "/nonexistent/field.txt"],
        &["--command", "verify-paper", "--tol", "0"],
        &["--n", "2"],
    ] {
        assert_eq!(ncgeom(args).status.code(), Some(2), "{args:?}");
    }
}
