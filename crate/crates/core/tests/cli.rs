use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const STEADY: &str = r#"{"setup":"cauchy","L":4,"n":16,"t_end":0.1}"#;

fn polygas(args: &[&str], stdin: Option<&str>, env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_polygas"));
    cmd.args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .env_remove("POLYGAS_OUT");
    if let Some(dir) = env_out {
        cmd.env("POLYGAS_OUT", dir);
    }
    let mut child = cmd.spawn().unwrap();
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_reads_stdin_and_honours_env_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let out = polygas(&["run"], Some(STEADY), Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("audit.csv").exists());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn out_flag_beats_config_and_env() {
    let env_dir = tempfile::tempdir().unwrap();
    let cfg_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"setup":"cauchy","L":4,"n":16,"t_end":0.1,"output_dir":{}}}"#,
        serde_json::to_string(cfg_dir.path()).unwrap()
    );
    let flag = flag_dir.path().to_str().unwrap();
    let out = polygas(
        &["run", "-", "--out", flag],
        Some(&cfg),
        Some(env_dir.path()),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(flag_dir.path().join("audit.csv").exists());
    assert!(!cfg_dir.path().join("audit.csv").exists());
    assert!(!env_dir.path().join("audit.csv").exists());

    let out = polygas(&["run"], Some(&cfg), Some(env_dir.path()));
    assert_eq!(out.status.code(), Some(0));
    assert!(cfg_dir.path().join("audit.csv").exists());
    assert!(!env_dir.path().join("audit.csv").exists());
}

#[test]
fn run_reads_config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, STEADY).unwrap();
    let out_dir = dir.path().join("out");
    let out = polygas(
        &[
            "run",
            path.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--set",
            "n=24",
        ],
        None,
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["n_cells"], 24);
}

#[test]
fn config_errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let flag = dir.path().to_str().unwrap();
    let cases = [
        (
            r#"{"setup":"cauchy","L":4,"n":16,"t_end":0.1,"gas":{"mu":-1}}"#,
            "mu",
        ),
        (r#"{"setup":"cauchy","L":4,"n":2,"t_end":0.1}"#, "n"),
        (
            r#"{"setup":"cauchy","L":4,"n":16,"t_end":0.1,"colour":1}"#,
            "colour",
        ),
        (
            r#"{"setup":"halfline_isothermal","L":4,"n":16,"t_end":0.1,"theta_bc":2}"#,
            "theta_bc",
        ),
        ("not json", "line 1"),
    ];
    for (cfg, key) in cases {
        let out = polygas(&["run", "-", "--out", flag], Some(cfg), None);
        assert_eq!(out.status.code(), Some(1), "{cfg}");
        assert!(stderr(&out).contains(key), "{cfg}: {}", stderr(&out));
    }
}

#[test]
fn truncation_breach_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"setup":"cauchy","L":2,"n":64,"t_end":1,"initial":{"amplitude_v":0.3,"amplitude_theta":0.3}}"#;
    let out = polygas(
        &["run", "-", "--out", dir.path().to_str().unwrap()],
        Some(cfg),
        None,
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn stiffness_exits_two_with_failure_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"setup":"cauchy","L":8,"n":128,"t_end":1,"step":{"dt_min":0.04},"initial":{"amplitude_v":0.3}}"#;
    let out = polygas(
        &["run", "-", "--out", dir.path().to_str().unwrap()],
        Some(cfg),
        None,
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(dir.path().join("failure.json").exists());
}

#[test]
fn mms_steady_passes_and_short_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let flag = dir.path().to_str().unwrap();
    let out = polygas(
        &["mms", "--out", flag],
        Some(r#"{"steady":true,"n_list":[16,32,64],"t_end":0.05}"#),
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("mms_report.json").exists());

    let out = polygas(&["mms", "--out", flag], Some(r#"{"n_list":[64]}"#), None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("n_list"));
}

#[test]
fn sweep_reports_worst_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let flag = dir.path().to_str().unwrap();
    let out = polygas(
        &[
            "sweep", "--out", flag, "--param", "gas.mu", "--values", "0.5,2",
        ],
        Some(STEADY),
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("gas.mu=0.5").join("summary.json").exists());
    assert!(dir.path().join("gas.mu=2").join("summary.json").exists());

    let out = polygas(
        &[
            "sweep", "--out", flag, "--param", "gas.mu", "--values", "1,-1",
        ],
        Some(STEADY),
        None,
    );
    assert_eq!(out.status.code(), Some(1));
}
