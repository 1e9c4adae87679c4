use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qrelax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrelax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn row_example_csv() -> String {
    format!("{S},{S}\n{S},{}\n{},{}\n", -S, 2.0 * 2f64.sqrt(), 2f64.sqrt())
}

#[test]
fn reproduce_passes() {
    let out = qrelax(&["reproduce-paper"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let passes = text.lines().filter(|l| l.ends_with("PASS")).count();
    assert!(passes >= 14);
    assert!(!text.contains("FAIL"));
}

#[test]
fn reproduce_fails_with_flipped_givens() {
    let out = qrelax(&["reproduce-paper", "--inject", "givens"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("column example"), "{err}");
    assert!(err.contains("expected"));
}

#[test]
fn reproduce_fails_with_perturbed_beta() {
    let out = qrelax(&["reproduce-paper", "--inject", "beta:1e-6"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("beta_1"), "{}", stderr(&out));
}

#[test]
fn verify_single_trial() {
    let out = qrelax(&["verify", "--trials", "1"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("unitarity"));
}

#[test]
fn verify_injected_relaxation_fails() {
    let out = qrelax(&["verify", "--trials", "5", "--inject-relaxation", "1.2"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("outside [0, 1]"));
}

#[test]
fn identity_system_converges_immediately() {
    let out = qrelax(&["solve", "--inline", "1,0\n0,1\n1,0\n", "--mode", "classical-row"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("steps: 0"));
}

#[test]
fn sim_row_example_hits_step_limit() {
    let out = qrelax(&[
        "solve",
        "--inline",
        &row_example_csv(),
        "--mode",
        "sim-row",
        "--schedule",
        "seq:0.3333333333333333,1",
        "--strategy",
        "seq:1,2",
        "--steps",
        "2",
    ]);
    // x_2 = (2, 0) is not the solution (3, 1), so the run stops on its step budget
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("v: 3.316624790355"), "{text}");
    assert!(text.contains("success probability: 0.363636363636"), "{text}");
    assert!(text.contains("ancillas: 8"));
}

#[test]
fn memory_guard_exceeded() {
    let out = qrelax(&[
        "solve",
        "--inline",
        &row_example_csv(),
        "--mode",
        "sim-row",
        "--steps",
        "12",
    ]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("memory limit") && err.contains("step"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn parse_error_reports_location() {
    let out = qrelax(&["solve", "--inline", "1,0\n0,x\n1,0\n"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn out_directory_contents() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = qrelax(&[
        "solve",
        "--inline",
        &row_example_csv(),
        "--mode",
        "branch-row",
        "--steps",
        "500",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let records = fs::read_to_string(out_dir.join("records.jsonl")).unwrap();
    let steps: usize = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("steps: "))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(records.lines().count(), steps + 1);
    for key in ["\"k\"", "\"t\"", "\"relaxation\"", "\"x_norm\"", "\"residual\"", "\"error\"", "\"amplitude\"", "\"success_probability\""] {
        assert!(records.lines().next().unwrap().contains(key), "{key}");
    }
    for f in ["summary.txt", "config.toml", "scaling.json"] {
        assert!(out_dir.join(f).exists());
    }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn matrix_market_with_separate_rhs() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "a.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 2.0\n2 2 4.0\n",
    );
    let b = write(dir.path(), "b.mtx", "%%MatrixMarket matrix array real general\n2 1\n2.0\n4.0\n");
    let out = qrelax(&["solve", "--system", &a, "--rhs", &b, "--mode", "classical-column", "--steps", "10"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("solution: [1.000000000000, 1.000000000000]"));
    assert!(stdout(&out).contains("de-normalized"));
}

#[test]
fn csv_file_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.csv", &row_example_csv());
    let cfg = write(
        dir.path(),
        "run.toml",
        &format!("mode = \"branch-column\"\nsystem = \"{sys}\"\nformat = \"csv\"\nsteps = 200\ntol = 1e-9\n"),
    );
    let out = qrelax(&["solve", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("mode: branch-column"));
    let out = qrelax(&["solve", "--config", &cfg, "--steps", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_table_and_domain_guard() {
    let out = qrelax(&[
        "sweep",
        "--inline",
        &row_example_csv(),
        "--mode",
        "branch-row",
        "--grid",
        "0.25:1:0.25",
        "--steps",
        "2000",
        "--tol",
        "1e-6",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().next().unwrap().starts_with("relaxation,"));
    assert!(text.lines().skip(1).all(|l| l.contains(",converged,")));

    let out = qrelax(&["sweep", "--inline", &row_example_csv(), "--mode", "branch-row", "--grid", "0.5,1.5"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("1.5"));
}

#[test]
fn sim_mode_rejects_non_unit_start() {
    let out = qrelax(&["solve", "--inline", &row_example_csv(), "--mode", "sim-row", "--x0", "1,1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unit"));
}

#[test]
fn random_strategy_uses_seed_flag() {
    let run = |seed: &str| {
        stdout(&qrelax(&[
            "solve",
            "--inline",
            &row_example_csv(),
            "--mode",
            "classical-row",
            "--strategy",
            "random",
            "--seed",
            seed,
            "--steps",
            "3",
            "--tol",
            "0",
        ]))
    };
    assert_eq!(run("7"), run("7"));
}
