use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn out_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("implicit-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn implicit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_implicit")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

fn assert_outputs(dir: &Path) {
    for f in ["result.json", "metrics.csv", "predictions.csv"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn gen_demos_writes_outputs() {
    let dir = out_dir("demos");
    let o = implicit(&["gen-demos", "--n", "2", "--n-demos", "5", "--seed", "3"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_outputs(&dir);
    assert!(dir.join("demos.jsonl").is_file());
}

#[test]
fn fit_function_is_deterministic() {
    let args = [
        "fit-function",
        "--method",
        "mse",
        "--kind",
        "hysteresis",
        "--n-points",
        "50",
        "--train-iterations",
        "50",
        "--test-points",
        "40",
        "--seed",
        "2",
    ];
    let (a, b) = (out_dir("fit-a"), out_dir("fit-b"));
    for d in [&a, &b] {
        let o = implicit(&args, d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_outputs(d);
    }
    assert_eq!(read(&a, "predictions.csv"), read(&b, "predictions.csv"));
    assert_eq!(read(&a, "metrics.csv"), read(&b, "metrics.csv"));
}

#[test]
fn eval_policy_nearest_neighbor() {
    let dir = out_dir("eval");
    let o = implicit(
        &["eval-policy", "--method", "nearest_neighbor", "--n", "1", "--n-demos", "50", "--episodes", "4"],
        &dir,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_outputs(&dir);
    assert!(read(&dir, "result.json").contains("success_rate"));
}

#[test]
fn sparsity_command() {
    let dir = out_dir("sparsity");
    let o = implicit(&["sparsity", "--ns", "1,2", "--n-demos", "20", "--episodes", "5"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_outputs(&dir);
}

#[test]
fn bad_input_fails_with_one_line_reason() {
    let dir = out_dir("bad");
    let o = implicit(&["eval-policy", "--method", "bogus"], &dir);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("bogus"), "{err}");

    let o = implicit(&["gen-demos", "--n", "0"], &dir);
    assert!(!o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim_end().lines().count(), 1);
}
