use std::path::Path;
use std::process::{Command, Output};

fn nlc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlc")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&nlc(d, &["collect", "--bogus"])), 2);
    assert_eq!(code(&nlc(d, &[])), 2);
    assert_eq!(code(&nlc(d, &["sweep", "nowhere", "--out", "x"])), 2);
    assert_eq!(code(&nlc(d, &["collect", "--tau", "7", "--out", "x"])), 2);
    assert_eq!(code(&nlc(d, &["train", "--model", "lstm", "--data", "x", "--out", "y"])), 2);
    let o = nlc(d, &["train", "--data", "missing.bin", "--out", "m.ckpt"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.bin"));
    assert_eq!(code(&nlc(d, &["score-table", "missing.csv"])), 2);
}

#[test]
fn help_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlc(dir.path(), &["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["collect", "train", "eval", "sweep", "score-table"] {
        assert!(text.contains(sub), "{sub}");
    }
}

#[test]
fn collect_train_eval_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = nlc(d, &["collect", "--env", "pendulum", "--samples", "40", "--out", "d.bin", "--text", "d.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("d.bin").is_file() && d.join("d.csv").is_file());

    let o = nlc(d, &["train", "--data", "d.bin", "--epochs", "1", "--out", "m.ckpt", "--loss-csv", "loss.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("m.ckpt").is_file());

    let eval = ["eval", "--env", "pendulum", "--model", "m.ckpt", "--seeds", "1", "--seconds", "0.5", "--horizon", "10", "--rollouts", "50", "--out", "e.csv"];
    let o = nlc(d, &eval);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read_to_string(d.join("e.csv")).unwrap();
    assert!(first.starts_with("# config_hash = "));
    // random, oracle, one model
    assert_eq!(first.lines().count(), 2 + 3);

    // a rerun with the same configuration resumes and adds nothing
    assert!(nlc(d, &eval).status.success());
    assert_eq!(std::fs::read_to_string(d.join("e.csv")).unwrap(), first);

    let o = nlc(d, &["score-table", "e.csv", "--out", "t.md"]);
    assert!(o.status.success());
    let md = std::fs::read_to_string(d.join("t.md")).unwrap();
    assert!(md.contains("| oracle | 100.00±0.00 |"), "{md}");
    assert!(md.contains("| random | 0.00±0.00 |"), "{md}");
}
