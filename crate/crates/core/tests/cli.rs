use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_solvbound");

fn solvbound(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn verify_norms_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s2.toml", "spectrum = [[1, 1.0], [1, 2.0]]\n[counts]\npairs = 10000\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = solvbound(&["verify-norms", "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let ja = fs::read(a.join("verify-norms.jsonl")).unwrap();
    assert_eq!(ja, fs::read(b.join("verify-norms.jsonl")).unwrap());
    let summary = fs::read_to_string(a.join("verify-norms.txt")).unwrap();
    assert!(summary.contains("sandwich_upper_violation") && summary.contains("overall PASS"));
}

#[test]
fn distance_oracle_on_single_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "r1.toml", "spectrum = [[1, 1.0]]\n[counts]\npairs = 40\n");
    let o = solvbound(&["distance", "--oracle", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("oracle_relative_error"));
}

#[test]
fn malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "spectrum = [[1, 2.0], [1, 1.0]]\n");
    assert_eq!(solvbound(&["verify-norms", "--config", &bad]).status.code(), Some(2));
    let zero = write_config(dir.path(), "zero.toml", "[counts]\npairs = 0\n");
    assert_eq!(solvbound(&["verify-norms", "--config", &zero]).status.code(), Some(2));
    let s2 = write_config(dir.path(), "s2.toml", "spectrum = [[1, 1.0], [1, 2.0]]\n");
    assert_eq!(solvbound(&["distance", "--oracle", "--config", &s2]).status.code(), Some(2));
    assert_ne!(solvbound(&["no-such-command"]).status.code(), Some(0));
}

#[test]
fn merge_shards() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[counts]\npairs = 50\n");
    let other = write_config(dir.path(), "o.toml", "[counts]\npairs = 60\n");
    let mut shards = Vec::new();
    for (seed, c) in [("1", &cfg), ("2", &cfg), ("3", &other)] {
        let out = dir.path().join(format!("s{seed}"));
        let o = solvbound(&["verify-norms", "--config", c, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        shards.push(out.join("verify-norms.jsonl").to_string_lossy().into_owned());
    }
    let merged = dir.path().join("m");
    let o = solvbound(&["merge", &shards[0], &shards[1], &shards[0], "--out", merged.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let lines = fs::read_to_string(merged.join("merge.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 2);
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(stdout.contains(" 100 "), "{stdout}");
    assert_eq!(solvbound(&["merge", &shards[0], &shards[2]]).status.code(), Some(2));
}

#[test]
fn foliation_and_main_bound_campaigns() {
    for sub in ["foliation", "main-bound", "qs-profile"] {
        let o = solvbound(&[sub, "--seed", "5"]);
        assert_eq!(o.status.code(), Some(0), "{sub}: {}", String::from_utf8_lossy(&o.stdout));
    }
}
