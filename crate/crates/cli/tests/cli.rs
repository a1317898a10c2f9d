use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn softsnake(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softsnake"))
        .args(args)
        .env_remove("SOFTSNAKE_CONFIG_DIR")
        .output()
        .expect("binary runs")
}

fn planar_args(out: &Path) -> Vec<String> {
    vec![
        "--robot".into(),
        configs().join("robot.toml").display().to_string(),
        "--gait".into(),
        configs().join("planar_rolling.toml").display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ]
}

fn run(sub: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub.to_string()];
    args.extend(planar_args(out));
    args.extend(extra.iter().map(|s| s.to_string()));
    softsnake(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn run_succeeds_and_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("run", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["curves.csv", "joints.csv", "joints.json", "schedule.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn missing_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = softsnake(&["run", "--gait", "/nonexistent/gait.toml", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let gait = dir.path().join("gait.toml");
    fs::write(&gait, "[gait]\nkind = \"sidewinding\"\nwobble = 3\n").unwrap();
    let out = softsnake(&["gait", "--gait", gait.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nonconvergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let gait = dir.path().join("gait.toml");
    fs::write(&gait, "[ik]\nmax_iterations = 1\n").unwrap();
    let out = softsnake(&["ik", "--gait", gait.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = run("gait", &blocker.join("sub"), &[]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run("run", a.path(), &["--seed", "11"]).status.success());
    assert!(run("run", b.path(), &["--seed", "11", "--sequential"]).status.success());
    for f in ["curves.csv", "joints.csv", "schedule.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn staged_commands_match_full_run() {
    let full = tempfile::tempdir().unwrap();
    let staged = tempfile::tempdir().unwrap();
    assert!(run("run", full.path(), &[]).status.success());
    assert!(run("ik", staged.path(), &[]).status.success());
    assert!(run("schedule", staged.path(), &[]).status.success());
    for f in ["curves.csv", "joints.csv", "schedule.csv"] {
        assert_eq!(fs::read(full.path().join(f)).unwrap(), fs::read(staged.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("run", dir.path(), &["--nt", "10", "--ns", "41", "--rate", "10", "--duration", "3", "--phase", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap().lines().count() - 1;
    assert_eq!(lines("curves.csv"), 10 * 41);
    assert_eq!(lines("joints.csv"), 10);
    assert_eq!(lines("schedule.csv"), 30);
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"gait\": \"helical-rolling\""));
}

#[test]
fn config_dir_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg");
    fs::create_dir(&cfg).unwrap();
    fs::copy(configs().join("planar_rolling.toml"), cfg.join("gait.toml")).unwrap();
    let out_dir = dir.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_softsnake"))
        .args(["gait", "--out", out_dir.to_str().unwrap()])
        .env("SOFTSNAKE_CONFIG_DIR", &cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("planar-rolling"));
}
