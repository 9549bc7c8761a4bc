use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rampc"))
}

fn config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("rampc-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn run_writes_log_and_plots() {
    let out = tmp("run");
    let st = bin()
        .args(["run", "--controller", "rampc", "--seed", "1", "--steps", "20", "--config"])
        .arg(config())
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let log = std::fs::read_to_string(out.join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 21);
    let svgs = std::fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")).count();
    assert_eq!(svgs, 4);
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn missing_config_exits_2() {
    let st = bin()
        .args(["run", "--controller", "pid", "--seed", "0", "--config", "/nonexistent.toml", "--out"])
        .arg(tmp("missing"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tmp("invalid");
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("bad.toml");
    std::fs::write(&p, "steps = 0\n").unwrap();
    let st = bin().args(["precompute", "--config"]).arg(&p).status().unwrap();
    assert_eq!(st.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn halted_run_exits_1() {
    let out = tmp("halt");
    // The PID baseline leaves the hardware box from the default start.
    let st = bin()
        .args(["run", "--controller", "pid", "--seed", "0", "--steps", "200", "--config"])
        .arg(config())
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(1));
    assert!(out.join("log.csv").exists());
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn precompute_prints_offline_data() {
    let o = bin().args(["precompute", "--config"]).arg(config()).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("w_bar"));
    assert!(s.contains("terminal: invariant polygon"));
    assert!(s.contains("gain:"));
}
