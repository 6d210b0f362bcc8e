use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_walshprod"))
}

fn repo_config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("cfg.toml");
    fs::write(&path, text).unwrap();
    path
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn passing_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("verify-eq1", &repo_config("verify_eq1.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("verify-eq1.csv")).unwrap();
    assert!(csv.starts_with("d,n,s_size,s_prime_size,norm,expected,rel_err,pass\n"));
    let s = summary(dir.path());
    assert_eq!(s["pass"], true);
    assert_eq!(s["command"], "verify-eq1");
    assert!(s["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = repo_config("mc_vs_exact.toml");
    assert_eq!(run("mc-vs-exact", &cfg, a.path(), &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(run("mc-vs-exact", &cfg, b.path(), &[]).status.code(), Some(0));
    let read = |p: &Path| fs::read(p.join("mc-vs-exact.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn seed_flag_overrides_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = repo_config("mc_vs_exact.toml");
    run("mc-vs-exact", &cfg, a.path(), &[]);
    run("mc-vs-exact", &cfg, b.path(), &["--seed", "9"]);
    assert_eq!(summary(a.path())["master_seed"], 42);
    assert_eq!(summary(b.path())["master_seed"], 9);
    let read = |p: &Path| fs::read_to_string(p.join("mc-vs-exact.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn failed_assertion_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // a fixed middle weight with fast-growing n makes the ratio blow up
    let cfg = write_config(
        dir.path(),
        r#"schema_version = 1
[scaling_sweep]
schedule = [4, 6, 8, 10]
n = { rule = "list", values = [10, 100, 1000, 10000] }
[[scaling_sweep.chain]]
family = { kind = "all_size", sizes = [1] }
[[scaling_sweep.chain]]
family = { kind = "all_size", sizes = [2] }
weight = { rule = "constant", value = 0.1 }
[[scaling_sweep.chain]]
family = { kind = "all_size", sizes = [1] }
"#,
    );
    let out = run("scaling-sweep", &cfg, dir.path(), &["--exact"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL ratio_bounded"));
    assert_eq!(summary(dir.path())["pass"], false);
}

#[test]
fn missing_section_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("counting-bounds", &repo_config("verify_eq1.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "schema_version = 1\nbogus = 3\n");
    assert_eq!(run("verify-eq1", &cfg, dir.path(), &[]).status.code(), Some(3));
    let cfg = write_config(dir.path(), "schema_version = 99\n[counting_bounds]\n");
    assert_eq!(run("counting-bounds", &cfg, dir.path(), &[]).status.code(), Some(3));
}

#[test]
fn tiny_budget_with_exact_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(repo_config("scaling_sweep.toml")).unwrap();
    let cfg = write_config(dir.path(), &text.replace("seed = 42", "seed = 42\nbudget = 10"));
    assert_eq!(run("scaling-sweep", &cfg, dir.path(), &["--exact"]).status.code(), Some(4));
}

#[test]
fn too_few_trials_skips_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(repo_config("mc_vs_exact.toml")).unwrap();
    let cfg = write_config(dir.path(), &text.replace("trials = 1000", "trials = 2"));
    let out = run("mc-vs-exact", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path());
    assert!(!s["warnings"].as_array().unwrap().is_empty());
    assert_eq!(s["assertions"][0]["skipped"], true);
}
