use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hotwall_cli::config::ExperimentConfig;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn hotwall(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hotwall"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn config_arg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

#[test]
fn shipped_configs_round_trip() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let a = ExperimentConfig::load(&path).unwrap();
        let b = ExperimentConfig::parse(&a.emit()).unwrap();
        assert_eq!(a, b, "{}", path.display());
        assert_eq!(a.emit(), b.emit());
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config_arg("exp_rare.toml");
    for (out, threads) in [("a", "1"), ("b", "4")] {
        let o = hotwall(tmp.path(), &["rare", "--config", &cfg, "--out", out, "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["estimates.csv", "slopes.json", "tightness.csv", "free_energy.csv", "manifest.json"] {
        let a = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let o = hotwall(tmp.path(), &["rare", "--config", &cfg, "--out", "c", "--seed", "6"]);
    assert!(o.status.success());
    let a = std::fs::read(tmp.path().join("a/tightness.csv")).unwrap();
    let c = std::fs::read(tmp.path().join("c/tightness.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn minimal_single_atom_run_converges() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hotwall(tmp.path(), &["simulate", "--config", &config_arg("minimal.toml")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lln = std::fs::read_to_string(tmp.path().join("out/minimal/lln.csv")).unwrap();
    let last = lln.lines().last().unwrap();
    let bl: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(bl < 1e-12, "{last}");
    for f in ["trajectory.csv", "histogram.csv", "manifest.json", "config.toml"] {
        assert!(tmp.path().join("out/minimal").join(f).exists(), "{f}");
    }
}

#[test]
fn shipped_nonldp_config_reproduces_the_demonstration() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hotwall(tmp.path(), &["nonldp", "--config", &config_arg("dyadic_nonldp.toml")]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}{}", String::from_utf8_lossy(&o.stderr));
    for check in ["matched_slope", "mismatched_gap", "control_agreement"] {
        assert!(stdout.contains(&format!("PASS {check}")), "{stdout}");
    }
}

#[test]
fn config_errors_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(configs().join("exp_rare.toml")).unwrap();
    let bad = src.replacen("replicas = 2000\n", "replicas = 0\n", 1);
    let line = bad.lines().position(|l| l.trim() == "replicas = 0").unwrap() + 1;
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, bad).unwrap();
    let o = hotwall(tmp.path(), &["rare", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("line {line}:")), "{err}");

    let typo = src.replace("direct = true", "dirct = true");
    let line = typo.lines().position(|l| l.starts_with("dirct")).unwrap() + 1;
    std::fs::write(&path, typo).unwrap();
    let o = hotwall(tmp.path(), &["rare", "--config", path.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("line {line}:")), "{err}");
}

#[test]
fn missing_section_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hotwall(tmp.path(), &["rates", "--config", &config_arg("minimal.toml")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[rates]"));
}
