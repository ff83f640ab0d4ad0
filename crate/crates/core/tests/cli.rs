use std::path::PathBuf;
use std::process::{Command, Output};

use qew::cli::{self, config_from_output, RunConfig, RunOutput, PRESETS};
use qew::Error;

fn qew(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qew"))
        .args(args)
        .output()
        .expect("spawn qew")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qew-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn eels_probabilities_sum_to_one() {
    let out = stdout(&qew(&["eels", "--alpha-mag", "1", "--k-max", "30"]));
    let total: f64 = csv_column(&out, "prob").iter().sum();
    assert!((total - 1.0).abs() < 1e-12, "{total}");
    assert!(out.lines().any(|l| l.starts_with("# qew_version=")));
}

#[test]
fn identical_configs_give_identical_data() {
    let args = ["pinem", "--alpha-mag", "0.3,0.6", "--beta-mag", "4"];
    let a = stdout(&qew(&args));
    let b = stdout(&qew(&args));
    assert_eq!(RunOutput::data_section(&a), RunOutput::data_section(&b));
    let single = Command::new(env!("CARGO_BIN_EXE_qew"))
        .args(args)
        .env("QEW_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(RunOutput::data_section(&a), RunOutput::data_section(&stdout(&single)));
}

#[test]
fn header_is_enough_to_rerun() {
    for (args, fmt) in [
        (
            vec!["two-electron", "--alpha1-mag", "1.2", "--alpha2-mag", "0.4"],
            "csv",
        ),
        (vec!["fiber", "solve", "--diameter-nm", "420"], "csv"),
        (vec!["kinematics", "--kinetic-kev", "300"], "json"),
    ] {
        let path = scratch(&format!("first-{}.{fmt}", args[0]));
        let mut full = vec!["--format", fmt, "-o", path.to_str().unwrap()];
        full.extend(args.iter().copied());
        stdout(&qew(&full));
        let first = std::fs::read_to_string(&path).unwrap();
        let cfg = config_from_output(&first).unwrap();
        let cfg_path = scratch(&format!("cfg-{}.json", args[0]));
        std::fs::write(&cfg_path, cfg.to_json()).unwrap();
        let second = stdout(&qew(&["run", "--config", cfg_path.to_str().unwrap()]));
        assert_eq!(
            RunOutput::data_section(&first),
            RunOutput::data_section(&second),
            "{args:?}"
        );
    }
}

#[test]
fn json_output_parses() {
    let out = stdout(&qew(&[
        "--format",
        "json",
        "oracle-check",
        "--mode",
        "eels",
        "--alpha-mag",
        "0.8",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["data"]["passed"], serde_json::Value::Bool(true));
    assert!(v["data"]["max_abs_error"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["metadata"]["config"]["subcommand"], "oracle-check");
}

#[test]
fn oracle_check_two_electron_unit_couplings() {
    let out = stdout(&qew(&[
        "oracle-check",
        "--mode",
        "two-electron",
        "--alpha1-mag",
        "1",
        "--alpha2-mag",
        "1",
    ]));
    let err = out
        .lines()
        .find_map(|l| l.strip_prefix("max_abs_error,"))
        .unwrap()
        .parse::<f64>()
        .unwrap();
    assert!(err < 1e-8, "{err}");
}

#[test]
fn exit_codes() {
    assert_eq!(qew(&["eels", "--nonsense"]).status.code(), Some(1));
    assert_eq!(qew(&["run", "--preset", "no-such-preset"]).status.code(), Some(1));
    assert_eq!(qew(&["pinem", "--n-range", "5..2"]).status.code(), Some(1));
    assert_eq!(qew(&["fiber", "solve", "--core-index", "0.5"]).status.code(), Some(1));
    // basis far above the state cap is a numerical failure, not bad input
    let o = qew(&[
        "oracle-check",
        "--mode",
        "pinem",
        "--alpha-mag",
        "5",
        "--beta-mag",
        "30",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(qew(&["--help"]).status.code(), Some(0));
    assert_eq!(cli::exit_code(&Error::NonConvergence { terms: 3 }), 2);
    assert_eq!(cli::exit_code(&Error::Config("x".into())), 1);
}

#[test]
fn truncation_warning_is_recorded_not_fatal() {
    let o = qew(&["eels", "--alpha-mag", "1", "--k-max", "3"]);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("# warning=")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn unknown_config_keys_rejected() {
    let path = scratch("bad.json");
    std::fs::write(
        &path,
        r#"{"subcommand":"eels","parameters":{"alpha_mag":1,"colour":"red"},"format":"csv"}"#,
    )
    .unwrap();
    assert_eq!(qew(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(1));
    std::fs::write(
        &path,
        r#"{"subcommand":"eels","parameters":{},"format":"csv","extra":1}"#,
    )
    .unwrap();
    assert_eq!(qew(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn figure_preset_layers_under_flags() {
    let out = stdout(&qew(&[
        "pinem",
        "--alpha-mag",
        "0.2",
        "--beta-mag",
        "10",
        "--preset",
        "figure",
    ]));
    let cfg = config_from_output(&out).unwrap();
    assert_eq!(cfg.parameters["beta_mag"], serde_json::json!(10.0));
    let mags = csv_column(&out, "alpha_mag");
    assert!(mags.iter().all(|&m| m == 0.2));
    let total: f64 = csv_column(&out, "prob").iter().sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn every_preset_runs() {
    for name in PRESETS {
        let cfg: RunConfig = cli::preset(name).unwrap();
        let out = cli::run(&cfg).unwrap();
        assert!(out.warnings.is_empty(), "{name}: {:?}", out.warnings);
    }
    let printed = stdout(&qew(&["preset", "fiber-si3n4-1064"]));
    let cfg = RunConfig::from_json(&printed).unwrap();
    assert_eq!(cfg, cli::preset("fiber-si3n4-1064").unwrap());
}

#[test]
fn fiber_sweep_columns() {
    let out = stdout(&qew(&["fiber", "sweep", "--diameters-nm", "300,463,600"]));
    let header = out.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "diameter_nm,beta_per_nm,u,w,alpha_max,decay_nm,match_kV,Lc200_um,Lc300_um"
    );
    assert_eq!(csv_column(&out, "diameter_nm"), vec![300.0, 463.0, 600.0]);
}
