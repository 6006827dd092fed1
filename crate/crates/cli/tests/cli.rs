use std::path::PathBuf;
use std::process::Command;

use rankone_cli::report::{to_csv, to_json};
use rankone_cli::{run, RunConfig};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(configs_dir().join(name)).unwrap();
    RunConfig::from_toml(&text).unwrap()
}

const CONFIGS: [&str; 3] = ["example51.toml", "chacon.toml", "afp.toml"];

#[test]
fn json_is_byte_identical_across_runs_and_thread_counts() {
    for name in CONFIGS {
        let config = load(name);
        let a = to_json(&run(&config, Some(1)).unwrap());
        let b = to_json(&run(&config, Some(1)).unwrap());
        let c = to_json(&run(&config, Some(4)).unwrap());
        assert_eq!(a, b, "{name}");
        assert_eq!(a, c, "{name}");
    }
}

#[test]
fn toml_round_trip() {
    for name in CONFIGS {
        let config = load(name);
        assert_eq!(RunConfig::from_toml(&config.to_toml()).unwrap(), config, "{name}");
    }
}

#[test]
fn json_report_echoes_the_config() {
    let config = load("example51.toml");
    let json: serde_json::Value = serde_json::from_str(&to_json(&run(&config, None).unwrap())).unwrap();
    let echoed: RunConfig = serde_json::from_value(json["config"].clone()).unwrap();
    assert_eq!(echoed, config);
    assert_eq!(json["analyses"].as_array().unwrap().len(), config.analysis.len());
}

#[test]
fn empty_analysis_list_reports_only_the_config() {
    let config = RunConfig::from_toml("[spec]\npreset = \"chacon\"\n").unwrap();
    let report = run(&config, None).unwrap();
    assert!(report.records.is_empty());
    let json: serde_json::Value = serde_json::from_str(&to_json(&report)).unwrap();
    assert_eq!(json["analyses"], serde_json::json!([]));
    assert_eq!(json["config"]["spec"]["preset"], "chacon");
}

#[test]
fn csv_tables_have_fixed_header() {
    let report = run(&load("example51.toml"), None).unwrap();
    let tables = to_csv(&report);
    assert_eq!(tables.len(), 1);
    let (name, body) = &tables[0];
    assert_eq!(name, "discrepancy_5.csv");
    assert_eq!(body.lines().next().unwrap(), "k,m,n,best_j,delta_num,delta_den");
    assert!(body.lines().count() > 1);
}

#[test]
fn config_errors_name_the_field() {
    let bad = "[spec]\npreset = \"example51\"\n\n[[analysis]]\nkind = \"cyclic_factor\"\nk = 1\neta = \"1/10\"\nstart = 0\ndepth = 4\n";
    let err = RunConfig::from_toml(bad).and_then(|c| c.validate()).unwrap_err();
    assert_eq!(err.path, "analysis[0].k");
}

fn rankone(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rankone")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[spec]\npreset = \"nonesuch\"\n").unwrap();
    assert_eq!(rankone(&["analyze", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let heavy = dir.path().join("heavy.toml");
    std::fs::write(
        &heavy,
        "[spec]\npreset = \"example51\"\n\n[limits]\nsize_limit = 1000\n\n[[analysis]]\nkind = \"words\"\ndepth = 12\n",
    )
    .unwrap();
    assert_eq!(rankone(&["analyze", "--config", heavy.to_str().unwrap()]).status.code(), Some(3));

    let ok = configs_dir().join("afp.toml");
    assert_eq!(rankone(&["analyze", "--config", ok.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn word_subcommand_prints_plain_words() {
    let out = rankone(&["word", "--preset", "example51", "--depth", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["0", "001100", "0011000011001111001100001100"]);
}

#[test]
fn out_directory_receives_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = rankone(&[
        "heights",
        "--preset",
        "chacon",
        "--depth",
        "3",
        "--format",
        "json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["analyses"][0]["result"]["heights"], serde_json::json!(["1", "4", "13", "40"]));
}
