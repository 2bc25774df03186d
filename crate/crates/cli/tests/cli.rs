use std::process::{Command, Output};

fn theon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_theon")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exact_edge_density() {
    let o = theon(&["density", "--theon", "qr_graph", "--k", "2", "--structure", "edge", "--backend", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1/2");
}

#[test]
fn twist_matches_qr() {
    let o =
        theon(&["equiv", "--a", "twist_graph", "--b", "qr_graph", "--n", "3", "--samples", "100000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("equivalent (p="));
}

#[test]
fn failed_verdict_exits_one() {
    let o = theon(&["equiv", "--a", "bipartite_graph", "--b", "qr_graph", "--n", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("not equivalent (exact, tv=1/2)"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["frobnicate"],
        vec!["density", "--theon", "no_such_theon", "--structure", "edge"],
        vec!["sample", "--theon", "qr_graph", "--n", "3"],
        vec!["density", "--theon", "qr_graph", "--structure", "pentagon", "--backend", "exact"],
        vec!["table", "--theon", "qr_graph", "--backend", "fast"],
    ] {
        let o = theon(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["gallery", "sample", "density", "table", "equiv", "realize", "quasitest", "suite"] {
        let o = theon(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn outputs_do_not_depend_on_workers() {
    let run = |w: &str| {
        let o = theon(&[
            "sample",
            "--theon",
            "qr_tournament_0",
            "--n",
            "5",
            "--count",
            "50",
            "--seed",
            "11",
            "--workers",
            w,
        ]);
        assert!(o.status.success());
        o.stdout
    };
    assert_eq!(run("1"), run("4"));
    let table = |w: &str| {
        theon(&["table", "--theon", "twist_graph", "--n", "3", "--samples", "20000", "--seed", "5", "--workers", w])
            .stdout
    };
    assert_eq!(table("1"), table("3"));
}

#[test]
fn samples_are_json_lines() {
    let o = theon(&["sample", "--theon", "kqrO_1theon", "--k", "3", "--n", "4", "--count", "3", "--seed", "2"]);
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 3);
    for l in lines {
        let v: serde_json::Value = serde_json::from_str(&l).unwrap();
        // one oriented tuple per 3-set of 4 vertices
        assert_eq!(v["relations"]["P"].as_array().unwrap().len(), 4);
    }
}

#[test]
fn exact_table_csv_sums_to_one() {
    let o = theon(&["table", "--theon", "kqrO_1theon", "--k", "2", "--n", "3"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("structure-id,structure-json,value,ci-low,ci-high,exact"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.ends_with(",1/8,0.125,0.125,true")));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("out.json");
    std::fs::write(
        &cfg,
        "n = 2\nbackend = \"exact\"\n\n[theon.coupling.left.gallery]\nname = \"qr_graph\"\n\n[theon.coupling.right.gallery]\nname = \"kqrO_1theon\"\nk = 2\n",
    )
    .unwrap();
    let o = theon(&["table", "--config", cfg.to_str().unwrap(), "--n", "3", "--json", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["n"], 3);
    assert_eq!(v["exact"], true);
    // 8 graphs times 8 tournaments, uniform
    assert_eq!(v["rows"].as_array().unwrap().len(), 64);
    assert_eq!(v["rows"][0]["value"], "1/64");
}

#[test]
fn quasitest_report_schema() {
    let o = theon(&[
        "quasitest",
        "--theon",
        "kqrO_1theon",
        "--k",
        "2",
        "--property",
        "ucouple",
        "--n",
        "3",
        "--trials",
        "20000",
        "--seed",
        "4",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["property", "params", "statistic", "p_value", "verdict", "witness"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["verdict"], "consistent");
}

#[test]
fn realize_both_modes_verify() {
    let o = theon(&[
        "realize",
        "--theon",
        "kqrO_1theon",
        "--k",
        "3",
        "--mode",
        "strip-orders",
        "--verify",
        "--trials",
        "2000",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("equivalent: true"));
    assert!(stdout(&o).contains("roundtrip: true"));
    let o = theon(&[
        "realize",
        "--theon",
        "kqrO_1theon",
        "--k",
        "3",
        "--mode",
        "strip-orders",
        "--verify",
        "roundtrip,rank",
        "--trials",
        "500",
        "--seed",
        "1",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["checks"]["roundtrip"], true);
    assert!(v["checks"].get("equivalent").is_none());
    let o =
        theon(&["realize", "--theon", "qr_graph", "--mode", "strip-orders", "--verify", "agreement", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = theon(&[
        "realize",
        "--theon",
        "kqrO_1theon",
        "--k",
        "2",
        "--mode",
        "simulate-orders",
        "--verify",
        "--trials",
        "5000",
        "--seed",
        "1",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["checks"]["agreement"].as_f64().unwrap() >= 0.999);
}

#[test]
fn suite_runs_end_to_end() {
    let o = theon(&["suite", "--seed", "1", "--trials", "5000", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 8);
    assert_eq!(o.status.code(), Some(if v["passed"] == true { 0 } else { 1 }));
    let again = theon(&["suite", "--seed", "1", "--trials", "5000", "--json"]);
    assert_eq!(o.stdout, again.stdout);
}
