//! End-to-end tests of the attr binary: flag handling, output shapes,
//! worked-example values, and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn attr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Writes a one-instance lineage file and returns its path.
fn lineage_file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn skew_fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../banzhaf/fixtures/rst_skew")
}

fn records(doc: &Value) -> &Vec<Value> {
    doc["instances"][0]["records"].as_array().unwrap()
}

fn record_for<'a>(doc: &'a Value, var: &str) -> &'a Value {
    records(doc)
        .iter()
        .find(|r| r["variable"] == var)
        .unwrap_or_else(|| panic!("no record for {var}"))
}

#[test]
fn exact_reports_value_and_model_count() {
    let dir = tempfile::tempdir().unwrap();
    let path = lineage_file(&dir, "overlap.dnf", "(x & y) | (x & z) | u\n");
    let out = attr(&["exact", "--lineage", path.to_str().unwrap()]);
    let doc = json_stdout(&out);

    assert_eq!(doc["instances"][0]["status"], "ok");
    let x = record_for(&doc, "x");
    assert_eq!(x["banzhaf"], "3");
    assert_eq!(x["model_count"], "11");
    assert_eq!(x["certified"], true);
    assert_eq!(record_for(&doc, "u")["banzhaf"], "5");
    assert_eq!(doc["summary"]["instances"], 1);
    assert_eq!(doc["summary"]["success_rate"], 1.0);
}

#[test]
fn adaban_certifies_the_requested_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let path = lineage_file(&dir, "overlap.dnf", "(x & y) | (x & z) | u\n");
    let out = attr(&[
        "adaban",
        "--epsilon",
        "0.1",
        "--lineage",
        path.to_str().unwrap(),
        "--var",
        "x",
    ]);
    let doc = json_stdout(&out);
    let rec = record_for(&doc, "x");
    assert_eq!(rec["certified"], true);
    assert_eq!(rec["lower"], "3");
    assert_eq!(rec["upper"], "3");
    let cert = &rec["certified_interval"];
    assert_eq!(cert["lower_rational"], "27/10");
    assert_eq!(cert["upper_rational"], "33/10");
    assert!((cert["lower"].as_f64().unwrap() - 2.7).abs() < 1e-12);
    assert!((cert["upper"].as_f64().unwrap() - 3.3).abs() < 1e-12);
    assert_eq!(rec["epsilon"], "1/10");
}

#[test]
fn topk_picks_the_heavier_source_fact() {
    let fixture = skew_fixture();
    let out = attr(&[
        "topk",
        "--k",
        "1",
        "--db",
        fixture.to_str().unwrap(),
        "--query",
        fixture.join("query.dl").to_str().unwrap(),
    ]);
    let doc = json_stdout(&out);
    assert_eq!(doc["instances"][0]["certain"], true);
    let selected: Vec<&str> = records(&doc)
        .iter()
        .filter(|r| r["selected"] == true)
        .map(|r| r["variable"].as_str().unwrap())
        .collect();
    assert_eq!(selected, ["R(a1)"]);
}

#[test]
fn rank_orders_by_value_and_flags_ties() {
    let dir = tempfile::tempdir().unwrap();
    let path = lineage_file(&dir, "overlap.dnf", "(x & y) | (x & z) | u\n");
    let out = attr(&[
        "rank",
        "--epsilon",
        "0",
        "--lineage",
        path.to_str().unwrap(),
    ]);
    let doc = json_stdout(&out);
    assert_eq!(doc["instances"][0]["certain"], true);
    let order: Vec<(&str, u64, bool)> = records(&doc)
        .iter()
        .map(|r| {
            (
                r["variable"].as_str().unwrap(),
                r["rank"].as_u64().unwrap(),
                r["tied"].as_bool().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        order,
        [
            ("u", 1, false),
            ("x", 2, false),
            ("y", 3, true),
            ("z", 3, true)
        ]
    );
}

#[test]
fn mc_echoes_its_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let path = lineage_file(&dir, "overlap.dnf", "(x & y) | (x & z) | u\n");
    let run = |seed: &str| {
        let out = attr(&[
            "mc",
            "--lineage",
            path.to_str().unwrap(),
            "--seed",
            seed,
            "--samples-per-var",
            "2000",
        ]);
        json_stdout(&out)
    };
    let doc = run("7");
    let rec = record_for(&doc, "x");
    assert_eq!(rec["seed"], 7);
    assert_eq!(rec["samples_per_var"], 2000);
    assert_eq!(rec["rng"], "chacha8");
    let est = rec["estimate"].as_f64().unwrap();
    assert!((2.0..=4.0).contains(&est), "estimate {est} too far from 3");
    // Same seed, same estimates; the run is reproducible from the record.
    let estimates = |doc: &Value| -> Vec<String> {
        records(doc)
            .iter()
            .map(|r| r["estimate_rational"].as_str().unwrap().to_string())
            .collect()
    };
    assert_eq!(estimates(&doc), estimates(&run("7")));
}

#[test]
fn oracle_matches_exact_on_small_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = lineage_file(&dir, "overlap.dnf", "(x & y) | (x & z) | u\n");
    let out = attr(&["oracle", "--lineage", path.to_str().unwrap()]);
    let doc = json_stdout(&out);
    assert_eq!(record_for(&doc, "x")["banzhaf"], "3");
    assert_eq!(record_for(&doc, "x")["model_count"], "11");
}

#[test]
fn oracle_refuses_large_universes_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let clauses: Vec<String> = (0..26).map(|i| format!("v{i}")).collect();
    let path = lineage_file(&dir, "wide.dnf", &(clauses.join(" | ") + "\n"));
    let out = attr(&["oracle", "--lineage", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["instances"][0]["status"], "error");
    assert_eq!(doc["summary"]["succeeded"], 0);
}

#[test]
fn missing_required_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = lineage_file(&dir, "overlap.dnf", "(x & y)\n");
    let cases: [(&[&str], &str); 4] = [
        (&["mc", "--lineage"], "--seed"),
        (&["adaban", "--lineage"], "--epsilon"),
        (&["rank", "--lineage"], "--epsilon"),
        (&["topk", "--lineage"], "--k"),
    ];
    for (prefix, needle) in cases {
        let mut args = prefix.to_vec();
        args.push(path.to_str().unwrap());
        let out = attr(&args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(needle), "stderr {stderr:?} lacks {needle}");
    }
}

#[test]
fn unknown_variable_fails_the_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = lineage_file(&dir, "overlap.dnf", "(x & y)\n");
    let out = attr(&["exact", "--lineage", path.to_str().unwrap(), "--var", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["instances"][0]["status"], "error");
}

#[test]
fn csv_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = lineage_file(&dir, "overlap.dnf", "(x & y) | (x & z) | u\n");
    let out = attr(&[
        "exact",
        "--lineage",
        path.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row.len(), headers.len());
    }
    let banzhaf_idx = headers.iter().position(|h| h == "banzhaf").unwrap();
    let var_idx = headers.iter().position(|h| h == "variable").unwrap();
    let x_row = rows.iter().find(|r| &r[var_idx] == "x").unwrap();
    assert_eq!(&x_row[banzhaf_idx], "3");
}

#[test]
fn trace_and_dtree_artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = lineage_file(&dir, "pair.dnf", "(x & y) | (y & z)\n");
    let trace = dir.path().join("trace.csv");
    let dump = dir.path().join("trees.txt");
    let out = attr(&[
        "adaban",
        "--epsilon",
        "0",
        "--lineage",
        path.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
        "--dump-dtree",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let mut rdr = csv::Reader::from_path(&trace).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        &csv::StringRecord::from(vec![
            "instance",
            "variable",
            "step",
            "L",
            "U",
            "elapsed_ms"
        ])
    );
    assert!(rdr.records().count() >= 3, "one row per refinement step");

    let rendered = fs::read_to_string(&dump).unwrap();
    assert!(rendered.contains("== instance pair =="));
    assert!(rendered.contains('('), "nodes carry bound quads");
}

#[test]
fn lineage_subcommand_prints_the_function() {
    let fixture = skew_fixture();
    let out = attr(&[
        "lineage",
        "--db",
        fixture.to_str().unwrap(),
        "--query",
        fixture.join("query.dl").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("()\t"));
    assert!(text.contains("R(a1) & S(a1,b1) & T(a1,b1)"));
}

#[test]
fn bench_summarizes_each_algorithm_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("a.dnf"),
        "first\t(x & y) | (y & z)\nsecond\t(p & q) | r\n",
    )
    .unwrap();
    fs::write(dir.path().join("b.dnf"), "(m & n & o) | (m & p)\n").unwrap();
    let run = || {
        let out = attr(&[
            "bench",
            "--lineage",
            dir.path().to_str().unwrap(),
            "--algos",
            "exact,adaban,mc",
            "--seed",
            "3",
            "--samples-per-var",
            "500",
        ]);
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let text = run();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3, "one row per algorithm");
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let algos: Vec<&str> = rows.iter().map(|r| &r[col("algorithm")]).collect();
    assert_eq!(algos, ["exact", "adaban", "mc"]);
    for row in &rows {
        assert_eq!(&row[col("success_rate")], "1.0000");
        assert_eq!(&row[col("oracle_instances")], "3");
    }
    assert_eq!(&rows[0][col("mean_l1_error")], "0", "exact has zero error");

    // Accuracy columns are reproducible; timing columns are not compared.
    let again = run();
    let errors = |text: &str| -> Vec<String> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        rdr.records()
            .map(|r| r.unwrap()[col("mean_l1_error")].to_string())
            .collect()
    };
    assert_eq!(errors(&text), errors(&again));
}

#[test]
fn db_mode_emits_one_instance_per_answer_tuple() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("schema.json"),
        r#"{"relations":[
            {"name":"R","arity":1,"csv":"r.csv","endogenous":true},
            {"name":"S","arity":2,"csv":"s.csv","endogenous":true}
        ]}"#,
    )
    .unwrap();
    fs::write(dir.path().join("r.csv"), "1\n2\n").unwrap();
    fs::write(dir.path().join("s.csv"), "1,a\n1,b\n2,c\n").unwrap();
    let query = dir.path().join("q.dl");
    fs::write(&query, "Q(X) :- R(X), S(X,Y).\n").unwrap();
    let out = attr(&[
        "exact",
        "--db",
        dir.path().to_str().unwrap(),
        "--query",
        query.to_str().unwrap(),
    ]);
    let doc = json_stdout(&out);
    let labels: Vec<&str> = doc["instances"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["instance"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["(1)", "(2)"]);
    // R(1) gates the first tuple: two S-clauses, Banzhaf 3 over {R(1),Sa,Sb}.
    let first = &doc["instances"][0];
    let r1 = first["records"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["variable"] == "R(1)")
        .unwrap();
    assert_eq!(r1["banzhaf"], "3");
}
