mod common;

use std::path::PathBuf;

use common::{painworth, painworth_stdin, stdout, Server};
use painworth_core::demo;

fn demo_file(dir: &tempfile::TempDir) -> String {
    let path: PathBuf = dir.path().join("demo.json");
    std::fs::write(&path, demo::DEMO_JSON).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn evaluate_table_shows_subtotals() {
    let dir = tempfile::tempdir().unwrap();
    let out = painworth(&["evaluate", &demo_file(&dir), "--format", "table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("6'520 | 4'700 (11'220 in total)"), "{text}");
    assert!(text.contains("1'260 | 600 (1'860 in total)"), "{text}");
}

#[test]
fn evaluate_fee_and_ceiling_options() {
    let dir = tempfile::tempdir().unwrap();
    let file = demo_file(&dir);
    let out = painworth(&["evaluate", &file, "--share", "0.5", "--kind", "operational"]);
    assert!(stdout(&out).contains("Fee (revenue share 0.5):            5'610.00"));
    let out = painworth(&["evaluate", &file, "--share", "0.5"]);
    assert!(stdout(&out).contains("6'540.00"));
    let out = painworth(&["evaluate", &file, "--ceiling-basis", "customer-only"]);
    assert!(stdout(&out).contains("Price ceiling (customer side only):  7'780.00"));
}

#[test]
fn machine_output_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let file = demo_file(&dir);
    for format in ["json", "csv"] {
        let a = painworth(&["evaluate", &file, "--format", format]);
        let b = painworth(&["evaluate", &file, "--format", format]);
        assert_eq!(a.stdout, b.stdout);
        assert!(a.stderr.is_empty());
    }
}

#[test]
fn demo_pipes_into_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let from_file = painworth(&["evaluate", &demo_file(&dir), "--format", "json"]);
    let fixture = painworth(&["demo"]);
    assert_eq!(fixture.stdout, demo::DEMO_JSON.as_bytes());
    let piped = painworth_stdin(&["evaluate", "-", "--format", "json"], &fixture.stdout);
    assert_eq!(piped.stdout, from_file.stdout);
}

#[test]
fn csv_input_is_detected_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("demo.csv");
    std::fs::write(&path, demo::DEMO_CSV).unwrap();
    let out = painworth(&["evaluate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("13'080.00"));
    let out = painworth_stdin(&["validate", "-", "--input-format", "csv"], demo::DEMO_CSV.as_bytes());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn gate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let file = demo_file(&dir);
    let gate = |extra: &[&str]| {
        let mut args = vec!["gate", file.as_str(), "--value-target", "5000", "--cost-budget", "4000"];
        args.extend_from_slice(extra);
        painworth(&args)
    };
    let out = gate(&["--dev-cost", "0", "--annual-cost", "2000", "--amortization", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("Proceed -> AdvanceStage"));

    let out = gate(&["--kind", "structural", "--dev-cost", "0", "--annual-cost", "5000", "--amortization", "1"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stdout(&out).starts_with("Abandon -> Drop"));

    // structural v = 1'860 below target, cost within budget
    let out = gate(&["--kind", "structural", "--annual-cost", "1000"]);
    assert_eq!(out.status.code(), Some(3));
    // v = 13'080 meets target, cost 4'500 over budget
    let out = gate(&["--annual-cost", "4500"]);
    assert_eq!(out.status.code(), Some(4));
    // margin binding: 13'080 - 2'000 < 12'000
    let out = gate(&["--annual-cost", "2000", "--min-margin", "12000"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn usage_io_and_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let file = demo_file(&dir);
    let out = painworth(&["gate", &file, "--cost-budget", "4000"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--value-target"));

    let out = painworth(&["evaluate", &file, "--share", "0,5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = painworth(&["evaluate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let bad = demo::DEMO_JSON.replacen("\"0.6\"", "\"1.6\"", 1);
    let out = painworth_stdin(&["validate", "-"], bad.as_bytes());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("OmegaOutOfRange"), "{err}");
    assert!(out.stdout.is_empty());

    let out = painworth_stdin(&["validate", "-"], b"{ not json");
    assert_eq!(out.status.code(), Some(2));
    let out = painworth(&["evaluate", &file, "--share", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let file = demo_file(&dir);
    let out = painworth(&[
        "sweep", &file, "--path", "pain(2).line(customer).alleviation", "--from", "0", "--to", "1", "--steps", "11",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[6], "0.6,13080.00");

    // the same row equals a plain evaluation at that ω
    let json = stdout(&painworth(&["evaluate", &file, "--format", "json"]));
    assert!(json.contains("\"v_economic\": \"13080.00\""));

    for bad in [
        vec!["--path", "pain(9).line(customer).impact", "--from", "0", "--to", "1"],
        vec!["--path", "pain(2).line(customer).alleviation", "--from", "0", "--to", "2"],
        vec!["--path", "pain(2).line(customer).alleviation", "--from", "0", "--to", "1", "--steps", "1"],
        vec!["--path", "pain(2).customer", "--from", "0", "--to", "1"],
    ] {
        let mut args = vec!["sweep", file.as_str()];
        args.extend(bad);
        assert_eq!(painworth(&args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn breakeven_and_tornado() {
    let dir = tempfile::tempdir().unwrap();
    let file = demo_file(&dir);
    let out = painworth(&["breakeven", &file, "--cost", "6540.00"]);
    assert_eq!(stdout(&out), "0.5\n");
    let out = painworth(&["breakeven", &file, "--cost", "5610.00", "--kind", "operational"]);
    assert_eq!(stdout(&out), "0.5\n");
    let out = painworth(&["breakeven", &file, "--cost", "20000", "--kind", "operational"]);
    assert!(stdout(&out).starts_with("unreachable"));
    assert_eq!(out.status.code(), Some(0));

    let out = painworth(&["tornado", &file, "--rel", "0.2"]);
    let text = stdout(&out);
    assert!(text.lines().count() > 21, "header plus at least 21 rows");
    assert_eq!(text.lines().nth(1).unwrap(), "pain(3).line(provider).frequency,6,4.8,7.2,-840.00,840.00");
    assert_eq!(painworth(&["tornado", &file, "--rel", "0"]).status.code(), Some(1));
}

#[test]
fn serve_prints_port_and_answers() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    assert_ne!(server.port, 0);
    let (status, body) = server.request("GET", "/api/health", "");
    assert_eq!(status, 200);
    assert!(body.contains("ok"));
    let (status, _) = server.request("POST", "/api/portfolios", demo::DEMO_JSON);
    assert_eq!(status, 201);
    assert!(dir.path().read_dir().unwrap().count() >= 1);
}

#[test]
fn serve_needs_an_existing_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nonexistent");
    let out = painworth(&["serve", "--port", "0", "--data-dir", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = std::process::Command::new(common::BIN)
        .args(["serve", "--port", "0"])
        .env("PAINWORTH_DATA_DIR", &missing)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
