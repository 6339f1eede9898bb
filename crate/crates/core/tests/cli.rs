use std::fs;
use std::path::Path;
use std::process::Command;

use aerialscan::cli::{dispatch, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("aerialscan").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, EXIT_OK, "{args:?}: {err}");
    serde_json::from_str(&out).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let report = json(&["simulate", "--seed", "3", "--hours", "2", "--trace", path_str(&trace)]);
    let scans = report["scans_completed"].as_u64().unwrap();
    assert!((100..=116).contains(&scans), "{scans}");
    let csv = fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("time_ms,entity,transition,cause_event_id\n0,cell,start,\n"));
    assert_eq!(csv.matches(",scan_completed,").count() as u64, scans);
}

#[test]
fn simulate_is_reproducible_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cell.json");
    fs::write(&config, r#"{"lift_failure_prob": 0.1, "hopper_capacity": 20}"#).unwrap();
    let traces: Vec<String> = (0..2)
        .map(|i| {
            let t = dir.path().join(format!("t{i}.csv"));
            json(&["simulate", "--config", path_str(&config), "--seed", "9", "--hours", "3", "--trace", path_str(&t)]);
            fs::read_to_string(t).unwrap()
        })
        .collect();
    assert_eq!(traces[0], traces[1]);
    assert!(traces[0].contains("lift_failed"));
}

#[test]
fn simulate_requires_a_seed() {
    let (code, _, err) = run(&["simulate", "--hours", "1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--seed"));
}

#[test]
fn invalid_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"scan_seconds": -1}"#).unwrap();
    let (code, _, err) = run(&["simulate", "--config", path_str(&config), "--seed", "1", "--hours", "1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("scan_seconds"), "{err}");
    fs::write(&config, "{not json").unwrap();
    let (code, _, _) = run(&["simulate", "--config", path_str(&config), "--seed", "1", "--hours", "1"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn throughput_modes() {
    let human = json(&["throughput", "--mode", "human"]);
    assert_eq!(human["scans_per_worker_week"], 3500.0);
    let fleet = json(&["throughput", "--mode", "robotic", "--scanners", "14"]);
    assert_eq!(fleet["scans_per_day"], 9072.0);
    assert_eq!(fleet["scans_per_week"], 63504.0);
}

#[test]
fn ratio_of_default_reports() {
    let r = json(&["ratio"]);
    assert!((r["per_scanner"].as_f64().unwrap() - 2.592).abs() < 1e-3);
    assert!(r["per_worker"].as_f64().unwrap() > 30.0);
}

#[test]
fn ratio_accepts_saved_reports() {
    let dir = tempfile::tempdir().unwrap();
    let robotic = dir.path().join("r.json");
    let manual = dir.path().join("m.json");
    for (mode, path) in [("robotic", &robotic), ("human", &manual)] {
        let (code, out, _) = run(&["throughput", "--mode", mode, "--out", path_str(path)]);
        assert_eq!((code, out.as_str()), (EXIT_OK, ""));
    }
    let r = json(&["ratio", "--robotic", path_str(&robotic), "--manual", path_str(&manual)]);
    assert!((r["per_worker"].as_f64().unwrap() - 36.288).abs() < 1e-9);
}

#[test]
fn observed_flags_aggregated_days() {
    let u = json(&["observed", "--daily", "9090", "--weekly", "36084"]);
    assert_eq!(u["daily_at_or_above_theoretical"], true);
    assert!(!u["notes"].as_array().unwrap().is_empty());
}

#[test]
fn cost_subcommands() {
    let (code, out, _) = run(&["cost", "breakeven", "--a", "@robotic", "--b", "@manual"]);
    assert_eq!((code, out.as_str()), (EXIT_OK, "2363059\n"));
    let (_, out, _) = run(&["cost", "halving", "--a", "@robotic", "--b", "@manual"]);
    assert_eq!(out, "4947805\n");
    let w = json(&["cost", "weeks", "--scans", "2363059", "--capacity", "36288"]);
    assert_eq!(w["whole_weeks"], 66);
    let (code, out, _) = run(&["cost", "curve", "--a", "@robotic", "--b", "@manual", "--points", "5"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n,cost_per_scan_a,cost_per_scan_b");
    assert_eq!(lines.len(), 6);
    assert!(lines[5].starts_with("10000000,"));
}

#[test]
fn cost_reads_json_params() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    fs::write(&a, r#"{"name": "a", "fixed_total": 20000.0, "per_scan_variable": 0.3}"#).unwrap();
    let (code, out, err) = run(&["cost", "breakeven", "--a", "@manual", "--b", path_str(&a)]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out, "1\n");
    // Dearer up front and per scan: never catches up.
    let (code, _, err) = run(&["cost", "breakeven", "--a", path_str(&a), "--b", "@manual"]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(err.contains("never"), "{err}");
}

#[test]
fn parse_id_outputs_tagged_json() {
    let id = json(&["parse-id", "HSL/GH/64/0034"]);
    assert_eq!(id["variant"], "CommercialSurvey");
    assert_eq!(id["year_two_digit"], 64);
    let (code, _, err) = run(&["parse-id", "not-an-id"]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(err.contains("segment"), "{err}");
    let usaaf = json(&["parse-id", "--usaaf", "US7/LOC/123"]);
    assert_eq!(usaaf["variant"], "UsArmyAirForce");
}

#[test]
fn preserve_plan_and_sample() {
    let dir = tempfile::tempdir().unwrap();
    let condition = dir.path().join("c.json");
    fs::write(&condition, r#"{"mould": "active", "curling_or_creases": true}"#).unwrap();
    let plan = json(&["preserve", "plan", "--condition", path_str(&condition)]);
    assert_eq!(plan["routing"], "mould_isolated");
    assert_eq!(plan["steps"], serde_json::json!(["clean_mould", "humidify_and_press", "vacuum_pack"]));

    let boxes = dir.path().join("boxes.csv");
    let summary = json(&["preserve", "sample", "--n", "500", "--seed", "4", "--boxes", path_str(&boxes)]);
    assert_eq!(summary["boxes"], 500);
    assert!((summary["independent_any_intervention"].as_f64().unwrap() - 0.371).abs() < 1e-3);
    assert_eq!(fs::read_to_string(&boxes).unwrap().lines().count(), 501);
}

#[test]
fn photogrammetry_subcommands() {
    let g = json(&["photogrammetry", "ground", "--lp-per-mm", "10", "--scale", "42579"]);
    assert!((g["ground_resolved_m"].as_f64().unwrap() - 2.128_95).abs() < 1e-9);
    let g = json(&["photogrammetry", "ground", "--lp-per-mm", "10", "--focal-mm", "152.4", "--altitude-m", "6096"]);
    assert!((g["scale_denominator"].as_f64().unwrap() - 40_000.0).abs() < 1e-6);
    let p = json(&["photogrammetry", "pixels", "--lp-per-mm", "27", "--ppi", "1200"]);
    assert_eq!(p["verdict"], "undersampled");
    let p = json(&["photogrammetry", "pixels", "--lp-per-mm", "27", "--ppi", "1600"]);
    assert_eq!(p["verdict"], "within_optimal_band");
    let s = json(&["photogrammetry", "storage", "--images", "1700000", "--bytes-per-image", "250000000"]);
    assert_eq!(s["terabytes"], 425.0);
    let (code, _, _) = run(&["photogrammetry", "ground", "--lp-per-mm", "10"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn qc_render_analyze_crop() {
    let dir = tempfile::tempdir().unwrap();
    let strip = dir.path().join("strip.pgm");
    let (code, _, err) = run(&["qc", "render", "--ppi", "300", "--out", path_str(&strip)]);
    assert_eq!(code, EXIT_OK, "{err}");
    let report = json(&["qc", "analyze", path_str(&strip)]);
    assert_eq!(report["measured_scale_px"], 1800.0);
    assert_eq!(report["scale_verdict"], "pass");
    assert_eq!(report["wedge_monotone"], true);

    let scan = dir.path().join("scan.pgm");
    let cropped = dir.path().join("crop.pgm");
    run(&["qc", "render", "--ppi", "100", "--scan", "--out", path_str(&scan)]);
    let b = json(&["qc", "crop", path_str(&scan), "--out", path_str(&cropped)]);
    assert_eq!(b["width"], 900 + 2 * 20);
    let header = fs::read(&cropped).unwrap();
    assert!(header.starts_with(b"P5\n# ppi 100\n940 940\n255\n"));
}

#[test]
fn qc_analyze_directory_is_csv() {
    let dir = tempfile::tempdir().unwrap();
    for ppi in ["150", "200"] {
        let p = dir.path().join(format!("t{ppi}.pgm"));
        run(&["qc", "render", "--ppi", ppi, "--out", path_str(&p)]);
    }
    let (code, out, err) = run(&["qc", "analyze", path_str(dir.path())]);
    assert_eq!(code, EXIT_OK, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("t150.pgm,"));
}

#[test]
fn qc_noise_needs_seed() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("n.pgm");
    let (code, _, err) = run(&["qc", "render", "--ppi", "100", "--noise", "3", "--out", path_str(&p)]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--seed"));
}

#[test]
fn missing_input_file_is_reported() {
    let (code, _, err) = run(&["qc", "analyze", "/nonexistent/strip.pgm"]);
    assert_ne!(code, EXIT_OK);
    assert!(err.contains("/nonexistent/strip.pgm"), "{err}");
}

#[test]
fn binary_runs_end_to_end() {
    let exe = env!("CARGO_BIN_EXE_aerialscan");
    let out = Command::new(exe)
        .args(["cost", "breakeven", "--a", "@robotic", "--b", "@manual"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "2363059\n");

    let bad = Command::new(exe).arg("frobnicate").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));

    let help = Command::new(exe).arg("--help").output().unwrap();
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("simulate"));
}

#[test]
fn negative_correlation_is_accepted() {
    let base = json(&["preserve", "sample", "--n", "20000", "--seed", "0"]);
    let neg = json(&["preserve", "sample", "--n", "20000", "--seed", "0", "--rho", "-0.1"]);
    let any = |v: &Value| v["sampled"]["any_intervention"].as_f64().unwrap();
    assert!(any(&neg) > any(&base), "{} vs {}", any(&neg), any(&base));
    let (code, _, err) = run(&["qc", "render", "--ppi", "100", "--scale-error", "-0.002", "--out", "/dev/null"]);
    assert_eq!(code, EXIT_OK, "{err}");
}
