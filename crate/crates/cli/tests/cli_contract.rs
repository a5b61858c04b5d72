//! End-to-end checks of the installed binary: artifact files, exit
//! codes and consistency between subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use badbands::cube::HyperspectralCube;
use badbands::detector::sweep_cell_seed;
use badbands::envi::{save_cube, DataType, Interleave};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_badbands"))
        .args(args)
        .output()
        .expect("the binary should be runnable")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path_arg(p: &Path) -> String {
    p.display().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap())
        .unwrap_or_else(|e| panic!("'{}' is not valid JSON: {e}", path.display()))
}

fn figure1_header(dir: &Path) -> PathBuf {
    run_ok(&["simulate", "--figure1", "--out", &path_arg(dir)]);
    dir.join("cube.hdr")
}

#[test]
fn detect_writes_report_json_csv_and_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let hdr = figure1_header(tmp.path());
    let out = tmp.path().join("det");
    run_ok(&[
        "detect", "--input", &path_arg(&hdr), "--thres", "300", "--targets", "50",
        "--out", &path_arg(&out),
    ]);

    let report = read_json(&out.join("report.json"));
    assert_eq!(report["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["seed"], 42);
    assert_eq!(report["targets"], 50);
    assert_eq!(report["convention"], "norm-weighted");
    assert_eq!(report["input_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(report["mav"].as_array().unwrap().len(), 3);
    let cmd = report["reproduce_command"].as_str().unwrap();
    assert!(cmd.starts_with("badbands detect --input "));
    assert!(cmd.contains("--seed 42"));

    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "band,wavelength,mav,selected");
    assert_eq!(lines.len(), 4);

    let svg = fs::read_to_string(out.join("mav.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("</svg>"));
}

#[test]
fn the_formats_flag_limits_what_is_written() {
    let tmp = tempfile::tempdir().unwrap();
    let hdr = figure1_header(tmp.path());
    let out = tmp.path().join("det");
    run_ok(&[
        "detect", "--input", &path_arg(&hdr), "--thres", "300", "--targets", "50",
        "--formats", "json", "--out", &path_arg(&out),
    ]);
    assert!(out.join("report.json").is_file());
    assert!(!out.join("report.csv").exists());
    assert!(!out.join("mav.svg").exists());
}

#[test]
fn a_missing_header_exits_2_and_names_the_path() {
    let out = run(&["detect", "--input", "/no/such/scene.hdr", "--thres", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/scene.hdr"));
}

#[test]
fn a_threshold_between_the_mav_levels_selects_only_the_noise_band() {
    let tmp = tempfile::tempdir().unwrap();
    let hdr = figure1_header(tmp.path());
    let probe = tmp.path().join("probe");
    run_ok(&[
        "detect", "--input", &path_arg(&hdr), "--thres", "1e9", "--targets", "50",
        "--formats", "json", "--out", &path_arg(&probe),
    ]);
    let mav: Vec<f64> = read_json(&probe.join("report.json"))["mav"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(
        read_json(&probe.join("report.json"))["selected_bands"]
            .as_array()
            .unwrap()
            .len(),
        3
    );

    let mid = (mav[1] + mav[0].min(mav[2])) / 2.0;
    let out = tmp.path().join("det");
    run_ok(&[
        "detect", "--input", &path_arg(&hdr), "--thres", &mid.to_string(), "--targets", "50",
        "--formats", "json", "--out", &path_arg(&out),
    ]);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["selected_bands"], serde_json::json!([2]));
    assert_eq!(report["ranges"], serde_json::json!(["2"]));
}

#[test]
fn simulate_is_byte_identical_for_the_same_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        run_ok(&["simulate", "--figure1", "--seed", "9", "--out", &path_arg(dir)]);
    }
    for name in ["cube.hdr", "cube.dat", "truth.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn a_dead_band_spec_with_score_reaches_full_recall() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("spec.json");
    fs::write(
        &spec_path,
        r#"{
  "lines": 40,
  "samples": 40,
  "bands": 40,
  "seed": 11,
  "faults": [
    { "bands": "12-14", "kind": "dead", "value": 500.0 },
    { "bands": "33", "kind": "pure_noise", "noise_scale": 1.0 }
  ]
}"#,
    )
    .unwrap();
    let out = tmp.path().join("sim");
    run_ok(&[
        "simulate", "--spec", &path_arg(&spec_path), "--score", "--out", &path_arg(&out),
    ]);

    let truth = read_json(&out.join("truth.json"));
    assert_eq!(truth["truth"], serde_json::json!([12, 13, 14, 33]));
    assert_eq!(truth["generator"], "injected");
    assert_eq!(truth["spec"]["seed"], 11);

    let score = read_json(&out.join("score.json"));
    assert_eq!(score["score"]["recall"], 1.0);
    assert_eq!(score["score"]["precision"], 1.0);
    assert_eq!(score["selected_bands"], serde_json::json!([12, 13, 14, 33]));
    assert_eq!(score["threshold_source"], "gap");
}

#[test]
fn a_single_cell_sweep_reduces_to_a_detect_run() {
    let tmp = tempfile::tempdir().unwrap();
    let hdr = figure1_header(tmp.path());
    let sweep_out = tmp.path().join("sweep");
    run_ok(&[
        "sensitivity", "--input", &path_arg(&hdr), "--thres-list", "300", "--grid", "50",
        "--repeats", "1", "--seed", "7", "--out", &path_arg(&sweep_out),
    ]);
    let csv = fs::read_to_string(sweep_out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("M,thres,repeat,n_selected"));
    let cell = lines.next().unwrap();
    assert!(cell.starts_with("50,300,0,"));
    let swept: usize = cell.rsplit(',').next().unwrap().parse().unwrap();

    let det_out = tmp.path().join("det");
    run_ok(&[
        "detect", "--input", &path_arg(&hdr), "--thres", "300", "--targets", "50",
        "--seed", &sweep_cell_seed(7, 50, 0, 0).to_string(),
        "--formats", "json", "--out", &path_arg(&det_out),
    ]);
    let detected = read_json(&det_out.join("report.json"))["selected_bands"]
        .as_array()
        .unwrap()
        .len();
    assert_eq!(swept, detected);
}

#[test]
fn oversized_sweep_cells_are_skipped_without_aborting() {
    let tmp = tempfile::tempdir().unwrap();
    let hdr = figure1_header(tmp.path());
    let out = tmp.path().join("sweep");
    run_ok(&[
        "sensitivity", "--input", &path_arg(&hdr), "--thres-list", "300",
        "--grid", "50,5000", "--repeats", "1", "--out", &path_arg(&out),
    ]);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("50,300,0,") && !l.ends_with(',')));
    assert!(csv.lines().any(|l| l == "5000,300,0,"));
}

#[test]
fn inspect_stretches_each_band_and_pins_constant_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let cube = HyperspectralCube::new(
        2,
        3,
        vec![vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], vec![7.5; 6]],
    )
    .unwrap();
    let (hdr, _) = save_cube(&cube, tmp.path(), "mini", Interleave::Bsq, DataType::F64).unwrap();
    let out = tmp.path().join("img");
    run_ok(&[
        "inspect", "--input", &path_arg(&hdr), "--bands", "1-2", "--out", &path_arg(&out),
    ]);

    let band1 = fs::read(out.join("band_1.pgm")).unwrap();
    assert!(band1.starts_with(b"P5\n"));
    let pixels = &band1[band1.len() - 6..];
    assert_eq!(pixels.iter().min(), Some(&0));
    assert_eq!(pixels.iter().max(), Some(&255));

    let band2 = fs::read(out.join("band_2.pgm")).unwrap();
    assert!(band2[band2.len() - 6..].iter().all(|&b| b == 128));

    let bad = run(&["inspect", "--input", &path_arg(&hdr), "--bands", "5", "--out", &path_arg(&out)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn a_degenerate_background_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cube = HyperspectralCube::new(
        1,
        5,
        vec![
            vec![2.0, 3.0, 1.0, 2.5, 1.5],
            vec![-1.0, -3.0, 1.0, 0.0, -2.0],
        ],
    )
    .unwrap();
    let (hdr, _) = save_cube(&cube, tmp.path(), "bad", Interleave::Bsq, DataType::F64).unwrap();
    let out = run(&[
        "detect", "--input", &path_arg(&hdr), "--thres", "1", "--targets", "5",
        "--out", &path_arg(&tmp.path().join("det")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numeric"));
}

#[test]
fn an_invalid_spec_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let garbled = tmp.path().join("garbled.json");
    fs::write(&garbled, "{not json").unwrap();
    let out = run(&["simulate", "--spec", &path_arg(&garbled), "--out", &path_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));

    let overlapping = tmp.path().join("overlap.json");
    fs::write(
        &overlapping,
        r#"{"lines": 5, "samples": 5, "bands": 10, "seed": 1, "faults": [
            { "bands": "2-4", "kind": "pure_noise", "noise_scale": 1.0 },
            { "bands": "3", "kind": "dead", "value": 0.0 }
        ]}"#,
    )
    .unwrap();
    let out = run(&["simulate", "--spec", &path_arg(&overlapping), "--out", &path_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn the_threads_flag_does_not_change_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let hdr = figure1_header(tmp.path());
    let (a, b) = (tmp.path().join("t1"), tmp.path().join("t4"));
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        run_ok(&[
            "--threads", threads, "detect", "--input", &path_arg(&hdr), "--thres", "300",
            "--targets", "200", "--formats", "json", "--out", &path_arg(dir),
        ]);
    }
    assert_eq!(
        fs::read(a.join("report.json")).unwrap(),
        fs::read(b.join("report.json")).unwrap()
    );
}
