use std::path::{Path, PathBuf};
use std::process::Command;

use gooddeal_cli::output::CURVES;
use gooddeal_cli::{csv_string, emit_plot_data, run_scenario, ScenarioConfig};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
}

fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_path(&scenario_path(name)).unwrap()
}

fn gooddeal(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gooddeal"))
        .args(args)
        .output()
        .unwrap()
}

fn write_json(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn figure1_rows() {
    let out = run_scenario(&scenario("figure1")).unwrap();
    assert_eq!(out.rows.len(), 34);
    for (n, r) in out.rows.iter().enumerate() {
        assert_eq!(r.sweep_value, 60.0 + 5.0 * (n / 2) as f64);
        assert_eq!(r.regime, 1 + n % 2);
        assert!(r.lower <= r.mmm + 1e-6 && r.mmm <= r.upper + 1e-6, "{r:?}");
    }
    let text = csv_string(&out.rows);
    assert!(text.starts_with("sweep_value,regime,lower,mmm,upper\n"));
    assert_eq!(text.lines().count(), 35);
    assert!(!text.contains('\r'));
}

#[test]
fn figure1_plot_files() {
    let rows = run_scenario(&scenario("figure1")).unwrap().rows;
    let dir = tempfile::tempdir().unwrap();
    let files = emit_plot_data(&rows, dir.path()).unwrap();
    assert_eq!(files.len(), 6);
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        assert_eq!(text.lines().count(), 18);
    }
    let names: Vec<String> = files
        .iter()
        .map(|f| f.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names[0], "regime1_lower.dat");
    assert_eq!(names[5], "regime2_upper.dat");
}

#[test]
fn figure2_lower_series_is_flat_in_regime_one() {
    let rows = run_scenario(&scenario("figure2")).unwrap().rows;
    let dir = tempfile::tempdir().unwrap();
    emit_plot_data(&rows, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("regime1_lower.dat")).unwrap();
    let points: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split_whitespace().map(|t| t.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .filter(|(b, _)| *b >= 1.2)
        .collect();
    assert_eq!(points.len(), 5);
    assert!(points.iter().all(|p| (p.1 - points[0].1).abs() <= 1e-4));
}

#[test]
fn table2_summary_and_layout() {
    let out = run_scenario(&scenario("table2")).unwrap();
    assert_eq!(out.rows.len(), 36);
    let holding: Vec<String> = out
        .summary
        .models
        .iter()
        .flat_map(|m| m.holding_times.iter().map(|t| format!("{t:.3}")))
        .collect();
    assert_eq!(
        holding,
        ["2.000", "0.200", "3.000", "0.167", "1.500", "0.167"]
    );
    let text = csv_string(&out.rows);
    assert!(text.starts_with("model,sweep_value,regime,lower,mmm,upper\nModel 1,1.160000,1,"));
    let summary = out.summary.to_string();
    assert!(summary.contains("B0 = 1.159763"));
    assert!(summary.contains("policy iteration"));

    let dir = tempfile::tempdir().unwrap();
    assert_eq!(emit_plot_data(&out.rows, dir.path()).unwrap().len(), 18);
    for curve in CURVES {
        assert!(dir
            .path()
            .join(format!("model_2_regime2_{curve}.dat"))
            .exists());
    }
}

#[test]
fn refined_grid_stays_within_envelope() {
    let mut cfg = scenario("figure1");
    let coarse = run_scenario(&cfg).unwrap().rows;
    cfg.grid.dt /= 2.0;
    cfg.grid.ds /= 2.0;
    let fine = run_scenario(&cfg).unwrap().rows;
    for (a, b) in coarse.iter().zip(&fine) {
        for (x, y) in [(a.lower, b.lower), (a.mmm, b.mmm), (a.upper, b.upper)] {
            assert!((x - y).abs() < 0.02, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn binary_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let config = scenario_path("figure2");
    for target in [&a, &b] {
        let out = gooddeal(&[
            "--config",
            config.to_str().unwrap(),
            "--output",
            target.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(text).unwrap().lines().count(), 13);
}

#[test]
fn binary_summary_and_plot_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config = scenario_path("figure1");
    let plots = dir.path().join("plots");
    let out = gooddeal(&[
        "--config",
        config.to_str().unwrap(),
        "--output",
        "-",
        "--summary",
        "--plot-dir",
        plots.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 35);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("h = -0.750000") && stderr.contains("h = 1.076923"),
        "{stderr}"
    );
    assert_eq!(std::fs::read_dir(plots).unwrap().count(), 6);
}

#[test]
fn check_flag_does_not_solve() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("never.csv");
    let config = scenario_path("table2");
    let out = gooddeal(&[
        "--config",
        config.to_str().unwrap(),
        "--check",
        "--output",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("B0 = 1.159763"));
    assert!(stdout.contains("mean holding time = 3.000"));
    assert!(!target.exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(scenario_path("figure1")).unwrap();

    let broken = write_json(
        dir.path(),
        "broken.json",
        &base.replace("\"strike\"", "\"strik\""),
    );
    let out = gooddeal(&["--config", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line") && msg.contains("strik"), "{msg}");

    let low = write_json(
        dir.path(),
        "low.json",
        &base.replace("\"bound\": 1.2", "\"bound\": 1.15"),
    );
    let out = gooddeal(&["--config", low.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("1.15") && msg.contains("1.159763"), "{msg}");

    let missing = dir.path().join("missing.json");
    assert_eq!(
        gooddeal(&["--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}
