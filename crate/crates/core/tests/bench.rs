mod common;

use common::data_dir;
use parest::bench::{run_suite, Suite};
use std::process::Command;

#[derive(serde::Deserialize)]
struct Row {
    scenario: String,
    chart: String,
    converged: u8,
    iterations: usize,
    cost: f64,
    traj_err: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (mean, (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

#[test]
fn smoke_suite_records_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let suite_path = data_dir().join("suites/smoke.json");
    let out = Command::new(env!("CARGO_BIN_EXE_parest"))
        .args(["bench", suite_path.to_str().unwrap(), "--jobs", "2", "--out"])
        .arg(dir.path())
        .env("PAREST_LOG", "error")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["records.csv", "timings.csv", "summary.txt"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }

    let text = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    let rows: Vec<Row> = csv::Reader::from_reader(text.as_bytes()).deserialize().map(Result::unwrap).collect();
    // one scenario × two charts × three seeds
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.scenario == "lift_payload"));

    let report = run_suite(&Suite::from_file(&suite_path).unwrap(), 1).unwrap();
    assert_eq!(report.records_csv(), text);

    let summary = report.summary();
    assert_eq!(summary.len(), 2);
    for cell in &summary {
        let ok: Vec<&Row> = rows.iter().filter(|r| r.chart == cell.chart && r.converged == 1).collect();
        assert_eq!(cell.runs, 3);
        assert_eq!(cell.converged, ok.len());
        let check = |got: Option<parest::bench::MeanStd>, xs: Vec<f64>| match got {
            Some(m) => {
                let (mean, std) = mean_std(&xs);
                assert!((m.mean - mean).abs() <= 1e-12 * (1.0 + mean.abs()), "{} vs {mean}", m.mean);
                assert!((m.std - std).abs() <= 1e-12 * (1.0 + std.abs()), "{} vs {std}", m.std);
            }
            None => assert!(xs.is_empty()),
        };
        check(cell.iterations, ok.iter().map(|r| r.iterations as f64).collect());
        check(cell.cost, ok.iter().map(|r| r.cost).collect());
        check(cell.traj_err, ok.iter().map(|r| r.traj_err).collect());
    }
}

#[test]
fn suite_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name": "bad", "scenarios": [], "chart": ["expeig"]}"#).unwrap();
    assert!(Suite::from_file(&path).is_err());
}
