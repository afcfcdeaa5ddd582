//! Deterministic on-disk layout of an experiment result.
//!
//! * `result.json`: the full [`ExperimentResult`], schema version stamped;
//! * `traces.csv`: one row per λ with ξ, the barycenter, `G` and `m_H`;
//! * `scan.csv`: the stationary-scan grids, when the experiment ran any.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::experiment::ExperimentResult;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub result_json: PathBuf,
    pub traces_csv: PathBuf,
    pub scan_csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct TraceRow {
    lambda: f64,
    xi_1: Option<f64>,
    xi_2: Option<f64>,
    xi_3: Option<f64>,
    barycenter_1: Option<f64>,
    barycenter_2: Option<f64>,
    barycenter_3: Option<f64>,
    g: Option<f64>,
    hawking_from_g: Option<f64>,
    hawking_mass: Option<f64>,
    grad_norm: Option<f64>,
    classification: Option<String>,
}

#[derive(Serialize)]
struct ScanRow {
    scan: usize,
    lambda: f64,
    xi_1: f64,
    xi_2: f64,
    xi_3: f64,
    grad_1: f64,
    grad_2: f64,
    grad_3: f64,
    grad_norm: f64,
}

fn label<T: Serialize>(v: &T) -> Option<String> {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_owned))
}

/// Writes the report files into `dir`, creating it if needed.
pub fn emit_report(result: &ExperimentResult, dir: &Path) -> Result<ReportFiles> {
    fs::create_dir_all(dir)?;
    let result_json = dir.join("result.json");
    let mut text = serde_json::to_string_pretty(result)?;
    text.push('\n');
    fs::write(&result_json, text)?;

    let traces_csv = dir.join("traces.csv");
    let mut w = csv::Writer::from_path(&traces_csv)?;
    for rec in &result.records {
        let p = rec.point.as_ref();
        w.serialize(TraceRow {
            lambda: rec.lambda,
            xi_1: p.map(|p| p.xi[0]),
            xi_2: p.map(|p| p.xi[1]),
            xi_3: p.map(|p| p.xi[2]),
            barycenter_1: p.map(|p| p.barycenter[0]),
            barycenter_2: p.map(|p| p.barycenter[1]),
            barycenter_3: p.map(|p| p.barycenter[2]),
            g: rec.energy.map(|e| e.g),
            hawking_from_g: rec.hawking_from_g,
            hawking_mass: rec.hawking_mass,
            grad_norm: p.map(|p| p.grad_norm),
            classification: p.and_then(|p| label(&p.classification)),
        })?;
    }
    if result.records.is_empty() {
        // Keep the header so downstream tools see a consistent table.
        w.write_record([
            "lambda",
            "xi_1",
            "xi_2",
            "xi_3",
            "barycenter_1",
            "barycenter_2",
            "barycenter_3",
            "g",
            "hawking_from_g",
            "hawking_mass",
            "grad_norm",
            "classification",
        ])?;
    }
    w.flush()?;

    let scan_csv = if result.scans.is_empty() {
        None
    } else {
        let path = dir.join("scan.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for (i, scan) in result.scans.iter().enumerate() {
            for p in &scan.grid {
                w.serialize(ScanRow {
                    scan: i,
                    lambda: scan.lambda,
                    xi_1: p.xi[0],
                    xi_2: p.xi[1],
                    xi_3: p.xi[2],
                    grad_1: p.grad[0],
                    grad_2: p.grad[1],
                    grad_3: p.grad[2],
                    grad_norm: p.grad_norm,
                })?;
            }
        }
        w.flush()?;
        Some(path)
    };
    Ok(ReportFiles {
        result_json,
        traces_csv,
        scan_csv,
    })
}

/// Reads a `result.json` back.
pub fn load_result(path: &Path) -> Result<ExperimentResult> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, ExperimentId};
    use crate::experiment::run_experiment;

    #[test]
    fn e1_report_layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::preset(ExperimentId::E1);
        let result = run_experiment(&cfg).unwrap();
        let files = emit_report(&result, dir.path()).unwrap();
        assert!(files.scan_csv.is_none());
        let back = load_result(&files.result_json).unwrap();
        assert_eq!(back, result);
        assert_eq!(back.config, cfg);

        let mut rdr = csv::Reader::from_path(&files.traces_csv).unwrap();
        let headers = rdr.headers().unwrap().clone();
        let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            for c in ["barycenter_1", "barycenter_2", "barycenter_3"] {
                assert_eq!(row[col(c)].parse::<f64>().unwrap(), 0.0);
            }
            assert_eq!(&row[col("classification")], "minimum");
        }
    }
}
