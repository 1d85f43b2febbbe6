//! Run reports: a per-iteration CSV and a key-value summary. The CSV
//! carries one row per fusion round with the worst pose motion of that
//! round in degrees and millimeters; `stage_seconds` sums the round's
//! fuse, postfilter, and refine times.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::{PipelineConfig, PipelineReport};

pub const REPORT_HEADER: &str =
    "iteration,points,merges,violations,removed,max_rot_delta_deg,max_trans_delta_mm,stage_seconds";

pub fn report_csv(report: &PipelineReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for it in &report.iterations {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            it.iteration,
            it.points,
            it.merges,
            it.violations,
            it.removed,
            it.max_rot_delta().to_degrees(),
            it.max_trans_delta() * 1e3,
            it.fuse_seconds + it.postfilter_seconds + it.refine_seconds,
        ));
    }
    out
}

pub fn write_report_csv(path: &Path, report: &PipelineReport) -> Result<()> {
    std::fs::write(path, report_csv(report)).map_err(|e| Error::io(path, e))
}

pub fn report_text(report: &PipelineReport, cfg: &PipelineConfig) -> String {
    let prefilter_removed: usize = report.prefilter.iter().map(|s| s.removed).sum();
    let mut out = String::new();
    out.push_str(&format!("views = {}\n", report.prefilter.len()));
    out.push_str(&format!("prefilter_removed = {prefilter_removed}\n"));
    out.push_str(&format!("prefilter_seconds = {:.3}\n", report.prefilter_seconds));
    out.push_str(&format!("iterations = {}\n", report.iterations.len()));
    match report.converged_early {
        Some(it) => out.push_str(&format!(
            "stop_reason = pose deltas fell below {} rad / {} m after iteration {it}\n",
            cfg.convergence_pose_eps.0, cfg.convergence_pose_eps.1
        )),
        None => out.push_str(&format!(
            "stop_reason = completed outer_iterations = {}\n",
            cfg.outer_iterations
        )),
    }
    if let Some(last) = report.iterations.last() {
        out.push_str(&format!("final_points = {}\n", last.points));
    }
    let failures: Vec<String> = report
        .iterations
        .iter()
        .flat_map(|it| {
            it.refine_errors
                .iter()
                .map(move |(map, why)| format!("iteration {} map {map}: {why}", it.iteration))
        })
        .collect();
    out.push_str(&format!("refine_failures = {}\n", failures.len()));
    for f in failures {
        out.push_str(&format!("refine_failure = {f}\n"));
    }
    out
}

pub fn write_report_text(path: &Path, report: &PipelineReport, cfg: &PipelineConfig) -> Result<()> {
    std::fs::write(path, report_text(report, cfg)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::IterationStats;

    fn demo_report() -> PipelineReport {
        let mut report = PipelineReport {
            prefilter: vec![Default::default(); 2],
            ..Default::default()
        };
        report.prefilter.get_mut(0).unwrap().removed = 12;
        report.iterations.push(IterationStats {
            iteration: 1,
            points: 1000,
            merges: 500,
            violations: 30,
            removed: 7,
            pose_deltas: vec![(0.5f64.to_radians(), 0.010), (0.0, 0.0)],
            refine_errors: vec![(1, "registration failed: matched fraction 0.0100".into())],
            fuse_seconds: 0.25,
            postfilter_seconds: 0.5,
            refine_seconds: 0.25,
        });
        report
    }

    #[test]
    fn csv_has_the_agreed_columns_and_units() {
        let csv = report_csv(&demo_report());
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), REPORT_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[..5], ["1", "1000", "500", "30", "7"]);
        assert!((row[5].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
        assert!((row[6].parse::<f64>().unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(row[7].parse::<f64>().unwrap(), 1.0);
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn summary_names_the_stop_reason() {
        let mut report = demo_report();
        let noise =
            crate::sensor::SensorNoiseModel::new(1.0, 1.0, 2e-3, 2e-3, 7e-4, 0.0, 8e-4).unwrap();
        let cfg = PipelineConfig::new(noise);
        let text = report_text(&report, &cfg);
        assert!(text.contains("views = 2"), "{text}");
        assert!(text.contains("prefilter_removed = 12"), "{text}");
        assert!(text.contains("stop_reason = completed outer_iterations = 6"), "{text}");
        assert!(text.contains("refine_failures = 1"), "{text}");
        assert!(text.contains("iteration 1 map 1: registration failed"), "{text}");

        report.converged_early = Some(1);
        let text = report_text(&report, &cfg);
        assert!(
            text.contains("stop_reason = pose deltas fell below 0.00001 rad / 0.00001 m after iteration 1"),
            "{text}"
        );
    }
}
