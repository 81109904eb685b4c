//! Evaluation reports on disk: `.json` for machines, anything else as
//! `key=value` lines.

use std::path::Path;

use crate::metrics::EvalReport;

use super::{read_text, write_atomic, IoError, Result};

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn report_to_json(report: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_report(report: &EvalReport, path: &Path) -> Result<()> {
    let body = if is_json(path) {
        report_to_json(report)
    } else {
        report.to_key_values()
    };
    write_atomic(path, body.as_bytes())
}

/// Reads a JSON report.
pub fn read_report(path: &Path) -> Result<EvalReport> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::metrics::{evaluate, EvalSettings, TrackRecord};
    use crate::tracks::Observation;

    fn report() -> EvalReport {
        let o = |x: f64, v: bool| Observation::new(Point::new(x, 0.0), v);
        let rec = TrackRecord {
            query: Point::new(0.0, 0.0),
            predicted: vec![o(0.0, true), o(3.0, true), o(0.0, false)],
            truth: Some(vec![o(0.0, true), o(0.0, true), o(0.0, false)]),
        };
        evaluate(&[rec], &EvalSettings::native()).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_report(&report(), &path).unwrap();
        assert_eq!(read_report(&path).unwrap(), report());
    }

    #[test]
    fn text_report() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.txt");
        write_report(&report(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().any(|l| l.starts_with("delta_avg=")));
        assert!(text.contains("precision=1\n"));
    }
}
