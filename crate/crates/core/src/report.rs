//! Output helpers: plot-data files, run manifests, and parsing of `d/T` lists.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// A labeled x/y series written as two whitespace-separated columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: &[f64], y: &[f64]) -> Self {
        Self {
            label: label.into(),
            points: x.iter().copied().zip(y.iter().copied()).collect(),
        }
    }
}

/// Writes `series` to `path`, sorted by x (ties keep input order).
pub fn emit_plot_data(series: &Series, path: &Path) -> Result<()> {
    if series.points.is_empty() {
        return Err(Error::Empty(format!(
            "series {:?} has no points",
            series.label
        )));
    }
    let mut points = series.points.clone();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut buf = Vec::new();
    writeln!(buf, "# {}", series.label).expect("write to vec");
    for (x, y) in points {
        writeln!(buf, "{x} {y}").expect("write to vec");
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Provenance written next to every output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command_line: Vec<String>,
    pub scenario_fingerprint: String,
    pub seeds: Vec<(String, u64)>,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn start(command_line: Vec<String>, scenario_fingerprint: String) -> Self {
        let now = unix_now();
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command_line,
            scenario_fingerprint,
            seeds: Vec::new(),
            started_unix_s: now,
            finished_unix_s: now,
            outputs: Vec::new(),
        }
    }

    pub fn write(mut self, dir: &Path) -> Result<PathBuf> {
        self.finished_unix_s = unix_now();
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Parses a comma-separated list of non-negative `d/T` ratios, e.g. `0.01,0.04,0.07`.
pub fn parse_dt_list(text: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v: f64 = s
                .parse()
                .map_err(|_| Error::invalid("dt-list", format!("{s:?} is not a number")))?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(Error::invalid(
                    "dt-list",
                    format!("{s} must be finite and non-negative"),
                ))
            }
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Empty("dt-list has no values".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dt_list() {
        assert_eq!(
            parse_dt_list("0.01, 0.04,0.07").unwrap(),
            vec![0.01, 0.04, 0.07]
        );
        assert!(parse_dt_list("").is_err());
        assert!(parse_dt_list("0.1,x").is_err());
        assert!(parse_dt_list("-0.1").is_err());
        assert!(parse_dt_list("inf").is_err());
    }

    #[test]
    fn plot_data_sorted_by_x() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.dat");
        emit_plot_data(
            &Series::new("mpr vs alpha", &[0.3, 0.1, 0.2], &[3.0, 1.0, 2.0]),
            &path,
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# mpr vs alpha\n0.1 1\n0.2 2\n0.3 3\n");
    }

    #[test]
    fn empty_series_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err =
            emit_plot_data(&Series::new("none", &[], &[]), &dir.path().join("x")).unwrap_err();
        assert!(matches!(err, Error::Empty(_)));
    }

    #[test]
    fn io_error_names_path() {
        let err = emit_plot_data(
            &Series::new("a", &[1.0], &[1.0]),
            Path::new("/nonexistent-dir/xyz/out.dat"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/xyz/out.dat"));
    }
}
