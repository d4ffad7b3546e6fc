//! Route records: a `t,x1,x2,alpha` CSV plus a JSON summary beside it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::analysis::{segment_times, steering_heading, AnalysisError, PathMetrics};
use crate::field::CurrentField;
use crate::geometry::{Point, Space};
use crate::pipeline::PipelineResult;

pub const CSV_HEADER: &str = "t,x1,x2,alpha";

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Csv { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Summary {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("measuring the route of record: {0}")]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteRow {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    /// Integration time at the last retained state.
    pub integrated_time: f64,
    /// Measured time along the search polyline.
    pub travel_time: f64,
    pub path_length: f64,
    pub legs: usize,
    pub states: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSummary {
    pub kept: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rejected: Option<String>,
    pub sweeps: usize,
    pub action_trace_len: usize,
    pub action_first: f64,
    pub action_last: f64,
    pub residual_before: f64,
    pub residual_after: f64,
    pub travel_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSummary {
    /// `"hs+fma"` when the smoothed route is the route of record, `"hs"` otherwise.
    pub method: String,
    pub reached: bool,
    pub travel_time: f64,
    pub path_length: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fuel_kg: Option<f64>,
    pub crosses_land: bool,
    pub rows: usize,
    /// Row where each search leg begins.
    pub leg_boundaries: Vec<usize>,
    pub search: SearchSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub smoothing: Option<SmoothingSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baseline: Option<PathMetrics>,
    pub warnings: Vec<String>,
    /// Where the rows were written, when they were.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub route_csv: Option<PathBuf>,
    pub manifest: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteRecord {
    pub rows: Vec<RouteRow>,
    pub summary: RouteSummary,
}

fn cumulative(times: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    std::iter::once(0.0)
        .chain(times.iter().map(|t| {
            acc += t;
            acc
        }))
        .collect()
}

/// Rows of the route of record. Times are cumulative measured segment times,
/// so the last row carries the summary's travel time. Search rows keep the
/// integrated heading; smoothed rows get the heading that holds each segment.
fn record_rows<F: CurrentField + ?Sized>(
    result: &PipelineResult,
    speed: f64,
    field: &F,
    space: Space,
) -> Result<Vec<RouteRow>, AnalysisError> {
    let smoothed = result.smoothed.as_ref().filter(|_| result.smoothing_kept());
    let path: Vec<Point> = match smoothed {
        Some(s) => s.route.points.clone(),
        None => result.search_path.clone(),
    };
    let times = if path.len() >= 2 {
        cumulative(&segment_times(&path, speed, field, space)?.0)
    } else {
        vec![0.0; path.len()]
    };
    let alphas: Vec<f64> = match smoothed {
        Some(_) => {
            let mut a: Vec<f64> = path
                .windows(2)
                .map(|w| steering_heading(w[0], w[1], speed, field, space).unwrap_or(f64::NAN))
                .collect();
            // zero-length segments have no direction; borrow a neighbour's
            for k in 1..a.len() {
                if a[k].is_nan() {
                    a[k] = a[k - 1];
                }
            }
            for k in (0..a.len().saturating_sub(1)).rev() {
                if a[k].is_nan() {
                    a[k] = a[k + 1];
                }
            }
            let last = a.last().copied().unwrap_or(0.0);
            a.push(last);
            a
        }
        None => {
            let states = result.route.states();
            let mut a: Vec<f64> = states.iter().map(|s| s.alpha).collect();
            let last = a.last().copied().unwrap_or(0.0);
            a.resize(path.len(), last);
            a
        }
    };
    Ok(path
        .iter()
        .zip(times)
        .zip(alphas)
        .map(|((p, t), alpha)| RouteRow { t, x1: p.x1, x2: p.x2, alpha })
        .collect())
}

/// Turns a pipeline result into the route of record.
pub fn build_record<F: CurrentField + ?Sized>(
    result: &PipelineResult,
    speed: f64,
    field: &F,
    space: Space,
    baseline: Option<PathMetrics>,
    warnings: Vec<String>,
    manifest: Value,
) -> Result<RouteRecord, RecordError> {
    let rows = record_rows(result, speed, field, space)?;
    let states = result.route.states();
    let boundaries = result.route.leg_boundaries();
    let kept = result.smoothing_kept();
    let leg_boundaries = if kept {
        // smoothing resamples uniformly in search time
        let times = &result.search_times;
        let (t0, t1) = (times[0], times[times.len() - 1]);
        let segments = rows.len() - 1;
        boundaries
            .iter()
            .map(|&b| {
                let frac = if t1 > t0 { (times[b] - t0) / (t1 - t0) } else { 0.0 };
                ((frac * segments as f64).round() as usize).min(segments)
            })
            .collect()
    } else {
        boundaries
    };
    let metrics = result.final_metrics();
    let smoothing = match (&result.smoothed, &result.smoothed_metrics) {
        (Some(s), Some(m)) => Some(SmoothingSummary {
            kept,
            rejected: result.smoothing_rejected.clone(),
            sweeps: s.trace.sweeps,
            action_trace_len: s.trace.action.len(),
            action_first: s.trace.action.first().copied().unwrap_or(f64::NAN),
            action_last: s.trace.action.last().copied().unwrap_or(f64::NAN),
            residual_before: s.trace.residual_before,
            residual_after: s.trace.residual_after,
            travel_time: m.travel_time,
        }),
        _ => None,
    };
    let summary = RouteSummary {
        method: if kept { "hs+fma" } else { "hs" }.to_string(),
        reached: result.route.reached,
        travel_time: rows.last().map_or(0.0, |r| r.t),
        path_length: metrics.path_length,
        fuel_kg: metrics.fuel_kg,
        crosses_land: metrics.crosses_land,
        rows: rows.len(),
        leg_boundaries,
        search: SearchSummary {
            integrated_time: result.route.total_time,
            travel_time: result.search_metrics.travel_time,
            path_length: result.search_metrics.path_length,
            legs: result.route.legs.len(),
            states: states.len(),
        },
        smoothing,
        baseline,
        warnings,
        route_csv: None,
        manifest,
    };
    Ok(RouteRecord { rows, summary })
}

pub fn rows_to_csv(rows: &[RouteRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::with_capacity(80 * (rows.len() + 1)));
    w.write_record(CSV_HEADER.split(',')).expect("writing to memory");
    for r in rows {
        let cells = [r.t, r.x1, r.x2, r.alpha].map(|v| format!("{v:.16e}"));
        w.write_record(&cells).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("ascii output")
}

pub fn parse_rows(text: &str, path: &str) -> Result<Vec<RouteRow>, RecordError> {
    let fail = |line: usize, message: String| RecordError::Csv {
        path: path.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| fail(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(fail(1, format!("expected header {CSV_HEADER:?}")));
    }
    reader
        .deserialize::<RouteRow>()
        .map(|row| {
            row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                fail(line, e.to_string())
            })
        })
        .collect()
}

pub fn summary_to_string(summary: &RouteSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary values serialize");
    s.push('\n');
    s
}

/// `route.csv` -> `route.summary.json` in the same directory.
pub fn sibling_summary_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "route".into());
    csv.with_file_name(format!("{stem}.summary.json"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), RecordError> {
    let io = |source| RecordError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

impl RouteRecord {
    /// Writes the CSV and the summary; the summary notes where the CSV went.
    pub fn write(&mut self, csv: &Path, summary: &Path) -> Result<(), RecordError> {
        self.summary.route_csv = Some(csv.to_path_buf());
        write_file(csv, &rows_to_csv(&self.rows))?;
        write_file(summary, &summary_to_string(&self.summary))
    }

    /// Reads a record back from its summary file.
    pub fn read(summary_path: &Path) -> Result<Self, RecordError> {
        let io = |path: &Path| {
            let p = path.display().to_string();
            move |source| RecordError::Io { path: p, source }
        };
        let text = std::fs::read_to_string(summary_path).map_err(io(summary_path))?;
        let summary: RouteSummary = serde_json::from_str(&text).map_err(|source| RecordError::Summary {
            path: summary_path.display().to_string(),
            source,
        })?;
        let csv = summary.route_csv.clone().ok_or_else(|| RecordError::Csv {
            path: summary_path.display().to_string(),
            line: 0,
            message: "summary names no route CSV".into(),
        })?;
        let csv = if csv.is_relative() {
            summary_path.parent().unwrap_or(Path::new(".")).join(csv)
        } else {
            csv
        };
        let text = std::fs::read_to_string(&csv).map_err(io(&csv))?;
        let rows = parse_rows(&text, &csv.display().to_string())?;
        Ok(Self { rows, summary })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![
            RouteRow { t: 0.0, x1: 3.0, x2: 2.0, alpha: std::f64::consts::PI },
            RouteRow { t: 0.1 + 0.2, x1: -1e-300, x2: 1.0 / 3.0, alpha: -2.5 },
        ];
        let text = rows_to_csv(&rows);
        assert!(text.starts_with("t,x1,x2,alpha\n"));
        assert_eq!(parse_rows(&text, "mem").unwrap(), rows);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = parse_rows("t,x1,x2,alpha\n0,1,2,3\n0,1,x,3\n", "r.csv").unwrap_err();
        assert!(matches!(err, RecordError::Csv { line: 3, .. }));
        assert!(parse_rows("a,b\n", "r.csv").is_err());
    }

    #[test]
    fn summary_sits_beside_csv() {
        assert_eq!(sibling_summary_path(Path::new("/x/run.csv")), PathBuf::from("/x/run.summary.json"));
    }
}
