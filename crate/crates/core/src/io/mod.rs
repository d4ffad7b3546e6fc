//! File formats and the runs behind the command-line verbs.

pub mod cgrid;
pub mod manifest;
pub mod plot;
pub mod record;

use std::fmt;

use thiserror::Error;

pub use cgrid::{load_grid_field, save_grid_field, CgridError};
pub use manifest::{benchmark_manifest, parse_overrides, FieldSource, ManifestError, Override, RunManifest};
pub use plot::{emit_plot_data, field_samples, PlotError, PlotFiles};
pub use record::{RecordError, RouteRecord, RouteRow, RouteSummary};

use crate::analysis::PathMetrics;
use crate::field::{CurrentField, FieldError};
use crate::geometry::Point;
use crate::pipeline::{self, PipelineError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("start ({}, {}) is on land", .0.x1, .0.x2)]
    LandStart(Point),
    #[error("goal ({}, {}) is on land", .0.x1, .0.x2)]
    LandGoal(Point),
    #[error("endpoint: {0}")]
    Field(#[from] FieldError),
    #[error("unknown benchmark {0:?}, expected circular or four_vortices")]
    UnknownBenchmark(String),
}

fn check_endpoints<F: CurrentField + ?Sized>(field: &F, start: Point, goal: Point) -> Result<(), RunError> {
    for (p, land) in [(start, RunError::LandStart(start)), (goal, RunError::LandGoal(goal))] {
        match field.sample(p) {
            Err(e @ FieldError::OutOfDomain(_)) => return Err(e.into()),
            _ if field.is_land(p) => return Err(land),
            Err(e) => return Err(e.into()),
            Ok(_) => {}
        }
    }
    Ok(())
}

/// Measured straight or great-circle route between the manifest endpoints.
pub fn run_baseline(manifest: &RunManifest) -> Result<PathMetrics, RunError> {
    let field = manifest.build_field()?;
    check_endpoints(&field, manifest.start(), manifest.goal())?;
    Ok(pipeline::baseline(
        manifest.start(),
        manifest.goal(),
        manifest.speed,
        &field,
        manifest.space(),
        manifest.vessel.as_ref(),
    )?)
}

/// Runs the full pipeline for a manifest. Nothing is written to disk.
pub fn plan_route(manifest: &RunManifest) -> Result<RouteRecord, RunError> {
    let field = manifest.build_field()?;
    let (start, goal, space) = (manifest.start(), manifest.goal(), manifest.space());
    check_endpoints(&field, start, goal)?;
    let mut warnings = manifest.warnings.clone();
    for w in &warnings {
        log::warn!("{w}");
    }
    let baseline = match pipeline::baseline(start, goal, manifest.speed, &field, space, manifest.vessel.as_ref()) {
        Ok(m) => Some(m),
        Err(e) => {
            warnings.push(format!("no baseline: {e}"));
            None
        }
    };
    let result = pipeline::run(start, goal, &manifest.pipeline_config(), &field, space)?;
    if let Some(reason) = &result.smoothing_rejected {
        warnings.push(format!("smoothing discarded: {reason}"));
    }
    if !result.route.reached {
        warnings.push("goal not reached; the record holds the partial route".into());
    }
    Ok(record::build_record(
        &result,
        manifest.speed,
        &field,
        space,
        baseline,
        warnings,
        manifest.to_value(),
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub travel_time: f64,
}

/// A benchmark run: the comparison table and the route of record.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub name: String,
    pub rows: Vec<ReportRow>,
    pub record: RouteRecord,
}

impl fmt::Display for BenchmarkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.name)?;
        writeln!(f, "{:<12} {:>12}", "method", "travel time")?;
        for r in &self.rows {
            writeln!(f, "{:<12} {:>12.4}", r.method, r.travel_time)?;
        }
        Ok(())
    }
}

/// Resolves the manifest of a named synthetic benchmark.
pub fn benchmark_run_manifest(name: &str, overrides: &[Override]) -> Result<RunManifest, RunError> {
    let mut doc = benchmark_manifest(name).ok_or_else(|| RunError::UnknownBenchmark(name.to_string()))?;
    manifest::apply_overrides(&mut doc, overrides)?;
    Ok(RunManifest::from_value(doc)?)
}

/// Baseline, search and smoothed travel times for a synthetic benchmark.
pub fn run_benchmark(name: &str, overrides: &[Override]) -> Result<BenchmarkReport, RunError> {
    let manifest = benchmark_run_manifest(name, overrides)?;
    let record = plan_route(&manifest)?;
    let s = &record.summary;
    let mut rows = Vec::new();
    if let Some(b) = &s.baseline {
        rows.push(ReportRow {
            method: "Min. dist.".into(),
            travel_time: b.travel_time,
        });
    }
    rows.push(ReportRow {
        method: "HS".into(),
        travel_time: s.search.travel_time,
    });
    if let Some(sm) = s.smoothing.as_ref().filter(|sm| sm.kept) {
        rows.push(ReportRow {
            method: "HS + FMA".into(),
            travel_time: sm.travel_time,
        });
    }
    Ok(BenchmarkReport {
        name: name.to_string(),
        rows,
        record,
    })
}
