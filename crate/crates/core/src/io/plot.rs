//! Field samples and route polylines for external plotting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::manifest::{ManifestError, RunManifest};
use super::record::{RecordError, RouteRecord};
use crate::field::{CurrentField, FieldError};
use crate::geometry::Point;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("bounding box corner ({}, {}) is outside the field", .0.x1, .0.x2)]
    OutOfDomain(Point),
    #[error("bad sampling request: {0}")]
    BadRequest(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// `[x1_min, x1_max, x2_min, x2_max]`.
pub type Bbox = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRow {
    pub x1: f64,
    pub x2: f64,
    pub w1: f64,
    pub w2: f64,
    pub land: bool,
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Samples `field` on a regular lattice over `bbox`, x1 varying fastest.
/// Land nodes get zero current and the land flag.
pub fn field_samples<F: CurrentField + ?Sized>(field: &F, bbox: Bbox, resolution: f64) -> Result<Vec<FieldRow>, PlotError> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(PlotError::BadRequest(format!("resolution must be positive, got {resolution}")));
    }
    let [a1, b1, a2, b2] = bbox;
    if !(bbox.iter().all(|v| v.is_finite()) && a1 <= b1 && a2 <= b2) {
        return Err(PlotError::BadRequest(format!("bad bounding box {bbox:?}")));
    }
    for corner in [Point::new(a1, a2), Point::new(b1, a2), Point::new(a1, b2), Point::new(b1, b2)] {
        if let Err(FieldError::OutOfDomain(p)) = field.sample(corner) {
            return Err(PlotError::OutOfDomain(p));
        }
    }
    let (xs, ys) = (axis(a1, b1, resolution), axis(a2, b2, resolution));
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &x2 in &ys {
        for &x1 in &xs {
            let p = Point::new(x1, x2);
            let land = field.is_land(p);
            let w = if land { None } else { field.sample(p).ok() };
            out.push(FieldRow {
                x1,
                x2,
                w1: w.map_or(0.0, |w| w.w1),
                w2: w.map_or(0.0, |w| w.w2),
                land: land || w.is_none(),
            });
        }
    }
    Ok(out)
}

pub fn field_rows_to_csv(rows: &[FieldRow]) -> String {
    let mut out = String::from("x1,x2,w1,w2,land\n");
    for r in rows {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{}", r.x1, r.x2, r.w1, r.w2, u8::from(r.land)).expect("writing to a String");
    }
    out
}

/// Route bounding box grown by 10% of its larger side on every edge.
pub fn padded_bbox(points: &[Point]) -> Bbox {
    let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for p in points {
        b[0] = b[0].min(p.x1);
        b[1] = b[1].max(p.x1);
        b[2] = b[2].min(p.x2);
        b[3] = b[3].max(p.x2);
    }
    let pad = 0.1 * (b[1] - b[0]).max(b[3] - b[2]).max(1e-9);
    [b[0] - pad, b[1] + pad, b[2] - pad, b[3] + pad]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub field_csv: PathBuf,
    pub route_csv: PathBuf,
    pub samples: usize,
    pub route_rows: usize,
}

fn write(path: &Path, text: &str) -> Result<(), PlotError> {
    std::fs::write(path, text).map_err(|source| PlotError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `<stem>.field.csv` and `<stem>.track.csv` next to the record's
/// summary (or into `out_dir`). Without a bounding box the padded route box
/// is used, clipped to the field domain for gridded fields; the default
/// resolution gives about 60 samples along the longer side.
pub fn emit_plot_data(
    summary_path: &Path,
    bbox: Option<Bbox>,
    resolution: Option<f64>,
    out_dir: Option<&Path>,
) -> Result<PlotFiles, PlotError> {
    let record = RouteRecord::read(summary_path)?;
    let manifest = RunManifest::from_value(record.summary.manifest.clone())?;
    let field = manifest.build_field()?;
    let points: Vec<Point> = record.rows.iter().map(|r| Point::new(r.x1, r.x2)).collect();
    let bbox = match bbox {
        Some(b) => b,
        None => {
            let mut b = padded_bbox(&points);
            if let super::FieldSource::Grid(g) = &field {
                let (x1, x2) = (g.x1_axis(), g.x2_axis());
                b = [
                    b[0].max(x1[0]),
                    b[1].min(x1[x1.len() - 1]),
                    b[2].max(x2[0]),
                    b[3].min(x2[x2.len() - 1]),
                ];
            }
            b
        }
    };
    let resolution = resolution.unwrap_or_else(|| (bbox[1] - bbox[0]).max(bbox[3] - bbox[2]).max(1e-9) / 60.0);
    let samples = field_samples(&field, bbox, resolution)?;

    let name = summary_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name
        .strip_suffix(".summary.json")
        .or_else(|| name.strip_suffix(".json"))
        .unwrap_or(&name)
        .to_string();
    let dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => summary_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&dir).map_err(|source| PlotError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let field_csv = dir.join(format!("{stem}.field.csv"));
    let route_csv = dir.join(format!("{stem}.track.csv"));
    write(&field_csv, &field_rows_to_csv(&samples))?;
    let mut track = String::from("x1,x2\n");
    for p in &points {
        writeln!(track, "{:.16e},{:.16e}", p.x1, p.x2).expect("writing to a String");
    }
    write(&route_csv, &track)?;
    Ok(PlotFiles {
        field_csv,
        route_csv,
        samples: samples.len(),
        route_rows: points.len(),
    })
}
