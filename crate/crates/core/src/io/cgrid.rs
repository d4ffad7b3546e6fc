//! `cgrid-v1`: gridded currents as one JSON document.
//!
//! ```json
//! {"format": "cgrid-v1", "space": "euclidean",
//!  "x1_axis": [0, 1], "x2_axis": [0, 1],
//!  "u": [[0.1, 0.2], [null, 0.0]], "v": [[0, 0], [null, 0]]}
//! ```
//!
//! `u` and `v` are indexed `[x2][x1]`; `null` in both marks a land node.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{GridField, GridFieldError};
use crate::geometry::{Space, SphereParams};

pub const FORMAT: &str = "cgrid-v1";

#[derive(Debug, Error)]
pub enum CgridError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported format tag {0:?}, expected \"cgrid-v1\"")]
    Format(String),
    #[error("unknown space {0:?}, expected \"euclidean\" or \"spherical\"")]
    Space(String),
    #[error("{what}: got {got}, expected {expected}")]
    ShapeMismatch { what: String, got: usize, expected: usize },
    #[error("{axis} is not strictly increasing at index {index}")]
    NonMonotonicAxis { axis: &'static str, index: usize },
    #[error("node ({i1}, {i2}) is null in only one of u and v")]
    PartialLand { i1: usize, i2: usize },
    #[error(transparent)]
    Grid(GridFieldError),
}

impl From<GridFieldError> for CgridError {
    fn from(e: GridFieldError) -> Self {
        match e {
            GridFieldError::NonMonotonicAxis { axis, index } => CgridError::NonMonotonicAxis { axis, index },
            GridFieldError::ShapeMismatch { what, got, expected } => CgridError::ShapeMismatch {
                what: what.to_string(),
                got,
                expected,
            },
            other => CgridError::Grid(other),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    space: String,
    x1_axis: Vec<f64>,
    x2_axis: Vec<f64>,
    u: Vec<Vec<Option<f64>>>,
    v: Vec<Vec<Option<f64>>>,
}

fn space_tag(space: Space) -> &'static str {
    match space {
        Space::Euclidean => "euclidean",
        Space::Spherical(_) => "spherical",
    }
}

pub fn parse_grid_field(text: &str) -> Result<GridField, CgridError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| CgridError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.format != FORMAT {
        return Err(CgridError::Format(doc.format));
    }
    let space = match doc.space.as_str() {
        "euclidean" => Space::Euclidean,
        "spherical" => Space::Spherical(SphereParams::default()),
        _ => return Err(CgridError::Space(doc.space)),
    };
    let (n1, n2) = (doc.x1_axis.len(), doc.x2_axis.len());
    let mut u = Vec::with_capacity(n1 * n2);
    let mut v = Vec::with_capacity(n1 * n2);
    let mut land = Vec::with_capacity(n1 * n2);
    for (name, rows) in [("u", &doc.u), ("v", &doc.v)] {
        if rows.len() != n2 {
            return Err(CgridError::ShapeMismatch {
                what: format!("{name} rows"),
                got: rows.len(),
                expected: n2,
            });
        }
        if let Some((i2, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n1) {
            return Err(CgridError::ShapeMismatch {
                what: format!("{name} row {i2} length"),
                got: row.len(),
                expected: n1,
            });
        }
    }
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            match (doc.u[i2][i1], doc.v[i2][i1]) {
                (Some(a), Some(b)) => {
                    u.push(a);
                    v.push(b);
                    land.push(false);
                }
                (None, None) => {
                    u.push(0.0);
                    v.push(0.0);
                    land.push(true);
                }
                _ => return Err(CgridError::PartialLand { i1, i2 }),
            }
        }
    }
    Ok(GridField::new(space, doc.x1_axis, doc.x2_axis, u, v, land)?)
}

pub fn load_grid_field(path: impl AsRef<Path>) -> Result<GridField, CgridError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CgridError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_grid_field(&text)
}

pub fn grid_field_to_string(field: &GridField) -> String {
    let (n2, n1) = field.shape();
    let mut u = vec![vec![None; n1]; n2];
    let mut v = vec![vec![None; n1]; n2];
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            if let Some(s) = field.node(i1, i2) {
                u[i2][i1] = Some(s.w1);
                v[i2][i1] = Some(s.w2);
            }
        }
    }
    let doc = Document {
        format: FORMAT.to_string(),
        space: space_tag(field.space()).to_string(),
        x1_axis: field.x1_axis().to_vec(),
        x2_axis: field.x2_axis().to_vec(),
        u,
        v,
    };
    serde_json::to_string(&doc).expect("grid values are finite")
}

pub fn save_grid_field(field: &GridField, path: impl AsRef<Path>) -> Result<(), CgridError> {
    let path = path.as_ref();
    std::fs::write(path, grid_field_to_string(field)).map_err(|source| CgridError::Io {
        path: path.display().to_string(),
        source,
    })
}
