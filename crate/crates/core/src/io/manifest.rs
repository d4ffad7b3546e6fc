//! Run manifests: what to route, where, and with which settings.
//!
//! A manifest is a JSON object. Only `space`, `field`, `start`, `goal` and
//! `speed` are required; `search` and `smoothing` sections are merged key by
//! key onto the defaults of the chosen space.
//!
//! ```json
//! {"space": "spherical", "field": {"grid": "atlantic.json"},
//!  "start": [-79.9, 32.8], "goal": [-25.7, 37.7], "speed": 6,
//!  "smoothing": {"iterations": 500},
//!  "output": {"route_csv": "out/route.csv"}}
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::cgrid::{load_grid_field, CgridError};
use crate::analysis::VesselSpec;
use crate::exec::Execution;
use crate::field::{AffineField, CircularField, CurrentField, FieldError, FieldJacobian, FieldSample, FourVortices, GridField};
use crate::geometry::{Point, Space, SphereParams};
use crate::pipeline::PipelineConfig;
use crate::search::{ConfigError, HsConfig};
use crate::smoothing::SmoothingConfig;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid manifest: {0}")]
    Invalid(String),
    #[error("override --{key}: {reason}")]
    Override { key: String, reason: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("grid file: {0}")]
    Grid(#[from] CgridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceTag {
    Euclidean,
    Spherical,
}

impl SpaceTag {
    pub fn space(self) -> Space {
        match self {
            SpaceTag::Euclidean => Space::Euclidean,
            SpaceTag::Spherical => Space::Spherical(SphereParams::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinField {
    Circular,
    FourVortices,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Builtin(BuiltinField),
    Grid { grid: PathBuf },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_json: Option<PathBuf>,
}

/// A validated manifest with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub space: SpaceTag,
    pub field: FieldSpec,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub speed: f64,
    pub search: HsConfig,
    pub smoothing: SmoothingConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vessel: Option<VesselSpec>,
    /// Results do not depend on it, so records leave it out.
    #[serde(skip)]
    pub execution: Execution,
    pub output: OutputPaths,
    /// Legal but unusual settings noticed during validation.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    space: SpaceTag,
    field: FieldSpec,
    start: [f64; 2],
    goal: [f64; 2],
    speed: f64,
    #[serde(default)]
    search: Map<String, Value>,
    #[serde(default)]
    smoothing: Map<String, Value>,
    #[serde(default)]
    vessel: Option<VesselSpec>,
    #[serde(default)]
    execution: Execution,
    #[serde(default)]
    output: OutputPaths,
}

const TOP_LEVEL: [&str; 6] = ["space", "field", "start", "goal", "speed", "execution"];
const SECTIONS: [&str; 4] = ["search", "smoothing", "vessel", "output"];

fn section_keys(section: &str) -> Vec<String> {
    let object_keys = |v: Value| match v {
        Value::Object(m) => m.keys().cloned().collect(),
        _ => Vec::new(),
    };
    match section {
        "search" => object_keys(serde_json::to_value(HsConfig::default()).expect("plain struct"))
            .into_iter()
            .filter(|k| k != "speed")
            .collect(),
        "smoothing" => object_keys(serde_json::to_value(SmoothingConfig::default()).expect("plain struct")),
        "vessel" => object_keys(serde_json::to_value(VesselSpec::new(1.0, 1.0)).expect("plain struct")),
        "output" => vec!["route_csv".into(), "summary_json".into()],
        _ => Vec::new(),
    }
}

/// One `--key value` pair from the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Override {
    pub key: String,
    pub value: String,
}

impl Override {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            value: value.into(),
        }
    }
}

/// Pairs up `--key value` tokens. Dashes inside keys become underscores.
pub fn parse_overrides<S: AsRef<str>>(args: &[S]) -> Result<Vec<Override>, ManifestError> {
    let mut out = Vec::new();
    let mut it = args.iter().map(AsRef::as_ref);
    while let Some(flag) = it.next() {
        let key = flag.strip_prefix("--").ok_or_else(|| ManifestError::Override {
            key: flag.to_string(),
            reason: "expected a --key flag".into(),
        })?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let value = it.next().ok_or_else(|| ManifestError::Override {
                    key: key.to_string(),
                    reason: "missing value".into(),
                })?;
                (key.to_string(), value.to_string())
            }
        };
        out.push(Override::new(key.replace('-', "_"), value));
    }
    Ok(out)
}

fn locate(key: &str) -> Result<(Option<String>, String), ManifestError> {
    let fail = |reason: String| ManifestError::Override {
        key: key.to_string(),
        reason,
    };
    if let Some((section, name)) = key.split_once('.') {
        if !SECTIONS.contains(&section) {
            return Err(fail(format!("unknown section {section:?}")));
        }
        if !section_keys(section).iter().any(|k| k == name) {
            return Err(fail(format!("unknown key {name:?} in section {section:?}")));
        }
        return Ok((Some(section.to_string()), name.to_string()));
    }
    if TOP_LEVEL.contains(&key) {
        return Ok((None, key.to_string()));
    }
    let owners: Vec<&str> = SECTIONS
        .iter()
        .copied()
        .filter(|s| section_keys(s).iter().any(|k| k == key))
        .collect();
    match owners.as_slice() {
        [one] => Ok((Some(one.to_string()), key.to_string())),
        [] => Err(fail("no such setting".into())),
        many => Err(fail(format!("ambiguous, qualify it as one of {}", many.iter().map(|s| format!("{s}.{key}")).collect::<Vec<_>>().join(", ")))),
    }
}

/// Applies overrides to a raw manifest object. Values are read as JSON when
/// they parse, as plain strings otherwise; output paths are always strings.
pub fn apply_overrides(doc: &mut Value, overrides: &[Override]) -> Result<(), ManifestError> {
    let root = doc
        .as_object_mut()
        .ok_or_else(|| ManifestError::Invalid("manifest must be a JSON object".into()))?;
    for o in overrides {
        let (section, name) = locate(&o.key)?;
        let value = if section.as_deref() == Some("output") {
            Value::String(o.value.clone())
        } else {
            serde_json::from_str(&o.value).unwrap_or_else(|_| Value::String(o.value.clone()))
        };
        match section {
            None => {
                root.insert(name, value);
            }
            Some(section) => {
                let entry = root.entry(section.clone()).or_insert_with(|| Value::Object(Map::new()));
                let map = entry.as_object_mut().ok_or_else(|| ManifestError::Override {
                    key: o.key.clone(),
                    reason: format!("section {section:?} is not an object"),
                })?;
                map.insert(name, value);
            }
        }
    }
    Ok(())
}

fn rebase(path: &mut Value, base: &Path) {
    if let Value::String(s) = path {
        let p = Path::new(s.as_str());
        if p.is_relative() {
            *s = base.join(p).to_string_lossy().into_owned();
        }
    }
}

/// Makes the grid and output paths of a raw manifest relative to `base`.
pub fn rebase_paths(doc: &mut Value, base: &Path) {
    if let Some(grid) = doc.pointer_mut("/field/grid") {
        rebase(grid, base);
    }
    for key in ["/output/route_csv", "/output/summary_json"] {
        if let Some(p) = doc.pointer_mut(key) {
            rebase(p, base);
        }
    }
}

fn parse_error(e: serde_json::Error) -> ManifestError {
    ManifestError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn invalid(msg: impl Into<String>) -> ManifestError {
    ManifestError::Invalid(msg.into())
}

fn merged<T: Serialize + for<'de> Deserialize<'de>>(
    section: &str,
    defaults: T,
    given: Map<String, Value>,
) -> Result<T, ManifestError> {
    let mut base = match serde_json::to_value(defaults).expect("plain struct") {
        Value::Object(m) => m,
        _ => unreachable!("config sections serialize to objects"),
    };
    base.extend(given);
    serde_json::from_value(Value::Object(base)).map_err(|e| invalid(format!("{section}: {e}")))
}

fn check_smoothing(cfg: &SmoothingConfig) -> Result<(), ManifestError> {
    if cfg.segments < 2 {
        return Err(invalid(format!("smoothing.segments must be at least 2, got {}", cfg.segments)));
    }
    if !(cfg.fd_step > 0.0 && cfg.fd_step.is_finite()) {
        return Err(invalid(format!("smoothing.fd_step must be positive, got {}", cfg.fd_step)));
    }
    if !(cfg.singular_margin > 0.0 && cfg.singular_margin < 1.0) {
        return Err(invalid(format!(
            "smoothing.singular_margin must lie in (0, 1), got {}",
            cfg.singular_margin
        )));
    }
    Ok(())
}

impl RunManifest {
    /// Validates a raw manifest object and fills in defaults.
    pub fn from_value(doc: Value) -> Result<Self, ManifestError> {
        if doc.pointer("/search/speed").is_some() {
            return Err(invalid("search.speed is not a setting; use the top-level speed"));
        }
        let raw: RawManifest = serde_json::from_value(doc).map_err(|e| invalid(e.to_string()))?;
        let point_ok = |p: [f64; 2]| p.iter().all(|c| c.is_finite());
        if !point_ok(raw.start) || !point_ok(raw.goal) {
            return Err(invalid("start and goal must be finite"));
        }
        if raw.space == SpaceTag::Spherical {
            for (name, p) in [("start", raw.start), ("goal", raw.goal)] {
                if p[1].abs() > 90.0 {
                    return Err(invalid(format!("{name} latitude {} is outside [-90, 90]", p[1])));
                }
            }
        }
        let (search_defaults, smoothing_defaults) = match raw.space {
            SpaceTag::Euclidean => (HsConfig::euclidean(), SmoothingConfig::default()),
            SpaceTag::Spherical => (HsConfig::spherical(raw.speed), SmoothingConfig::spherical()),
        };
        let mut search = merged("search", search_defaults, raw.search)?;
        search.speed = raw.speed;
        search.execution = raw.execution;
        let warnings = search.validate()?;
        let mut smoothing = merged("smoothing", smoothing_defaults, raw.smoothing)?;
        smoothing.execution = raw.execution;
        check_smoothing(&smoothing)?;
        if let Some(v) = &raw.vessel {
            if !(v.displacement > 0.0 && v.length > 0.0 && v.sfoc > 0.0) {
                return Err(invalid("vessel displacement, length and sfoc must be positive"));
            }
        }
        if let (FieldSpec::Builtin(BuiltinField::Circular | BuiltinField::FourVortices), SpaceTag::Spherical) = (&raw.field, raw.space) {
            return Err(invalid("the circular and four_vortices fields are defined on the plane only"));
        }
        Ok(Self {
            space: raw.space,
            field: raw.field,
            start: raw.start,
            goal: raw.goal,
            speed: raw.speed,
            search,
            smoothing,
            vessel: raw.vessel,
            execution: raw.execution,
            output: raw.output,
            warnings,
        })
    }

    /// Parses manifest text; relative paths are taken against `base`.
    pub fn from_str_with_base(text: &str, base: &Path, overrides: &[Override]) -> Result<Self, ManifestError> {
        let mut doc: Value = serde_json::from_str(text).map_err(parse_error)?;
        if !doc.is_object() {
            return Err(invalid("manifest must be a JSON object"));
        }
        rebase_paths(&mut doc, base);
        apply_overrides(&mut doc, overrides)?;
        Self::from_value(doc)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[Override]) -> Result<Self, ManifestError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        let base = std::fs::canonicalize(&base).unwrap_or(base);
        Self::from_str_with_base(&text, &base, overrides)
    }

    /// The resolved manifest as JSON; loading it again yields the same run.
    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("plain struct");
        if let Some(search) = v.get_mut("search").and_then(Value::as_object_mut) {
            search.remove("speed");
        }
        v
    }

    pub fn space(&self) -> Space {
        self.space.space()
    }

    pub fn start(&self) -> Point {
        Point::new(self.start[0], self.start[1])
    }

    pub fn goal(&self) -> Point {
        Point::new(self.goal[0], self.goal[1])
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            search: self.search,
            smoothing: self.smoothing,
            vessel: self.vessel,
        }
    }

    /// Builds the current field, loading grid files as needed.
    pub fn build_field(&self) -> Result<FieldSource, ManifestError> {
        Ok(match &self.field {
            FieldSpec::Builtin(BuiltinField::Circular) => FieldSource::Circular(CircularField::default()),
            FieldSpec::Builtin(BuiltinField::FourVortices) => FieldSource::FourVortices(FourVortices::default()),
            FieldSpec::Builtin(BuiltinField::Zero) => FieldSource::Zero(AffineField::uniform(0.0, 0.0)),
            FieldSpec::Grid { grid } => {
                let g = load_grid_field(grid)?;
                let tag = match g.space() {
                    Space::Euclidean => SpaceTag::Euclidean,
                    Space::Spherical(_) => SpaceTag::Spherical,
                };
                if tag != self.space {
                    return Err(invalid(format!(
                        "grid {} is {:?} but the manifest space is {:?}",
                        grid.display(),
                        tag,
                        self.space
                    )));
                }
                FieldSource::Grid(Box::new(g))
            }
        })
    }
}

/// Start, goal and field of the two synthetic benchmarks.
pub fn benchmark_manifest(name: &str) -> Option<Value> {
    let (start, goal) = match name {
        "circular" => ([3.0, 2.0], [-7.0, 2.0]),
        "four_vortices" => ([0.0, 0.0], [6.0, 2.0]),
        _ => return None,
    };
    Some(serde_json::json!({
        "space": "euclidean",
        "field": name,
        "start": start,
        "goal": goal,
        "speed": 1.0,
    }))
}

/// Any field a manifest can name.
#[derive(Debug, Clone)]
pub enum FieldSource {
    Circular(CircularField),
    FourVortices(FourVortices),
    Zero(AffineField),
    Grid(Box<GridField>),
}

impl CurrentField for FieldSource {
    fn sample(&self, p: Point) -> Result<FieldSample, FieldError> {
        match self {
            FieldSource::Circular(f) => f.sample(p),
            FieldSource::FourVortices(f) => f.sample(p),
            FieldSource::Zero(f) => f.sample(p),
            FieldSource::Grid(f) => f.sample(p),
        }
    }

    fn jacobian(&self, p: Point) -> Result<FieldJacobian, FieldError> {
        match self {
            FieldSource::Circular(f) => f.jacobian(p),
            FieldSource::FourVortices(f) => f.jacobian(p),
            FieldSource::Zero(f) => f.jacobian(p),
            FieldSource::Grid(f) => f.jacobian(p),
        }
    }

    fn is_land(&self, p: Point) -> bool {
        match self {
            FieldSource::Grid(f) => f.is_land(p),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circular() -> Value {
        benchmark_manifest("circular").unwrap()
    }

    #[test]
    fn defaults_follow_the_space() {
        let m = RunManifest::from_value(circular()).unwrap();
        assert_eq!(m.search, HsConfig::euclidean());
        assert_eq!(m.smoothing, SmoothingConfig::default());
        let mut sph = serde_json::json!({"space": "spherical", "field": "zero", "start": [-79.0, 32.0], "goal": [-25.0, 37.0], "speed": 6, "search": {"n": 11}});
        let m = RunManifest::from_value(sph.take()).unwrap();
        assert_eq!(m.search.dt, 600.0);
        assert_eq!(m.search.tau, 7200.0);
        assert_eq!(m.search.d, 10.0);
        assert_eq!(m.search.n, 11);
        assert_eq!(m.search.speed, 6.0);
        assert_eq!(m.smoothing.iterations, 2000);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut doc = circular();
        doc["colour"] = "red".into();
        assert!(matches!(RunManifest::from_value(doc), Err(ManifestError::Invalid(_))));
        let mut doc = circular();
        doc["search"] = serde_json::json!({"nn": 3});
        assert!(matches!(RunManifest::from_value(doc), Err(ManifestError::Invalid(_))));
        let mut doc = circular();
        doc["search"] = serde_json::json!({"speed": 3});
        assert!(matches!(RunManifest::from_value(doc), Err(ManifestError::Invalid(_))));
    }

    #[test]
    fn search_invariants_are_checked() {
        let mut doc = circular();
        apply_overrides(&mut doc, &[Override::new("tau", "0.015")]).unwrap();
        assert!(matches!(RunManifest::from_value(doc), Err(ManifestError::Config(_))));
        let mut doc = circular();
        apply_overrides(&mut doc, &[Override::new("segments", "1")]).unwrap();
        assert!(RunManifest::from_value(doc).is_err());
    }

    #[test]
    fn overrides_by_bare_and_dotted_keys() {
        let args = ["--iterations", "0", "--search.dt", "0.02", "--max-outer=7", "--speed", "2", "--route_csv", "17"];
        let overrides = parse_overrides(&args).unwrap();
        let mut doc = circular();
        apply_overrides(&mut doc, &overrides).unwrap();
        let m = RunManifest::from_value(doc).unwrap();
        assert_eq!(m.smoothing.iterations, 0);
        assert_eq!(m.search.dt, 0.02);
        assert_eq!(m.search.max_outer, 7);
        assert_eq!(m.search.speed, 2.0);
        assert_eq!(m.output.route_csv, Some(PathBuf::from("17")));
        for bad in [["--nope", "1"], ["--search.iterations", "1"], ["--colour.n", "1"]] {
            let o = parse_overrides(&bad).unwrap();
            assert!(matches!(apply_overrides(&mut circular(), &o), Err(ManifestError::Override { .. })));
        }
        assert!(parse_overrides(&["--iterations"]).is_err());
        assert!(parse_overrides(&["iterations", "3"]).is_err());
    }

    #[test]
    fn resolved_manifest_reloads_identically() {
        let mut doc = circular();
        apply_overrides(&mut doc, &[Override::new("vessel.displacement", "5e4"), Override::new("vessel.length", "200")]).unwrap();
        let m = RunManifest::from_value(doc).unwrap();
        assert_eq!(m.vessel, Some(VesselSpec::new(5e4, 200.0)));
        let again = RunManifest::from_value(m.to_value()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn relative_paths_follow_the_manifest() {
        let text = r#"{"space": "euclidean", "field": {"grid": "g.json"}, "start": [0, 0], "goal": [1, 1], "speed": 1,
                       "output": {"route_csv": "out/r.csv", "summary_json": "/abs/s.json"}}"#;
        let m = RunManifest::from_str_with_base(text, Path::new("/data/run"), &[]).unwrap();
        assert_eq!(m.field, FieldSpec::Grid { grid: PathBuf::from("/data/run/g.json") });
        assert_eq!(m.output.route_csv, Some(PathBuf::from("/data/run/out/r.csv")));
        assert_eq!(m.output.summary_json, Some(PathBuf::from("/abs/s.json")));
    }

    #[test]
    fn parse_errors_carry_position() {
        match RunManifest::from_str_with_base("{\n  \"space\": }", Path::new("."), &[]) {
            Err(ManifestError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn synthetic_fields_stay_on_the_plane() {
        let doc = serde_json::json!({"space": "spherical", "field": "circular", "start": [0, 0], "goal": [1, 1], "speed": 1});
        assert!(RunManifest::from_value(doc).is_err());
    }
}
