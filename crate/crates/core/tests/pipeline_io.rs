use std::path::Path;
use std::process::Command;

use hybrid_route::field::FieldSample;
use hybrid_route::io::{self, record, save_grid_field, load_grid_field, Override, RunError, RunManifest};
use hybrid_route::pipeline::{self, PipelineConfig};
use hybrid_route::smoothing::SmoothingConfig;
use hybrid_route::{CircularField, CurrentField, Execution, FourVortices, GridField, HsConfig, Point, Space, SphereParams};

const BIN: &str = env!("CARGO_BIN_EXE_hybrid-route");

fn channel_grid() -> GridField {
    // eastward drift with an island around (5, 5)
    let axis: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
    GridField::from_fn(Space::Euclidean, axis.clone(), axis, |p| {
        let island = (p.x1 - 5.0).abs() <= 1.0 && (p.x2 - 5.0).abs() <= 1.0;
        (!island).then(|| FieldSample::new(0.2 * (p.x2 / 10.0), 0.05))
    })
    .unwrap()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn grid_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let g = channel_grid();
    save_grid_field(&g, &path).unwrap();
    let back = load_grid_field(&path).unwrap();
    assert_eq!(back.x1_axis(), g.x1_axis());
    assert_eq!(back.x2_axis(), g.x2_axis());
    let (n2, n1) = g.shape();
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            let bits = |s: Option<FieldSample>| s.map(|s| (s.w1.to_bits(), s.w2.to_bits()));
            assert_eq!(bits(back.node(i1, i2)), bits(g.node(i1, i2)));
        }
    }
    assert!(back.is_land(Point::new(5.0, 5.0)));
}

#[test]
fn manifest_reproduces_benchmark() {
    let overrides = [Override::new("iterations", "300")];
    let bench = io::run_benchmark("circular", &overrides).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("circ.json");
    write(
        &path,
        r#"{"space": "euclidean", "field": "circular", "start": [3, 2], "goal": [-7, 2], "speed": 1,
            "smoothing": {"iterations": 300}}"#,
    );
    let m = RunManifest::load(&path, &[]).unwrap();
    let rec = io::plan_route(&m).unwrap();
    assert_eq!(rec, bench.record);
    let methods: Vec<&str> = bench.rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(methods, ["Min. dist.", "HS", "HS + FMA"]);
}

#[test]
fn unsmoothed_override_reports_search_time() {
    let full = io::run_benchmark("circular", &[]).unwrap();
    let raw = io::run_benchmark("circular", &[Override::new("iterations", "0")]).unwrap();
    assert_eq!(raw.rows.len(), 2);
    let hs = raw.rows[1].travel_time;
    let smoothed = full.rows[2].travel_time;
    assert!(hs > smoothed, "{hs} vs {smoothed}");
    assert_eq!(raw.record.summary.method, "hs");
    assert_eq!(raw.record.rows.len(), raw.record.summary.search.states + 1);
}

#[test]
fn smoothed_never_slower_than_baseline() {
    for name in ["circular", "four_vortices"] {
        let rep = io::run_benchmark(name, &[]).unwrap();
        let s = &rep.record.summary;
        assert_eq!(s.method, "hs+fma");
        assert!(s.travel_time < s.baseline.unwrap().travel_time, "{name}: {}", s.travel_time);
    }
}

#[test]
fn record_rows_agree_with_summary() {
    let rep = io::run_benchmark("four_vortices", &[Override::new("iterations", "200")]).unwrap();
    let rec = &rep.record;
    assert_eq!(rec.rows.len(), rec.summary.rows);
    assert!(rec.rows.windows(2).all(|w| w[1].t >= w[0].t));
    assert_eq!(rec.rows.last().unwrap().t, rec.summary.travel_time);
    assert_eq!(rec.summary.leg_boundaries[0], 0);
    assert!(rec.summary.leg_boundaries.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(rec.summary.smoothing.as_ref().unwrap().action_trace_len, 201);
}

#[test]
fn land_endpoints_rejected_before_integration() {
    let dir = tempfile::tempdir().unwrap();
    save_grid_field(&channel_grid(), dir.path().join("g.json")).unwrap();
    let text = r#"{"space": "euclidean", "field": {"grid": "g.json"}, "start": [1, 1], "goal": [5, 5], "speed": 1}"#;
    let m = RunManifest::from_str_with_base(text, dir.path(), &[]).unwrap();
    assert!(matches!(io::plan_route(&m), Err(RunError::LandGoal(_))));
    let m = RunManifest::from_str_with_base(text, dir.path(), &[Override::new("start", "[4.5, 5.5]"), Override::new("goal", "[9, 9]")]).unwrap();
    assert!(matches!(io::plan_route(&m), Err(RunError::LandStart(_))));
    let m = RunManifest::from_str_with_base(text, dir.path(), &[Override::new("goal", "[12, 9]")]).unwrap();
    assert!(matches!(io::plan_route(&m), Err(RunError::Field(_))));
}

#[test]
fn grid_space_must_match_manifest() {
    let dir = tempfile::tempdir().unwrap();
    save_grid_field(&channel_grid(), dir.path().join("g.json")).unwrap();
    let text = r#"{"space": "spherical", "field": {"grid": "g.json"}, "start": [1, 1], "goal": [8, 8], "speed": 6}"#;
    let m = RunManifest::from_str_with_base(text, dir.path(), &[]).unwrap();
    assert!(io::plan_route(&m).is_err());
}

#[test]
fn cli_route_plot_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    save_grid_field(&channel_grid(), dir.path().join("g.json")).unwrap();
    let manifest = dir.path().join("run.json");
    write(
        &manifest,
        r#"{"space": "euclidean", "field": {"grid": "g.json"}, "start": [1, 5], "goal": [9, 5.5], "speed": 1,
            "smoothing": {"iterations": 300}, "output": {"route_csv": "out/run.csv"}}"#,
    );
    let run = |extra: &[&str]| {
        Command::new(BIN)
            .arg("route")
            .arg("--manifest")
            .arg(&manifest)
            .args(extra)
            .output()
            .unwrap()
    };
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("out/run.csv");
    let summary = dir.path().join("out/run.summary.json");
    let first = (std::fs::read(&csv).unwrap(), std::fs::read(&summary).unwrap());
    assert_eq!(run(&[]).status.code(), Some(0));
    let second = (std::fs::read(&csv).unwrap(), std::fs::read(&summary).unwrap());
    assert!(first == second, "repeated runs differ");

    let rec = io::RouteRecord::read(&summary).unwrap();
    assert!(rec.summary.reached);
    assert!(!rec.summary.crosses_land);
    let text = String::from_utf8(first.0).unwrap();
    assert!(text.starts_with("t,x1,x2,alpha\n"));
    assert_eq!(text.lines().count(), rec.summary.rows + 1);

    let out = Command::new(BIN)
        .args(["plot-data", "--record"])
        .arg(&summary)
        .args(["--bbox", "0,10,0,10", "--resolution", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let field = std::fs::read_to_string(dir.path().join("out/run.field.csv")).unwrap();
    assert_eq!(field.lines().count(), 21 * 21 + 1);
    assert!(field.lines().any(|l| l.ends_with(",1")));
    let track = std::fs::read_to_string(dir.path().join("out/run.track.csv")).unwrap();
    assert_eq!(track.lines().count(), rec.summary.rows + 1);
    let outside = Command::new(BIN)
        .args(["plot-data", "--record"])
        .arg(&summary)
        .args(["--bbox", "-1,10,0,10"])
        .output()
        .unwrap();
    assert_eq!(outside.status.code(), Some(1));

    // one alternation is not enough to get there
    assert_eq!(run(&["--max_outer", "1", "--max_checkpoints", "3"]).status.code(), Some(2));
    assert_eq!(run(&["--goal", "[5, 5]"]).status.code(), Some(1));
    assert_eq!(run(&["--no_such_key", "1"]).status.code(), Some(1));

    let out = Command::new(BIN).args(["baseline", "--manifest"]).arg(&manifest).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(m["travel_time"].as_f64().unwrap() > 0.0);
}

#[test]
fn sequential_matches_parallel_pipeline() {
    let field = FourVortices::default();
    let cfg = |execution| PipelineConfig {
        search: HsConfig {
            execution,
            ..HsConfig::euclidean()
        },
        smoothing: SmoothingConfig {
            iterations: 300,
            execution,
            ..SmoothingConfig::default()
        },
        vessel: None,
    };
    let (a, b) = (Point::new(0.0, 0.0), Point::new(6.0, 2.0));
    let seq = pipeline::run(a, b, &cfg(Execution::Sequential), &field, Space::Euclidean).unwrap();
    let par = pipeline::run(a, b, &cfg(Execution::Parallel), &field, Space::Euclidean).unwrap();
    assert_eq!(seq, par);
}

fn assert_legs_progress(field: &dyn CurrentField, space: Space, start: Point, goal: Point, search: HsConfig) {
    let cfg = PipelineConfig {
        search,
        smoothing: SmoothingConfig {
            iterations: 0,
            ..SmoothingConfig::default()
        },
        vessel: None,
    };
    let res = pipeline::run(start, goal, &cfg, field, space).unwrap();
    assert!(res.route.reached);
    let dists: Vec<f64> = res.route.legs.iter().map(|l| space.distance(l.launch().pos, goal)).collect();
    assert!(dists.windows(2).all(|w| w[1] < w[0]), "{dists:?}");
}

#[test]
fn every_leg_starts_closer_to_the_goal() {
    let plane = HsConfig::euclidean();
    assert_legs_progress(&CircularField::default(), Space::Euclidean, Point::new(3.0, 2.0), Point::new(-7.0, 2.0), plane);
    assert_legs_progress(&FourVortices::default(), Space::Euclidean, Point::new(0.0, 0.0), Point::new(6.0, 2.0), plane);
    let sphere = Space::Spherical(SphereParams::default());
    let lon: Vec<f64> = (0..=60).map(|i| -85.0 + i as f64).collect();
    let lat: Vec<f64> = (0..=20).map(|i| 25.0 + i as f64).collect();
    // a gyre-like meander of up to 1 m/s
    let gyre = GridField::from_fn(sphere, lon, lat, |p| {
        let (x, y) = ((p.x1 + 55.0) / 10.0, (p.x2 - 35.0) / 5.0);
        Some(FieldSample::new(0.8 * (-y).tanh() + 0.2, 0.4 * x.sin()))
    })
    .unwrap();
    let ocean = HsConfig::spherical(6.0);
    assert_legs_progress(&gyre, sphere, Point::new(-79.7, 32.7), Point::new(-29.5, 38.5), ocean);
    let zero = hybrid_route::field::AffineField::uniform(0.0, 0.0);
    assert_legs_progress(&zero, sphere, Point::new(-79.7, 32.7), Point::new(-29.5, 38.5), ocean);
}

#[test]
fn summary_manifest_reloads() {
    let rep = io::run_benchmark("circular", &[Override::new("iterations", "50")]).unwrap();
    let m = RunManifest::from_value(rep.record.summary.manifest.clone()).unwrap();
    assert_eq!(m.smoothing.iterations, 50);
    let again = io::plan_route(&m).unwrap();
    assert_eq!(record::rows_to_csv(&again.rows), record::rows_to_csv(&rep.record.rows));
}
