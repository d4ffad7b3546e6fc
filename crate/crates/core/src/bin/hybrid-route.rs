//! Command-line front end. Exit status: 0 when the goal was reached, 2 when
//! it was not, 1 on any error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybrid_route::io::{self, parse_overrides, record, RouteRecord, RunManifest};

#[derive(Parser)]
#[command(name = "hybrid-route", version, about = "Time-optimal routing through current fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a synthetic benchmark (circular or four_vortices) and print the table.
    Benchmark {
        name: String,
        /// Manifest settings, e.g. `--iterations 0 --search.dt 0.02`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
        overrides: Vec<String>,
    },
    /// Plan a route from a manifest and write the route CSV and summary.
    Route {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
        overrides: Vec<String>,
    },
    /// Measure the straight or great-circle route of a manifest.
    Baseline {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
        overrides: Vec<String>,
    },
    /// Write field samples and the route polyline of a record for plotting.
    PlotData {
        /// Summary JSON written by `route` or `benchmark`.
        #[arg(long)]
        record: PathBuf,
        /// x1_min,x1_max,x2_min,x2_max
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        bbox: Option<Vec<f64>>,
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

type Failure = Box<dyn std::error::Error>;

fn write_record(mut rec: RouteRecord, manifest: &RunManifest, default_csv: PathBuf) -> Result<ExitCode, Failure> {
    let csv = manifest.output.route_csv.clone().unwrap_or(default_csv);
    let summary = manifest
        .output
        .summary_json
        .clone()
        .unwrap_or_else(|| record::sibling_summary_path(&csv));
    rec.write(&csv, &summary)?;
    let s = &rec.summary;
    println!(
        "{} travel_time {:.6} path_length {:.6} rows {} -> {}",
        if s.reached { "reached" } else { "not reached" },
        s.travel_time,
        s.path_length,
        s.rows,
        csv.display()
    );
    Ok(if s.reached { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Benchmark { name, overrides } => {
            let overrides = parse_overrides(&overrides)?;
            let report = io::run_benchmark(&name, &overrides)?;
            print!("{report}");
            let manifest = io::benchmark_run_manifest(&name, &overrides)?;
            if manifest.output.route_csv.is_some() || manifest.output.summary_json.is_some() {
                let default = PathBuf::from(format!("{name}.csv"));
                return write_record(report.record, &manifest, default);
            }
            Ok(if report.record.summary.reached { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Route { manifest, overrides } => {
            let overrides = parse_overrides(&overrides)?;
            let m = RunManifest::load(&manifest, &overrides)?;
            let rec = io::plan_route(&m)?;
            let stem = manifest.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "route".into());
            let default = manifest.with_file_name(format!("{stem}.route.csv"));
            write_record(rec, &m, default)
        }
        Command::Baseline { manifest, overrides } => {
            let overrides = parse_overrides(&overrides)?;
            let m = RunManifest::load(&manifest, &overrides)?;
            let metrics = io::run_baseline(&m)?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::PlotData {
            record,
            bbox,
            resolution,
            out_dir,
        } => {
            let bbox = match bbox.as_deref() {
                None => None,
                Some(&[a, b, c, d]) => Some([a, b, c, d]),
                Some(other) => return Err(format!("--bbox needs 4 values, got {}", other.len()).into()),
            };
            let files = io::emit_plot_data(&record, bbox, resolution, out_dir.as_deref())?;
            println!(
                "{} samples -> {}\n{} route rows -> {}",
                files.samples,
                files.field_csv.display(),
                files.route_rows,
                files.route_csv.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // status 2 means "not reached", so usage errors map to 1
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
