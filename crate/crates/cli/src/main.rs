//! `paralip` command-line front end.
//!
//! Exit status: 0 when every check passes, 1 when a check or extraction
//! fails, 2 for usage and configuration errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use paralip::atlas::{build_atlas_with, verify_atlas_with, AtlasOptions, AtlasReport, VerifyOptions};
use paralip::chart::{extract_chart_with, ChartManifest, ChartOptions, CHART_TOL};
use paralip::checks::{chord_suite, metric_suite};
use paralip::domain::{write_boundary_csv, BoundaryRow};
use paralip::dsl::{validate_spec, RadialSpec};
use paralip::metric::{metric_distance, parabolic_norm, ParabolicPoint};
use paralip::{Error, Sampler};
use serde::Serialize;
use serde_json::{json, Value};

/// Slack within which a supplied direction is normalized instead of rejected.
const NORMALIZE_SLACK: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "paralip", version, about = "Parabolic metric geometry and boundary charts of star-like space-time domains")]
struct Cli {
    /// Seed for every random design.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Sample budget for the randomized suites.
    #[arg(long, global = true, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    /// Chart inclusion tolerance.
    #[arg(long, global = true, default_value_t = CHART_TOL)]
    tol: f64,
    /// Output path; reports go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit the timestamp so reports are byte-identical across runs.
    #[arg(long, global = true)]
    reproducible: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print ρ(t, x) and the ratio ρ/(|t|^½ + |x|).
    #[command(allow_negative_numbers = true)]
    Norm {
        t: f64,
        #[arg(required = true)]
        x: Vec<f64>,
    },
    /// Print D(p, q) for p = (t, x), q = (s, y) given as t x.. s y..
    #[command(allow_negative_numbers = true)]
    Dist {
        #[arg(required = true, num_args = 4..)]
        coords: Vec<f64>,
    },
    /// Run the metric, chord, validation and atlas checks for a domain config.
    Verify {
        config: PathBuf,
        /// Atlas seed density per unit of time × sphere area.
        #[arg(long, default_value_t = 500.0)]
        density: f64,
    },
    /// Extract and verify one boundary chart at (s0, ω).
    #[command(allow_negative_numbers = true)]
    Chart {
        config: PathBuf,
        s0: f64,
        #[arg(required = true)]
        omega: Vec<f64>,
        /// Also write graph points of the chart as boundary CSV.
        #[arg(long)]
        export: Option<PathBuf>,
        /// Samples per inclusion direction.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Build and verify an atlas, writing the full report.
    Atlas {
        config: PathBuf,
        #[arg(long, default_value_t = 500.0)]
        density: f64,
    },
    /// Write sampled boundary points as CSV.
    ExportBoundary {
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Check(anyhow::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.into())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Norm { t, x } => cmd_norm(cli, *t, x),
        Command::Dist { coords } => cmd_dist(cli, coords),
        Command::Verify { config, density } => cmd_verify(cli, config, *density),
        Command::Chart {
            config,
            s0,
            omega,
            export,
            samples,
        } => cmd_chart(cli, config, *s0, omega, export.as_deref(), *samples),
        Command::Atlas { config, density } => cmd_atlas(cli, config, *density),
        Command::ExportBoundary { config, count } => cmd_export(cli, config, *count),
    }
}

/// `v` with 12 significant digits.
fn sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.11}");
    }
    let decimals = (11 - v.abs().log10().floor() as i64).max(0) as usize;
    format!("{v:.decimals$}")
}

fn point(t: f64, x: &[f64]) -> Result<ParabolicPoint, Failure> {
    ParabolicPoint::new(t, x.to_vec()).map_err(|e| Failure::Usage(e.into()))
}

fn cmd_norm(cli: &Cli, t: f64, x: &[f64]) -> Outcome {
    let p = point(t, x)?;
    let rho = parabolic_norm(&p);
    let size = p.anisotropic_size();
    let ratio = if size > 0.0 { format!("{:.12}", rho / size) } else { "undefined".into() };
    emit_text(cli, &format!("rho={} ratio={ratio}\n", sig12(rho)))?;
    Ok(true)
}

fn cmd_dist(cli: &Cli, coords: &[f64]) -> Outcome {
    if coords.len() % 2 != 0 {
        return Err(Failure::Usage(anyhow!(
            "dist takes 2(n + 1) numbers `t x1..xn s y1..yn`, got {}",
            coords.len()
        )));
    }
    let (a, b) = coords.split_at(coords.len() / 2);
    let p = point(a[0], &a[1..])?;
    let q = point(b[0], &b[1..])?;
    let d = metric_distance(&p, &q).map_err(|e| Failure::Usage(e.into()))?;
    emit_text(cli, &format!("D={}\n", sig12(d)))?;
    Ok(true)
}

fn load_spec(path: &Path) -> Result<RadialSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Usage)?;
    RadialSpec::from_json(&text)
        .with_context(|| format!("config {}", path.display()))
        .map_err(Failure::Usage)
}

fn label(spec: &RadialSpec, path: &Path) -> String {
    spec.config()
        .name
        .clone()
        .unwrap_or_else(|| path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()))
}

fn header(cli: &Cli, command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!("paralip"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m.insert("seed".into(), json!(cli.seed));
    m.insert("budget".into(), json!(cli.budget));
    if !cli.reproducible {
        m.insert("timestamp".into(), json!(chrono::Utc::now().to_rfc3339()));
    }
    m
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn cmd_verify(cli: &Cli, config: &Path, density: f64) -> Outcome {
    let spec = load_spec(config)?;
    let domain = spec.to_domain().map_err(|e| Failure::Usage(e.into()))?;
    let budget = cli.budget as usize;
    let metric = metric_suite(&[1, 2, 3], budget, cli.seed);
    let chord = chord_suite(&[2, 3, 4], budget, cli.seed);
    let validation = validate_spec(&spec, &Sampler::new(budget, cli.seed));

    let atlas = if validation.passed {
        let mut opts = AtlasOptions::new(density, cli.seed);
        opts.chart.tol = cli.tol;
        match build_atlas_with(&domain, &opts) {
            Ok(a) => {
                let mut v = VerifyOptions::new(cli.seed.wrapping_add(1));
                v.tol = cli.tol;
                let coverage = verify_atlas_with(&a, &v).map_err(|e| Failure::Check(e.into()))?;
                json!({
                    "status": if coverage.passed { "passed" } else { "failed" },
                    "charts": a.charts().len(),
                    "seeds": a.samples().len(),
                    "coverage": to_value(&coverage),
                })
            }
            Err(e) => json!({ "status": "failed", "error": e.to_string() }),
        }
    } else {
        json!({ "status": "skipped", "reason": "domain config failed validation" })
    };
    let atlas_ok = atlas["status"] == "passed";
    let passed = metric.passed && chord.passed && validation.passed && atlas_ok;

    let mut report = header(cli, "verify");
    report.insert("domain".into(), json!(label(&spec, config)));
    report.insert("config".into(), to_value(spec.config()));
    report.insert("metric".into(), to_value(&metric));
    report.insert("chord_identity".into(), to_value(&chord));
    report.insert("validation".into(), to_value(&validation));
    report.insert("atlas".into(), atlas);
    report.insert("passed".into(), json!(passed));
    emit_json(cli, &Value::Object(report))?;
    Ok(passed)
}

fn cmd_chart(cli: &Cli, config: &Path, s0: f64, omega: &[f64], export: Option<&Path>, samples: usize) -> Outcome {
    let spec = load_spec(config)?;
    let domain = spec.to_domain().map_err(|e| Failure::Usage(e.into()))?;
    if omega.len() != domain.spatial_dim() {
        return Err(Failure::Usage(anyhow!(
            "omega has {} components, the domain has n = {}",
            omega.len(),
            domain.spatial_dim()
        )));
    }
    let norm = omega.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= NORMALIZE_SLACK) {
        return Err(Failure::Usage(anyhow!("omega must be a unit vector, |omega| = {norm}")));
    }
    let omega: Vec<f64> = omega.iter().map(|v| v / norm).collect();
    domain.check_time(s0).map_err(|e| Failure::Usage(e.into()))?;
    let opts = ChartOptions {
        tol: cli.tol,
        samples,
        seed: cli.seed,
    };
    let chart = match extract_chart_with(&domain, s0, &omega, &opts) {
        Ok(c) => c,
        Err(e) => {
            let mut report = header(cli, "chart");
            report.insert("error".into(), json!(e.to_string()));
            if let Error::ChartInvalid(f) = &e {
                report.insert("worst_sample".into(), to_value(f.as_ref()));
            }
            report.insert("passed".into(), json!(false));
            emit_json(cli, &Value::Object(report))?;
            return Ok(false);
        }
    };
    let manifest: ChartManifest = chart.manifest();
    let psi0 = chart.psi(0.0, &vec![0.0; domain.spatial_dim() - 1]).map_err(|e| Failure::Check(e.into()))?;
    let mut report = header(cli, "chart");
    report.insert("domain".into(), json!(label(&spec, config)));
    report.insert("chart".into(), to_value(&manifest));
    report.insert("psi_at_center".into(), json!(psi0));
    report.insert("passed".into(), json!(true));
    if let Some(path) = export {
        let rows: Vec<BoundaryRow> = chart
            .graph_points(samples, cli.seed)
            .map_err(|e| Failure::Check(e.into()))?
            .into_iter()
            .map(|(s, x)| BoundaryRow::from_cartesian(s, x))
            .collect();
        let mut buf = Vec::new();
        write_boundary_csv(&mut buf, domain.spatial_dim(), &rows)?;
        write_atomic(path, &buf)?;
        report.insert("export".into(), json!({ "path": path.display().to_string(), "rows": rows.len() }));
    }
    emit_json(cli, &Value::Object(report))?;
    Ok(true)
}

fn cmd_atlas(cli: &Cli, config: &Path, density: f64) -> Outcome {
    let spec = load_spec(config)?;
    let domain = spec.to_domain().map_err(|e| Failure::Usage(e.into()))?;
    let mut opts = AtlasOptions::new(density, cli.seed);
    opts.chart.tol = cli.tol;
    let atlas = build_atlas_with(&domain, &opts).map_err(|e| Failure::Check(e.into()))?;
    let mut v = VerifyOptions::new(cli.seed.wrapping_add(1));
    v.tol = cli.tol;
    let coverage = verify_atlas_with(&atlas, &v).map_err(|e| Failure::Check(e.into()))?;
    let passed = coverage.passed;
    let report = AtlasReport::new(label(&spec, config), &atlas, coverage);
    let mut value = to_value(&report);
    if let Value::Object(m) = &mut value {
        let mut h = header(cli, "atlas");
        h.append(m);
        *m = h;
    }
    emit_json(cli, &value)?;
    Ok(passed)
}

fn cmd_export(cli: &Cli, config: &Path, count: usize) -> Outcome {
    let spec = load_spec(config)?;
    let domain = spec.to_domain().map_err(|e| Failure::Usage(e.into()))?;
    let rows = domain.sample_boundary(count, cli.seed).map_err(|e| Failure::Check(e.into()))?;
    let mut buf = Vec::new();
    write_boundary_csv(&mut buf, domain.spatial_dim(), &rows)?;
    emit_bytes(cli, &buf)?;
    Ok(true)
}

fn emit_json(cli: &Cli, v: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    text.push('\n');
    emit_bytes(cli, text.as_bytes())
}

fn emit_text(cli: &Cli, s: &str) -> Result<(), Failure> {
    emit_bytes(cli, s.as_bytes())
}

fn emit_bytes(cli: &Cli, bytes: &[u8]) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => write_atomic(path, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Failure::Usage(e.error.into()))?;
    Ok(())
}
