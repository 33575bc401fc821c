//! The `charnum` command line: characteristic numbers of builtin or
//! spec-defined manifolds, verification suites, perturbation sweeps and
//! chart-norm reports.
//!
//! Exit codes: 0 success, 1 a verification tolerance was violated, 2 bad
//! configuration, 3 atlas or numerical failure. Errors are reported on the
//! error stream as `{"error": kind, "message": text}`.

pub mod suites;
pub mod sweep;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use charnum::atlas::regularity::chart_norms;
use charnum::atlas::spec_io::load_manifold;
use charnum::atlas::builtins::build;
use charnum::atlas::{AtlasManifold, BuiltinId};
use charnum::chern_weil::{integrate_characteristic_number, InvariantPolynomial};
use charnum::connections::ConnectionChoice;
use charnum::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use suites::{run_suite, Suite};
use sweep::{run_sweep, write_csv, Assumptions, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "charnum", version, about = "Characteristic numbers of closed manifolds from chart atlases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one characteristic number and print the result as JSON.
    Compute(ComputeArgs),
    /// Run a verification suite over the builtin manifolds.
    Verify(VerifyArgs),
    /// Sweep a characteristic number over a perturbation family (CSV).
    Sweep(SweepArgs),
    /// Chart-norm report of every chart (JSON).
    ChartNorm(ChartNormArgs),
}

#[derive(Debug, Args)]
pub struct ManifoldArgs {
    /// Builtin manifold: s2, s4, t2_flat, t4_flat, cp2, s2_perturbed(ε), t2_perturbed(ε).
    #[arg(long, conflicts_with = "spec")]
    pub manifold: Option<String>,
    /// Manifold spec JSON file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConnectionArg {
    Lc,
    Pe,
}

impl From<ConnectionArg> for ConnectionChoice {
    fn from(c: ConnectionArg) -> Self {
        match c {
            ConnectionArg::Lc => ConnectionChoice::LeviCivita,
            ConnectionArg::Pe => ConnectionChoice::PiecewiseEuclidean,
        }
    }
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    /// euler, p<j>, c<j> or tr-power:<k>[,<k>...]
    #[arg(long, default_value = "euler")]
    pub poly: String,
    #[arg(long, value_enum, default_value = "lc")]
    pub connection: ConnectionArg,
    /// Relative quadrature step per chart, in (0, 1].
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub h: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// coordinate-independence, connection-independence,
    /// mollification-convergence, partition, distance-comparison or
    /// appendix-identities
    pub suite: String,
    /// Restrict the suite to these builtins (repeatable).
    #[arg(long)]
    pub manifold: Vec<String>,
    /// Step of the suite (finite-difference step for coordinate
    /// independence, quadrature step for connection independence).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// s2_perturbed or t2_perturbed
    #[arg(long)]
    pub family: String,
    /// ε grid as start:stop:step (inclusive).
    #[arg(long, default_value = "0:0.3:0.05", allow_hyphen_values = true)]
    pub eps: String,
    #[arg(long, default_value = "euler")]
    pub poly: String,
    #[arg(long, value_enum, default_value = "lc")]
    pub connection: ConnectionArg,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub h: f64,
    /// CSV destination; the summary JSON then goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Injectivity-radius floor (metadata only).
    #[arg(long)]
    pub iota: Option<f64>,
    /// Lower curvature bound (metadata only).
    #[arg(long)]
    pub kappa_lower: Option<f64>,
    /// Upper curvature bound (metadata only).
    #[arg(long)]
    pub kappa_upper: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ChartNormArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    /// Lattice points per axis on each support box.
    #[arg(long)]
    pub points: Option<usize>,
    /// Derivative order m of the C^{m,α} conditions.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn json(&self) -> String {
        serde_json::json!({"error": self.kind, "message": self.message}).to_string()
    }
}

/// Exit code of a library error: configuration problems give 2, atlas and
/// numerical failures give 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_)
        | Error::UnknownManifold(_)
        | Error::EulerRequiresMetricConnection
        | Error::Spec(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Dimension(_)
        | Error::GridTooSmall(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn config_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        kind: "invalid_parameter".into(),
        message: message.into(),
    }
}

pub fn resolve_manifold(args: &ManifoldArgs) -> Result<AtlasManifold, Failure> {
    match (&args.manifold, &args.spec) {
        (Some(name), None) => Ok(build(name.parse::<BuiltinId>()?)?),
        (None, Some(path)) => Ok(load_manifold(path)?),
        _ => Err(config_failure("exactly one of --manifold and --spec is required")),
    }
}

fn parse_poly(s: &str) -> Result<InvariantPolynomial, Failure> {
    Ok(s.parse::<InvariantPolynomial>()?)
}

/// Open `--out` or fall back to `stdout`.
fn sink<'a>(out: &Option<PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(stdout),
    })
}

fn write_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::from(Error::Json(e)))?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

fn compute(args: &ComputeArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let m = resolve_manifold(&args.manifold)?;
    let poly = parse_poly(&args.poly)?;
    let result = integrate_characteristic_number(&m, &poly, args.connection.into(), args.h)?;
    write_json(&result, &mut *sink(&args.out, stdout)?)?;
    Ok(EXIT_OK)
}

fn verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let suite: Suite = args.suite.parse()?;
    let ids = args
        .manifold
        .iter()
        .map(|n| n.parse::<BuiltinId>())
        .collect::<charnum::Result<Vec<_>>>()?;
    let report = run_suite(suite, &ids, args.h)?;
    write_json(&report, &mut *sink(&args.out, stdout)?)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY })
}

fn sweep(args: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let config = SweepConfig {
        family: args.family.clone(),
        eps: sweep::parse_eps_range(&args.eps)?,
        poly: parse_poly(&args.poly)?,
        connection: args.connection.into(),
        h: args.h,
        norm_points: 17,
        assumptions: Assumptions {
            injectivity_radius_floor: args.iota,
            curvature_lower: args.kappa_lower,
            curvature_upper: args.kappa_upper,
        },
    };
    charnum::chern_weil::integrate::cells_per_axis(config.h)?;
    let (rows, summary) = run_sweep(&config)?;
    match &args.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write_csv(&rows, &mut file)?;
            file.flush()?;
            write_json(&summary, stdout)?;
        }
        None => {
            write_csv(&rows, stdout)?;
            stdout.flush()?;
            write_json(&summary, stderr)?;
        }
    }
    Ok(EXIT_OK)
}

fn chart_norm(args: &ChartNormArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let m = resolve_manifold(&args.manifold)?;
    let points = args.points.unwrap_or(if m.dim() <= 2 { 33 } else { 7 });
    let entries = chart_norms(&m, points, args.order, args.alpha)?;
    write_json(&entries, &mut *sink(&args.out, stdout)?)?;
    Ok(EXIT_OK)
}

/// Run one command line, writing results to `stdout` and diagnostics to
/// `stderr`; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    charnum::configure_threads();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let failure = Failure {
                code: EXIT_CONFIG,
                kind: "usage".into(),
                message: e.to_string().trim().to_string(),
            };
            let _ = writeln!(stderr, "{}", failure.json());
            return failure.code;
        }
    };
    let outcome = match &cli.command {
        Command::Compute(a) => compute(a, stdout),
        Command::Verify(a) => verify(a, stdout),
        Command::Sweep(a) => sweep(a, stdout, stderr),
        Command::ChartNorm(a) => chart_norm(a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(stderr, "{}", failure.json());
            failure.code
        }
    }
}
