//! The `equiaffine` command line: `generate`, `analyze`, `verify`, `export`.
//!
//! Exit codes: 0 success, 1 verification failed, 2 parse or format error,
//! 3 integration diverged, 4 analysis not applicable to the surface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::Error;
use crate::expr::{parse, Expr};
use crate::generator::{generate, GeneratorInput, Preset, DEFAULT_RK_STEP};
use crate::grid::{GridSpec, SurfaceGrid};
use crate::invariants::{analyze, AnalysisOptions, SurfaceSource};
use crate::io;
use crate::verify::{verify_grid, VerifyOptions, GRID_TOL};

/// Stable process exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    VerificationFailed = 1,
    BadInput = 2,
    Diverged = 3,
    NotApplicable = 4,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e as u8)
    }
}

/// Error with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    fn bad_input(message: impl Into<String>) -> Self {
        CliError {
            exit: Exit::BadInput,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::Divergence { .. } => Exit::Diverged,
            Error::DegenerateTangent { .. }
            | Error::SingularFrame { .. }
            | Error::NonPositiveH12 { .. }
            | Error::InconsistentL12 { .. }
            | Error::GridTooCoarse { .. }
            | Error::NotImproperSphere { .. } => Exit::NotApplicable,
            _ => Exit::BadInput,
        };
        CliError {
            exit,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T = Exit> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "equiaffine", version, about = "Equiaffine invariants and affine-flat, affine-minimal surface generation")]
pub struct Cli {
    /// TOML file with default values for any flag (kebab-case keys); flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the profile ODE for ℓ(v), f(v) and write the ruled surface grid.
    Generate(GenerateArgs),
    /// Compute h, the surface type, K_aff, H_aff, ℓ and the affine normal at every grid point.
    Analyze(AnalyzeArgs),
    /// Check flatness, minimality, ruledness and (with --ell/--f) the frame normal form.
    Verify(VerifyArgs),
    /// Convert a grid file to an OBJ mesh or CSV points.
    Export(ExportArgs),
}

#[derive(Debug, Default, Args)]
pub struct GridArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub u_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub u_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub v_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub v_max: Option<f64>,
    #[arg(long)]
    pub nu: Option<usize>,
    #[arg(long)]
    pub nv: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// ℓ(v)
    #[arg(long, allow_hyphen_values = true)]
    pub ell: Option<String>,
    /// f(v)
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Evaluate a closed-form preset instead: saddle, cubic, sphere, cosh, cos.
    #[arg(long)]
    pub preset: Option<String>,
    /// Parameter a of the cosh and cos presets.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub rk_step: Option<f64>,
    /// Grid JSON output; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub obj: Option<PathBuf>,
    /// Store the frame field with the grid.
    #[arg(long)]
    pub frames: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Grid JSON file (finite-difference mode).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Surface components "x;y;z" in u, v (analytic mode).
    #[arg(long, allow_hyphen_values = true)]
    pub surface: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Tolerance for max(|h11|, |h22|) in the asymptotic-coordinate check.
    #[arg(long)]
    pub asymptotic_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub ell: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Tolerance for max|K_aff| and max|H_aff|.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Tolerance for the frame normal form.
    #[arg(long)]
    pub mc_tol: Option<f64>,
    #[arg(long)]
    pub asymptotic_tol: Option<f64>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub obj: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Values read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    pub ell: Option<String>,
    pub f: Option<String>,
    pub preset: Option<String>,
    pub a: Option<f64>,
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    pub nu: Option<usize>,
    pub nv: Option<usize>,
    pub rk_step: Option<f64>,
    pub out: Option<PathBuf>,
    pub obj: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub frames: Option<bool>,
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub surface: Option<String>,
    pub report: Option<PathBuf>,
    pub asymptotic_tol: Option<f64>,
    pub tol: Option<f64>,
    pub mc_tol: Option<f64>,
    pub json: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| CliError::bad_input(format!("{}: {e}", path.display())))
    }
}

fn pick<T>(flag: Option<T>, config: Option<T>) -> Option<T> {
    flag.or(config)
}

fn parse_expr(what: &str, src: &str) -> CliResult<Expr> {
    parse(src).map_err(|e| CliError::bad_input(format!("{what} `{src}`: {e}")))
}

fn grid_spec(g: &GridArgs, c: &ConfigFile) -> CliResult<GridSpec> {
    let spec = GridSpec::new(
        (pick(g.u_min, c.u_min).unwrap_or(-1.0), pick(g.u_max, c.u_max).unwrap_or(1.0)),
        (pick(g.v_min, c.v_min).unwrap_or(-1.0), pick(g.v_max, c.v_max).unwrap_or(1.0)),
        pick(g.nu, c.nu).unwrap_or(41),
        pick(g.nv, c.nv).unwrap_or(41),
    )?;
    Ok(spec)
}

fn read_input(flag: Option<PathBuf>, c: &ConfigFile) -> CliResult<SurfaceGrid> {
    let path = pick(flag, c.input.clone()).ok_or_else(|| CliError::bad_input("--in is required"))?;
    io::read_grid(&path).map_err(|e| match e {
        Error::Io(io) => CliError::bad_input(format!("{}: {io}", path.display())),
        e => CliError::bad_input(format!("{}: {e}", path.display())),
    })
}

/// Splits `"x;y;z"` into three component expressions.
pub fn parse_surface(src: &str) -> CliResult<[Expr; 3]> {
    let parts: Vec<&str> = src.split(';').collect();
    if parts.len() != 3 {
        return Err(CliError::bad_input(format!(
            "surface must have three `;`-separated components, got {}",
            parts.len()
        )));
    }
    let names = ["x", "y", "z"];
    let mut out = Vec::with_capacity(3);
    for (name, p) in names.iter().zip(parts) {
        out.push(parse_expr(&format!("component {name}"), p)?);
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

fn cmd_generate(args: GenerateArgs, c: &ConfigFile) -> CliResult {
    let spec = grid_spec(&args.grid, c)?;
    let rk_step = pick(args.rk_step, c.rk_step).unwrap_or(DEFAULT_RK_STEP);
    let ell = pick(args.ell, c.ell.clone());
    let f = pick(args.f, c.f.clone());
    let mut grid = match pick(args.preset, c.preset.clone()) {
        Some(name) => {
            if ell.is_some() {
                return Err(CliError::bad_input("--ell cannot be combined with --preset"));
            }
            let f = f.map(|s| parse_expr("f", &s)).transpose()?;
            Preset::from_name(&name, pick(args.a, c.a), f)?.grid(&spec, rk_step)?
        }
        None => {
            let ell = parse_expr("ell", &ell.ok_or_else(|| CliError::bad_input("--ell is required"))?)?;
            let f = parse_expr("f", &f.ok_or_else(|| CliError::bad_input("--f is required"))?)?;
            generate(&GeneratorInput::new(ell, f, spec, rk_step)?)?
        }
    };
    if !(args.frames || c.frames.unwrap_or(false)) {
        grid.frames = None;
    }
    let json = io::grid_to_json(&grid)?;
    match pick(args.out, c.out.clone()) {
        Some(path) => {
            io::write_atomic(&path, json.as_bytes())?;
            eprintln!("wrote {}×{} grid to {}", grid.nu(), grid.nv(), path.display());
        }
        None => println!("{json}"),
    }
    if let Some(path) = pick(args.obj, c.obj.clone()) {
        io::write_atomic(&path, io::grid_to_obj(&grid)?.as_bytes())?;
    }
    Ok(Exit::Ok)
}

fn cmd_analyze(args: AnalyzeArgs, c: &ConfigFile) -> CliResult {
    let opts = AnalysisOptions {
        asymptotic_tol: pick(args.asymptotic_tol, c.asymptotic_tol),
        ..AnalysisOptions::default()
    };
    let input = pick(args.input, c.input.clone());
    let surface = pick(args.surface, c.surface.clone());
    let analysis = match (input, surface) {
        (Some(_), Some(_)) => return Err(CliError::bad_input("give either --in or --surface, not both")),
        (None, None) => return Err(CliError::bad_input("one of --in or --surface is required")),
        (Some(path), None) => {
            let grid = read_input(Some(path), c)?;
            analyze(SurfaceSource::Grid(&grid), &opts)?
        }
        (None, Some(src)) => {
            let comps = parse_surface(&src)?;
            let spec = grid_spec(&args.grid, c)?;
            let (u, v) = (spec.u_values(), spec.v_values());
            analyze(
                SurfaceSource::Analytic {
                    components: &comps,
                    u: &u,
                    v: &v,
                },
                &opts,
            )?
        }
    };
    if let Some(path) = pick(args.report, c.report.clone()) {
        io::write_atomic(&path, io::report_to_json(&analysis)?.as_bytes())?;
    }
    if let Some(path) = pick(args.csv, c.csv.clone()) {
        io::write_atomic(&path, io::report_to_csv(&analysis)?.as_bytes())?;
    }
    println!("{}", io::AnalysisSummary::of(&analysis));
    Ok(if analysis.affine_computed() { Exit::Ok } else { Exit::NotApplicable })
}

fn cmd_verify(args: VerifyArgs, c: &ConfigFile) -> CliResult {
    let grid = read_input(args.input, c)?;
    let ell = pick(args.ell, c.ell.clone()).map(|s| parse_expr("ell", &s)).transpose()?;
    let f = pick(args.f, c.f.clone()).map(|s| parse_expr("f", &s)).transpose()?;
    if ell.is_some() != f.is_some() {
        return Err(CliError::bad_input("--ell and --f must be given together"));
    }
    if ell.is_some() && grid.frames.is_none() {
        return Err(CliError::bad_input("the normal-form check needs a grid generated with --frames"));
    }
    let defaults = VerifyOptions::default();
    let opts = VerifyOptions {
        tol: pick(args.tol, c.tol).unwrap_or(GRID_TOL),
        mc_tol: pick(args.mc_tol, c.mc_tol).unwrap_or(defaults.mc_tol),
        ell,
        f,
        analysis: AnalysisOptions {
            asymptotic_tol: pick(args.asymptotic_tol, c.asymptotic_tol),
            ..AnalysisOptions::default()
        },
        ..defaults
    };
    let (report, _) = verify_grid(&grid, &opts)?;
    println!("{report}");
    if let Some(path) = pick(args.json, c.json.clone()) {
        io::write_atomic(&path, io::to_json(&report, true)?.as_bytes())?;
    }
    Ok(if report.passed { Exit::Ok } else { Exit::VerificationFailed })
}

fn cmd_export(args: ExportArgs, c: &ConfigFile) -> CliResult {
    let grid = read_input(args.input, c)?;
    let obj = pick(args.obj, c.obj.clone());
    let csv = pick(args.csv, c.csv.clone());
    if obj.is_none() && csv.is_none() {
        return Err(CliError::bad_input("nothing to export: give --obj and/or --csv"));
    }
    if let Some(path) = obj {
        io::write_atomic(&path, io::grid_to_obj(&grid)?.as_bytes())?;
    }
    if let Some(path) = csv {
        io::write_atomic(&path, io::grid_to_csv(&grid)?.as_bytes())?;
    }
    Ok(Exit::Ok)
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> CliResult {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Generate(a) => cmd_generate(a, &config),
        Command::Analyze(a) => cmd_analyze(a, &config),
        Command::Verify(a) => cmd_verify(a, &config),
        Command::Export(a) => cmd_export(a, &config),
    }
}

/// Parses `args`, runs the command and reports errors on standard error.
pub fn run<I, T>(args: I) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Exit::BadInput } else { Exit::Ok };
        }
    };
    match execute(cli) {
        Ok(exit) => exit,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.exit
        }
    }
}
