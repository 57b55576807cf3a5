//! The `wfc-fuzz` command line: argument handling and the run pipeline.

use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wfc_core::auth::{parse_auth_file, resolve_template, AuthFormat, ResolvedAuth};
use wfc_core::engine::{run_session, EngineError, SessionConfig};
use wfc_core::http::UreqTransport;
use wfc_core::openapi::{load_schema, resolve_override};
use wfc_core::report::{build_report, serialize_report, ToolMeta};
use wfc_core::stats::{matrix_from_csv, render_table, Direction};
use wfc_core::testgen::{emit_suite, select_suite, EmitOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SCHEMA_ISSUES: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;
pub const EXIT_INVALID_CONFIG: i32 = 4;

const INDEX_HTML: &str = include_str!("../viewer/index.html");
const VIEWER_JS: &str = include_str!("../viewer/assets/viewer.js");
const VIEWER_CSS: &str = include_str!("../viewer/assets/viewer.css");
const WEBREPORT_PY: &str = include_str!("../launchers/webreport.py");
const WEBREPORT_BAT: &str = include_str!("../launchers/webreport.bat");
const WEBREPORT_COMMAND: &str = include_str!("../launchers/webreport.command");

#[derive(Debug, Parser)]
#[command(name = "wfc-fuzz", version, about = "Black-box fuzzing of REST APIs described by OpenAPI")]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub fuzz: FuzzArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank a result matrix and print the summary table with a Friedman test
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    /// OpenAPI v2 or v3 document, JSON or YAML
    #[arg(long, required = true)]
    pub schema: Option<PathBuf>,
    /// Where the API runs, e.g. http://localhost:8080
    #[arg(long, required = true)]
    pub base_url: Option<String>,
    /// Time budget of the fuzzing session
    #[arg(long, alias = "duration", default_value_t = 60)]
    pub duration_seconds: u64,
    /// Authentication configuration (auth.yaml)
    #[arg(long)]
    pub auth: Option<PathBuf>,
    #[arg(long, default_value = "wfc-out")]
    pub output: PathBuf,
    /// Seed for all random choices; drawn from entropy when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Do not write the web report
    #[arg(long)]
    pub no_viewer: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// CSV with a header `label,<treatment>...` and one row per block
    pub csv: PathBuf,
    #[arg(long, value_enum, default_value_t = DirectionArg::Higher)]
    pub better: DirectionArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Higher,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub schema_path: PathBuf,
    pub base_url: String,
    pub duration_seconds: u64,
    pub auth_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
    pub emit_viewer: bool,
}

impl CliConfig {
    pub fn new(schema_path: impl Into<PathBuf>, base_url: impl Into<String>, duration_seconds: u64) -> Self {
        Self {
            schema_path: schema_path.into(),
            base_url: base_url.into(),
            duration_seconds,
            auth_path: None,
            output_dir: PathBuf::from("wfc-out"),
            seed: None,
            emit_viewer: true,
        }
    }
}

impl TryFrom<FuzzArgs> for CliConfig {
    type Error = CliError;

    fn try_from(a: FuzzArgs) -> Result<Self, CliError> {
        Ok(Self {
            schema_path: a.schema.ok_or_else(|| CliError::InvalidConfig("--schema is required".into()))?,
            base_url: a.base_url.ok_or_else(|| CliError::InvalidConfig("--base-url is required".into()))?,
            duration_seconds: a.duration_seconds,
            auth_path: a.auth,
            output_dir: a.output,
            seed: a.seed,
            emit_viewer: !a.no_viewer,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid-config: {0}")]
    InvalidConfig(String),
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidConfig(_) => EXIT_INVALID_CONFIG,
            CliError::Unreachable(_) => EXIT_UNREACHABLE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub exit_code: i32,
    pub seed: u64,
    pub tests_written: usize,
    pub faults: usize,
    pub calls: usize,
    pub schema_issues: usize,
    pub interrupted: bool,
    pub files: Vec<PathBuf>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn load_auth(path: &Path) -> Result<Vec<ResolvedAuth>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::InvalidConfig(format!("cannot read auth file {}: {e}", path.display())))?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => AuthFormat::Json,
        _ => AuthFormat::Yaml,
    };
    let file = parse_auth_file(&text, format).map_err(|e| CliError::InvalidConfig(format!("{}: {e}", path.display())))?;
    resolve_template(&file).map_err(|e| CliError::InvalidConfig(format!("{}: {e}", path.display())))
}

/// The whole pipeline: ingest, fuzz, select, emit, report, viewer.
pub fn run(config: &CliConfig, stop: Arc<AtomicBool>) -> Result<RunSummary, CliError> {
    if config.duration_seconds < 1 {
        return Err(CliError::InvalidConfig("--duration-seconds must be at least 1".into()));
    }
    let text = std::fs::read_to_string(&config.schema_path)
        .map_err(|e| CliError::InvalidConfig(format!("cannot read schema {}: {e}", config.schema_path.display())))?;
    let schema = load_schema(&text).map_err(|e| CliError::InvalidConfig(format!("{}: {e}", config.schema_path.display())))?;
    for issue in &schema.issues {
        log::warn!("schema {issue}");
    }
    let auth_entries = match &config.auth_path {
        Some(p) => load_auth(p)?,
        None => Vec::new(),
    };
    let base_url = resolve_override(&schema, &config.base_url).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let seed = config.seed.unwrap_or_else(|| {
        let drawn = rand::random::<u64>();
        println!("seed: {drawn}");
        drawn
    });

    let mut session_config = SessionConfig::new(schema.clone(), base_url.clone(), config.duration_seconds, seed)
        .with_auth(auth_entries.clone());
    session_config.stop = stop;
    let transport = UreqTransport::new(Duration::from_secs(10));
    let session = run_session(&session_config, &transport).map_err(|e| match e {
        EngineError::TargetUnreachable { url, reason } => CliError::Unreachable(format!("{url}: {reason}")),
        other => CliError::InvalidConfig(other.to_string()),
    })?;

    let selection = select_suite(&session);
    let suite = emit_suite(&selection, &session, &schema, &auth_entries, &EmitOptions::new(base_url))
        .map_err(|e| CliError::Io(e.to_string()))?;
    let report = build_report(&session, &suite, &ToolMeta::default(), chrono::Utc::now())
        .map_err(|e| CliError::Io(e.to_string()))?;

    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut files = Vec::new();
    let mut write = |rel: &str, text: &str| -> Result<(), CliError> {
        let path = out.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        std::fs::write(&path, text).map_err(io_err(&path))?;
        files.push(path);
        Ok(())
    };
    for f in &suite.files {
        write(&f.path, &f.text)?;
    }
    write("report.json", &serialize_report(&report))?;
    if config.emit_viewer {
        write("index.html", INDEX_HTML)?;
        write("assets/viewer.js", VIEWER_JS)?;
        write("assets/viewer.css", VIEWER_CSS)?;
        write("webreport.py", WEBREPORT_PY)?;
        write("webreport.bat", WEBREPORT_BAT)?;
        write("webreport.command", WEBREPORT_COMMAND)?;
        make_executable(&out.join("webreport.command"))?;
    }

    Ok(RunSummary {
        exit_code: if schema.issues.is_empty() { EXIT_OK } else { EXIT_SCHEMA_ISSUES },
        seed,
        tests_written: suite.tests.len(),
        faults: session.faults.len(),
        calls: session.calls_made,
        schema_issues: schema.issues.len(),
        interrupted: session.interrupted,
        files,
    })
}

#[cfg(unix)]
fn make_executable(path: &Path) -> Result<(), CliError> {
    use std::os::unix::fs::PermissionsExt;
    std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o755)).map_err(io_err(path))
}

#[cfg(not(unix))]
fn make_executable(_: &Path) -> Result<(), CliError> {
    Ok(())
}

pub fn run_stats(args: &StatsArgs) -> Result<String, CliError> {
    let text = std::fs::read_to_string(&args.csv).map_err(io_err(&args.csv))?;
    let direction = match args.better {
        DirectionArg::Higher => Direction::HigherBetter,
        DirectionArg::Lower => Direction::LowerBetter,
    };
    let m = matrix_from_csv::<f64>(&text, direction).map_err(|e| CliError::InvalidConfig(format!("{}: {e}", args.csv.display())))?;
    Ok(render_table(&m))
}

/// Parses `argv` and runs; returns the process exit code.
pub fn main_with_args<I, T>(argv: I, stop: Arc<AtomicBool>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Some(Command::Stats(args)) => run_stats(&args).map(|table| {
            print!("{table}");
            EXIT_OK
        }),
        None => CliConfig::try_from(cli.fuzz).and_then(|config| {
            let summary = run(&config, stop)?;
            println!(
                "wfc: done: {} calls, {} faults, {} tests written to {}{}",
                summary.calls,
                summary.faults,
                summary.tests_written,
                config.output_dir.display(),
                if summary.interrupted { " (interrupted)" } else { "" }
            );
            if summary.schema_issues > 0 {
                println!("wfc: schema-issues: {}", summary.schema_issues);
            }
            Ok(summary.exit_code)
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("wfc: error: {e}");
        e.exit_code()
    })
}
