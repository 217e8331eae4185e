//! `compkit`: build, run and test script components.
//!
//! Exit codes: 0 success, 1 user or validation error (and failing tests),
//! 2 config parse error or command-line usage error. A component run
//! forwards the component's own exit code.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use clap::{Parser, Subcommand, ValueEnum};
use compkit_core::harness::ReportStyle;
use compkit_core::namespace::{self, NsBuildOptions};
use compkit_core::{
    build, format_report, load_config, run_tests, validate_config, view_config, ComponentConfig,
    EngineKind,
};

#[derive(Parser)]
#[command(name = "compkit", version, about = "Turn scripts plus a YAML config into executables, containers and workflow modules")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Native,
    Container,
    Workflow,
}

impl From<Engine> for EngineKind {
    fn from(e: Engine) -> Self {
        match e {
            Engine::Native => EngineKind::Native,
            Engine::Container => EngineKind::Container,
            Engine::Workflow => EngineKind::Workflow,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Machine,
}

impl From<Format> for ReportStyle {
    fn from(f: Format) -> Self {
        match f {
            Format::Human => ReportStyle::Human,
            Format::Machine => ReportStyle::Machine,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a component into a temporary directory and run it.
    Run {
        /// Component config file.
        config: PathBuf,
        #[arg(short, long, value_enum, default_value = "native")]
        engine: Engine,
        /// Arguments for the component, after `--`.
        #[arg(last = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// Build a component for one engine.
    Build {
        config: PathBuf,
        #[arg(short, long, value_enum, default_value = "native")]
        engine: Engine,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a component's tests and print a report.
    Test {
        config: PathBuf,
        #[arg(short, long, value_enum, default_value = "native")]
        engine: Engine,
        #[arg(short, long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Print the normalized config with all defaults filled in.
    ConfigView { config: PathBuf },
    /// Build every component below a source tree.
    NsBuild {
        #[arg(short, long, default_value = "src")]
        src: PathBuf,
        #[arg(short, long, default_value = "target")]
        target: PathBuf,
        /// Engines to build; defaults to every engine each component declares.
        #[arg(short, long, value_enum)]
        engine: Vec<Engine>,
        /// Maximum number of concurrent builds.
        #[arg(short, long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        parallel: u16,
        /// Also build container images.
        #[arg(long)]
        setup: bool,
        #[arg(short, long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Test every component below a source tree.
    NsTest {
        #[arg(short, long, default_value = "src")]
        src: PathBuf,
        /// Engines to test with; defaults to native.
        #[arg(short, long, value_enum)]
        engine: Vec<Engine>,
        #[arg(short, long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        parallel: u16,
        #[arg(short, long, value_enum, default_value = "human")]
        format: Format,
    },
    /// List the components below a source tree.
    NsList {
        #[arg(short, long, default_value = "src")]
        src: PathBuf,
        #[arg(short, long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Print the tool version.
    Version,
}

/// A failure rendered as `error: ...` with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn user(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn tool_version() -> String {
    format!("compkit {}", compkit_core::TOOL_VERSION)
}

fn load(path: &Path) -> Result<ComponentConfig, Failure> {
    let parsed = load_config(path).map_err(|e| Failure { code: 2, message: e.to_string() })?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(parsed.config)
}

/// Load and validate; all diagnostics go to stderr.
fn load_valid(path: &Path) -> Result<ComponentConfig, Failure> {
    let cfg = load(path)?;
    let diags = validate_config(&cfg);
    for d in &diags {
        eprintln!("{d}");
    }
    if diags.iter().any(|d| d.is_error()) {
        return Err(Failure::user(String::new()));
    }
    Ok(cfg)
}

fn require_engine(cfg: &ComponentConfig, kind: EngineKind) -> Result<(), Failure> {
    if cfg.has_engine(kind) || kind == EngineKind::Native {
        Ok(())
    } else {
        Err(Failure::user(format!("engine `{kind}` is not configured for {}", cfg.name)))
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, Failure> {
    match cmd {
        Cmd::Version => {
            println!("{}", tool_version());
            Ok(0)
        }
        Cmd::ConfigView { config } => {
            let cfg = load(&config)?;
            print!("{}", view_config(&cfg));
            Ok(0)
        }
        Cmd::Build { config, engine, output } => {
            let cfg = load_valid(&config)?;
            let kind = engine.into();
            require_engine(&cfg, kind)?;
            let artifact = build(&cfg, kind, &output).map_err(|e| Failure::user(e.to_string()))?;
            println!("{}", artifact.entry_path.display());
            Ok(0)
        }
        Cmd::Run { config, engine, args } => run(&config, engine.into(), &args),
        Cmd::Test { config, engine, format } => {
            let cfg = load(&config)?;
            let kind = engine.into();
            require_engine(&cfg, kind)?;
            let report = run_tests(&cfg, kind);
            print!("{}", format_report(&report, format.into()));
            Ok(if report.success() { 0 } else { 1 })
        }
        Cmd::NsBuild { src, target, engine, parallel, setup, format } => {
            let opts = NsBuildOptions {
                engines: (!engine.is_empty()).then(|| engine.into_iter().map(Into::into).collect()),
                parallel: parallel.into(),
                setup,
            };
            let report = namespace::ns_build(&src, &target, &opts)
                .map_err(|e| Failure::user(format!("{}: {e}", src.display())))?;
            print!("{}", namespace::format_batch_report(&report, format.into()));
            Ok(if report.success() { 0 } else { 1 })
        }
        Cmd::NsTest { src, engine, parallel, format } => {
            let engines: Vec<EngineKind> = engine.into_iter().map(Into::into).collect();
            let engines = (!engines.is_empty()).then_some(engines.as_slice());
            let report = namespace::ns_test(&src, engines, parallel.into())
                .map_err(|e| Failure::user(format!("{}: {e}", src.display())))?;
            print!("{}", namespace::format_ns_test_report(&report, format.into()));
            Ok(if report.success() { 0 } else { 1 })
        }
        Cmd::NsList { src, format } => {
            let entries = namespace::scan(&src).map_err(|e| Failure::user(format!("{}: {e}", src.display())))?;
            print!("{}", namespace::ns_list(&entries, format.into()));
            Ok(0)
        }
    }
}

fn run(config: &Path, kind: EngineKind, args: &[String]) -> Result<u8, Failure> {
    let cfg = load_valid(config)?;
    require_engine(&cfg, kind)?;
    if kind == EngineKind::Workflow {
        return Err(Failure::user("workflow modules cannot be run directly; build them with `compkit build`"));
    }
    let dir = tempfile::Builder::new()
        .prefix("compkit_run_")
        .tempdir()
        .map_err(|e| Failure::user(format!("cannot create a temporary directory: {e}")))?;
    let out = dir.path().join(&cfg.name);
    let artifact = build(&cfg, kind, &out).map_err(|e| Failure::user(e.to_string()))?;
    let status = Command::new(&artifact.entry_path)
        .args(args)
        .status()
        .map_err(|e| Failure::user(format!("cannot run {}: {e}", artifact.entry_path.display())))?;
    Ok(exit_code(status))
}

#[cfg(unix)]
fn exit_code(status: std::process::ExitStatus) -> u8 {
    use std::os::unix::process::ExitStatusExt;
    match (status.code(), status.signal()) {
        (Some(code), _) => code as u8,
        (None, Some(sig)) => 128u8.wrapping_add(sig as u8),
        _ => 1,
    }
}

#[cfg(not(unix))]
fn exit_code(status: std::process::ExitStatus) -> u8 {
    status.code().map(|c| c as u8).unwrap_or(1)
}
