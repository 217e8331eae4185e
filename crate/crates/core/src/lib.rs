//! Component compiler core.
//!
//! A component is a script plus a YAML config describing its arguments,
//! resources, engines and tests. This crate parses and validates configs,
//! implements the argument engine shared by in-process parsing and the
//! generated wrappers, and emits the native, container and workflow build
//! targets. It also runs component test suites and batch operations over
//! trees of components.

pub mod args;
pub mod build;
pub mod config;
pub mod container;
pub mod harness;
pub mod inject;
pub mod namespace;
pub mod native;
pub mod shell;
pub mod workflow;

mod wrapper;

pub use args::{
    check_files, coerce, parse_args, render_help, ArgType, ArgumentSpec, CoerceError, Direction,
    FileError, ParamMap, ParamValue, ParseOutcome, UsageError, Value,
};
pub use build::{build, BuildArtifact, BuildError, GenerateError};
pub use config::{
    load_config, parse_config, resolve_resources, resolve_test_resources, validate_config,
    view_config, ComponentConfig, Diagnostic, EngineKind, EngineSpec, Language, ParseError,
    ParsedConfig, Resource, ResourceError, ResourceKind, Severity, SetupRequirement,
};
pub use harness::{format_report, run_tests, CaseStatus, ReportStyle, TestCase, TestReport};
pub use inject::{inject, serialize_params, InjectError, InjectionBlock, Meta};

/// Version of the compkit tool itself, distinct from component versions.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable that keeps temporary directories for inspection.
pub const DEBUG_ENV: &str = "COMPKIT_DEBUG";

pub(crate) fn debug_enabled() -> bool {
    std::env::var(DEBUG_ENV).map(|v| v == "1").unwrap_or(false)
}
