//! Component test runner.
//!
//! Every script among a component's test resources is a test. Each runs in
//! its own working directory holding a copy of all test resources, with the
//! freshly built executable reachable by bare name on `PATH`. A test passes
//! when it exits 0.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use serde::Serialize;

use crate::build::{build, copy_resources};
use crate::config::{resolve_test_resources, ComponentConfig, EngineKind, ResourceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseStatus {
    Pass,
    Fail,
    /// Harness fault: the build failed, a runtime is missing or the engine
    /// cannot run tests here.
    Error,
}

impl CaseStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseStatus::Pass => "pass",
            CaseStatus::Fail => "fail",
            CaseStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub test_name: String,
    pub status: CaseStatus,
    pub duration_ms: u64,
    /// Stdout followed by stderr; only kept for cases that did not pass.
    pub captured_output: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestReport {
    pub component: String,
    pub engine: EngineKind,
    pub cases: Vec<TestCase>,
    /// Set when the component defines no tests.
    pub no_tests: bool,
}

impl TestReport {
    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        for case in &self.cases {
            match case.status {
                CaseStatus::Pass => s.passed += 1,
                CaseStatus::Fail => s.failed += 1,
                CaseStatus::Error => s.errored += 1,
            }
        }
        s
    }

    /// True when nothing failed or errored.
    pub fn success(&self) -> bool {
        let s = self.summary();
        s.failed == 0 && s.errored == 0
    }

    /// A report holding a single harness error.
    pub fn error(cfg: &ComponentConfig, engine: EngineKind, name: &str, message: String) -> Self {
        TestReport {
            component: cfg.name.clone(),
            engine,
            cases: vec![TestCase {
                test_name: name.to_string(),
                status: CaseStatus::Error,
                duration_ms: 0,
                captured_output: Some(message),
            }],
            no_tests: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportStyle {
    Human,
    Machine,
}

pub const NO_TESTS_WARNING: &str = "component defines no tests";

/// Build `cfg` for `engine` into a fresh sandbox and run its tests in
/// config order.
pub fn run_tests(cfg: &ComponentConfig, engine: EngineKind) -> TestReport {
    let sandbox = match tempfile::Builder::new().prefix("compkit_test_").tempdir() {
        Ok(dir) => dir,
        Err(e) => return TestReport::error(cfg, engine, "build", format!("cannot create sandbox: {e}")),
    };
    let report = run_in(cfg, engine, sandbox.path());
    if crate::debug_enabled() {
        let kept = sandbox.keep();
        eprintln!("debug: keeping {}", kept.display());
    }
    report
}

fn run_in(cfg: &ComponentConfig, engine: EngineKind, sandbox: &Path) -> TestReport {
    if engine == EngineKind::Container && std::env::var("COMPKIT_TEST_CONTAINER").as_deref() != Ok("1") {
        return TestReport::error(
            cfg,
            engine,
            "build",
            "container tests need a container daemon; set COMPKIT_TEST_CONTAINER=1 to enable them".into(),
        );
    }
    let build_dir = sandbox.join("build");
    if let Err(e) = build(cfg, engine, &build_dir) {
        return TestReport::error(cfg, engine, "build", e.to_string());
    }
    let resources = match resolve_test_resources(cfg) {
        Ok(r) => r,
        Err(e) => return TestReport::error(cfg, engine, "build", e.to_string()),
    };

    let tests: Vec<_> = resources
        .iter()
        .filter(|r| r.resource.kind() == ResourceKind::Script)
        .collect();
    let mut report = TestReport {
        component: cfg.name.clone(),
        engine,
        cases: Vec::with_capacity(tests.len()),
        no_tests: tests.is_empty(),
    };
    let path_var = search_path(&build_dir);
    for (i, test) in tests.iter().enumerate() {
        let name = test.dest.clone();
        let workdir = sandbox.join("tests").join(format!("{i}"));
        let started = Instant::now();
        let case = match copy_resources(&resources, &workdir) {
            Err(e) => error_case(name, e.to_string()),
            Ok(_) => {
                let language = test.resource.language.expect("script resources have a language");
                run_case(name, language.runtime(), &workdir, &test.dest, &path_var, started)
            }
        };
        report.cases.push(case);
    }
    report
}

fn error_case(test_name: String, message: String) -> TestCase {
    TestCase {
        test_name,
        status: CaseStatus::Error,
        duration_ms: 0,
        captured_output: Some(message),
    }
}

fn search_path(build_dir: &Path) -> OsString {
    let mut dirs = vec![build_dir.to_path_buf()];
    if let Some(existing) = std::env::var_os("PATH") {
        dirs.extend(std::env::split_paths(&existing));
    }
    std::env::join_paths(dirs).unwrap_or_else(|_| build_dir.as_os_str().to_owned())
}

fn run_case(
    test_name: String,
    runtime: &str,
    workdir: &Path,
    script: &str,
    path_var: &OsString,
    started: Instant,
) -> TestCase {
    let runtime_path: PathBuf = match which::which(runtime) {
        Ok(p) => p,
        Err(_) => return error_case(test_name, format!("runtime '{runtime}' not found on PATH")),
    };
    let output = Command::new(runtime_path)
        .arg(script)
        .current_dir(workdir)
        .env("PATH", path_var)
        .stdin(std::process::Stdio::null())
        .output();
    let duration_ms = started.elapsed().as_millis() as u64;
    match output {
        Err(e) => error_case(test_name, format!("cannot start '{runtime}': {e}")),
        Ok(out) => {
            let status = if out.status.success() { CaseStatus::Pass } else { CaseStatus::Fail };
            let captured_output = (status != CaseStatus::Pass).then(|| {
                let mut text = String::from_utf8_lossy(&out.stdout).into_owned();
                text.push_str(&String::from_utf8_lossy(&out.stderr));
                text
            });
            TestCase {
                test_name,
                status,
                duration_ms,
                captured_output,
            }
        }
    }
}

#[derive(Serialize)]
struct CaseRecord<'a> {
    r#type: &'static str,
    component: &'a str,
    engine: &'static str,
    test_name: &'a str,
    status: CaseStatus,
    duration_ms: u64,
    captured_output: Option<&'a str>,
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    r#type: &'static str,
    component: &'a str,
    engine: &'static str,
    passed: usize,
    failed: usize,
    errored: usize,
    warning: Option<&'static str>,
}

/// Render a report. Machine style is JSON lines: one `case` record per
/// case followed by one `summary` record.
pub fn format_report(report: &TestReport, style: ReportStyle) -> String {
    match style {
        ReportStyle::Human => human(report),
        ReportStyle::Machine => machine(report),
    }
}

/// `N passed, M failed, K errored`.
pub fn summary_line(s: Summary) -> String {
    format!("{} passed, {} failed, {} errored", s.passed, s.failed, s.errored)
}

fn human(report: &TestReport) -> String {
    let mut out = String::new();
    writeln!(out, "{} ({})", report.component, report.engine).unwrap();
    if !report.cases.is_empty() {
        let width = report
            .cases
            .iter()
            .map(|c| c.test_name.len())
            .chain(["TEST".len()])
            .max()
            .unwrap_or(4);
        writeln!(out, "  {:<width$}  {:<6}  {:>8}", "TEST", "STATUS", "TIME").unwrap();
        for case in &report.cases {
            writeln!(
                out,
                "  {:<width$}  {:<6}  {:>5} ms",
                case.test_name,
                case.status.as_str(),
                case.duration_ms
            )
            .unwrap();
        }
        for case in &report.cases {
            if let Some(text) = &case.captured_output {
                writeln!(out, "\n--- {} ({})", case.test_name, case.status.as_str()).unwrap();
                for line in text.lines() {
                    writeln!(out, "  | {line}").unwrap();
                }
            }
        }
        out.push('\n');
    }
    if report.no_tests {
        writeln!(out, "warning: {NO_TESTS_WARNING}").unwrap();
    }
    writeln!(out, "{}", summary_line(report.summary())).unwrap();
    out
}

fn machine(report: &TestReport) -> String {
    let mut out = String::new();
    for case in &report.cases {
        let record = CaseRecord {
            r#type: "case",
            component: &report.component,
            engine: report.engine.as_str(),
            test_name: &case.test_name,
            status: case.status,
            duration_ms: case.duration_ms,
            captured_output: case.captured_output.as_deref(),
        };
        out.push_str(&serde_json::to_string(&record).expect("records serialize"));
        out.push('\n');
    }
    let s = report.summary();
    let record = SummaryRecord {
        r#type: "summary",
        component: &report.component,
        engine: report.engine.as_str(),
        passed: s.passed,
        failed: s.failed,
        errored: s.errored,
        warning: report.no_tests.then_some(NO_TESTS_WARNING),
    };
    out.push_str(&serde_json::to_string(&record).expect("records serialize"));
    out.push('\n');
    out
}
