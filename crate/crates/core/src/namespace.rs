//! Batch operations over a tree of components.
//!
//! A component's namespace is the one declared in its config or, failing
//! that, the directory holding the config relative to the scanned root.
//! Builds land in `<target>/<engine>/<namespace>/<name>/`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use crate::build::build;
use crate::config::{
    load_config, validate_config, view_config, ComponentConfig, Diagnostic, EngineKind,
    CONFIG_SUFFIX,
};
use crate::container::ImageRef;
use crate::harness::{run_tests, summary_line, ReportStyle, Summary, TestReport};

#[derive(Debug, Clone, PartialEq)]
pub enum EntryStatus {
    Ok,
    /// Holds at least one error diagnostic.
    Invalid(Vec<Diagnostic>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamespaceEntry {
    pub namespace: Option<String>,
    pub name: String,
    pub config_path: PathBuf,
    pub status: EntryStatus,
    /// Present whenever the config parsed, even if it failed validation.
    pub config: Option<ComponentConfig>,
}

impl NamespaceEntry {
    pub fn is_ok(&self) -> bool {
        self.status == EntryStatus::Ok
    }

    /// `namespace/name`, or just the name at the root.
    pub fn qualified_name(&self) -> String {
        match &self.namespace {
            Some(ns) => format!("{ns}/{}", self.name),
            None => self.name.clone(),
        }
    }

    fn first_error(&self) -> String {
        match &self.status {
            EntryStatus::Ok => String::new(),
            EntryStatus::Invalid(diags) => diags
                .iter()
                .find(|d| d.is_error())
                .map(|d| d.to_string())
                .unwrap_or_default(),
        }
    }
}

fn derived_namespace(root: &Path, config_path: &Path) -> Option<String> {
    let parent = config_path.parent()?.strip_prefix(root).ok()?;
    let parts: Vec<String> = parent
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    (!parts.is_empty()).then(|| parts.join("/"))
}

fn entry_for(root: &Path, path: PathBuf) -> NamespaceEntry {
    let stem = path
        .file_name()
        .map(|f| f.to_string_lossy().trim_end_matches(CONFIG_SUFFIX).to_string())
        .unwrap_or_default();
    match load_config(&path) {
        Err(e) => NamespaceEntry {
            namespace: derived_namespace(root, &path),
            name: stem,
            config_path: path,
            status: EntryStatus::Invalid(vec![Diagnostic::error("<config>", e.to_string())]),
            config: None,
        },
        Ok(parsed) => {
            let cfg = parsed.config;
            let diags = validate_config(&cfg);
            let status = if diags.iter().any(Diagnostic::is_error) {
                EntryStatus::Invalid(diags)
            } else {
                EntryStatus::Ok
            };
            NamespaceEntry {
                namespace: cfg.namespace.clone().or_else(|| derived_namespace(root, &path)),
                name: cfg.name.clone(),
                config_path: path,
                status,
                config: Some(cfg),
            }
        }
    }
}

/// Find, parse and validate every `*.comp.yaml` below `src_root`. Sorted by
/// namespace, name and path. A second ok component with an already seen
/// namespace and name is marked invalid.
pub fn scan(src_root: &Path) -> io::Result<Vec<NamespaceEntry>> {
    std::fs::read_dir(src_root)?;
    let mut paths = Vec::new();
    for item in WalkDir::new(src_root).follow_links(true).sort_by_file_name() {
        let item = match item {
            Ok(item) => item,
            Err(_) => continue,
        };
        if item.file_type().is_file() && item.file_name().to_string_lossy().ends_with(CONFIG_SUFFIX) {
            paths.push(item.into_path());
        }
    }
    let mut entries: Vec<NamespaceEntry> = paths.into_iter().map(|p| entry_for(src_root, p)).collect();
    entries.sort_by(|a, b| {
        (&a.namespace, &a.name, &a.config_path).cmp(&(&b.namespace, &b.name, &b.config_path))
    });

    let mut seen = BTreeSet::new();
    for entry in &mut entries {
        if !entry.is_ok() {
            continue;
        }
        if !seen.insert((entry.namespace.clone(), entry.name.clone())) {
            entry.status = EntryStatus::Invalid(vec![Diagnostic::error(
                "name",
                format!("duplicate component `{}` in the scanned tree", entry.qualified_name()),
            )]);
        }
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "lowercase")]
pub enum ItemStatus {
    /// Output directory.
    Ok(PathBuf),
    /// Error message.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BatchItem {
    pub namespace: Option<String>,
    pub name: String,
    /// `None` for entries that never reached a build.
    pub engine: Option<EngineKind>,
    pub status: ItemStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchReport {
    pub items: Vec<BatchItem>,
}

impl BatchReport {
    pub fn ok_count(&self) -> usize {
        self.items.iter().filter(|i| matches!(i.status, ItemStatus::Ok(_))).count()
    }

    pub fn failed_count(&self) -> usize {
        self.items.len() - self.ok_count()
    }

    pub fn success(&self) -> bool {
        self.failed_count() == 0
    }
}

#[derive(Debug, Clone)]
pub struct NsBuildOptions {
    /// Engines to build; `None` builds every engine a component declares.
    pub engines: Option<Vec<EngineKind>>,
    pub parallel: usize,
    /// Also build container images after generating container targets.
    pub setup: bool,
}

impl Default for NsBuildOptions {
    fn default() -> Self {
        NsBuildOptions {
            engines: None,
            parallel: 1,
            setup: false,
        }
    }
}

/// Output directory of one component build.
pub fn target_dir(target_root: &Path, engine: EngineKind, namespace: Option<&str>, name: &str) -> PathBuf {
    let mut dir = target_root.join(engine.as_str());
    if let Some(ns) = namespace {
        dir = dir.join(ns);
    }
    dir.join(name)
}

fn selected(cfg: &ComponentConfig, filter: &Option<Vec<EngineKind>>) -> Vec<EngineKind> {
    EngineKind::ALL
        .into_iter()
        .filter(|k| cfg.has_engine(*k))
        .filter(|k| filter.as_ref().is_none_or(|f| f.contains(k)))
        .collect()
}

fn pool(parallel: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .expect("thread pool")
}

/// Serializes image builds per image reference.
#[derive(Default)]
struct ImageLocks {
    locks: Mutex<HashMap<ImageRef, Arc<Mutex<()>>>>,
}

impl ImageLocks {
    fn lock_for(&self, image: &ImageRef) -> Arc<Mutex<()>> {
        let mut map = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        map.entry(image.clone()).or_default().clone()
    }
}

fn setup_image(cfg: &ComponentConfig, out_dir: &Path, locks: &ImageLocks) -> Result<(), String> {
    let Some(image) = ImageRef::for_component(cfg) else {
        return Ok(());
    };
    let lock = locks.lock_for(&image);
    let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
    let output = Command::new(out_dir.join(&cfg.name))
        .arg("---setup")
        .output()
        .map_err(|e| format!("cannot run image setup: {e}"))?;
    if output.status.success() {
        Ok(())
    } else {
        Err(format!(
            "image setup for {image} failed: {}",
            String::from_utf8_lossy(&output.stderr).trim()
        ))
    }
}

/// Build every component below `src_root`. Failures are recorded per item;
/// the report order does not depend on `parallel`.
pub fn ns_build(src_root: &Path, target_root: &Path, opts: &NsBuildOptions) -> io::Result<BatchReport> {
    let entries = scan(src_root)?;
    let mut items = Vec::new();
    let mut jobs = Vec::new();
    for entry in &entries {
        match (&entry.status, &entry.config) {
            (EntryStatus::Ok, Some(cfg)) => {
                for engine in selected(cfg, &opts.engines) {
                    jobs.push((entry, cfg, engine));
                }
            }
            _ => items.push(BatchItem {
                namespace: entry.namespace.clone(),
                name: entry.name.clone(),
                engine: None,
                status: ItemStatus::Failed(entry.first_error()),
            }),
        }
    }

    let locks = ImageLocks::default();
    let built: Vec<BatchItem> = pool(opts.parallel).install(|| {
        jobs.par_iter()
            .map(|(entry, cfg, engine)| {
                let dir = target_dir(target_root, *engine, entry.namespace.as_deref(), &entry.name);
                let mut status = match build(cfg, *engine, &dir) {
                    Ok(_) => ItemStatus::Ok(dir.clone()),
                    Err(e) => ItemStatus::Failed(e.to_string()),
                };
                if opts.setup && *engine == EngineKind::Container && matches!(status, ItemStatus::Ok(_)) {
                    if let Err(e) = setup_image(cfg, &dir, &locks) {
                        status = ItemStatus::Failed(e);
                    }
                }
                BatchItem {
                    namespace: entry.namespace.clone(),
                    name: entry.name.clone(),
                    engine: Some(*engine),
                    status,
                }
            })
            .collect()
    });
    items.extend(built);
    items.sort_by(|a, b| (&a.namespace, &a.name, a.engine).cmp(&(&b.namespace, &b.name, b.engine)));
    Ok(BatchReport { items })
}

fn qualified(namespace: &Option<String>, name: &str) -> String {
    match namespace {
        Some(ns) => format!("{ns}/{name}"),
        None => name.to_string(),
    }
}

pub fn format_batch_report(report: &BatchReport, style: ReportStyle) -> String {
    let mut out = String::new();
    match style {
        ReportStyle::Human => {
            let width = report
                .items
                .iter()
                .map(|i| qualified(&i.namespace, &i.name).len())
                .chain(["COMPONENT".len()])
                .max()
                .unwrap_or(9);
            writeln!(out, "{:<6}  {:<9}  {:<width$}  DETAIL", "STATUS", "ENGINE", "COMPONENT").unwrap();
            for item in &report.items {
                let (status, detail) = match &item.status {
                    ItemStatus::Ok(dir) => ("ok", dir.display().to_string()),
                    ItemStatus::Failed(msg) => ("failed", msg.clone()),
                };
                writeln!(
                    out,
                    "{status:<6}  {:<9}  {:<width$}  {detail}",
                    item.engine.map(|e| e.as_str()).unwrap_or("-"),
                    qualified(&item.namespace, &item.name),
                )
                .unwrap();
            }
            writeln!(out, "{} ok, {} failed", report.ok_count(), report.failed_count()).unwrap();
        }
        ReportStyle::Machine => {
            for item in &report.items {
                out.push_str(&serde_json::to_string(item).expect("items serialize"));
                out.push('\n');
            }
            #[derive(Serialize)]
            struct Totals {
                r#type: &'static str,
                ok: usize,
                failed: usize,
            }
            let totals = Totals {
                r#type: "summary",
                ok: report.ok_count(),
                failed: report.failed_count(),
            };
            out.push_str(&serde_json::to_string(&totals).expect("totals serialize"));
            out.push('\n');
        }
    }
    out
}

/// One component's row in an aggregate test run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NsTestRow {
    pub namespace: Option<String>,
    pub name: String,
    pub engine: Option<EngineKind>,
    pub summary: Summary,
    /// The full report; `None` for invalid entries.
    pub report: Option<TestReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NsTestReport {
    pub rows: Vec<NsTestRow>,
}

impl NsTestReport {
    pub fn totals(&self) -> Summary {
        self.rows.iter().fold(Summary::default(), |acc, r| Summary {
            passed: acc.passed + r.summary.passed,
            failed: acc.failed + r.summary.failed,
            errored: acc.errored + r.summary.errored,
        })
    }

    pub fn success(&self) -> bool {
        let t = self.totals();
        t.failed == 0 && t.errored == 0
    }
}

/// Test every valid component with each selected engine (native when
/// `engines` is `None`). Invalid entries count as one errored case.
pub fn ns_test(src_root: &Path, engines: Option<&[EngineKind]>, parallel: usize) -> io::Result<NsTestReport> {
    let entries = scan(src_root)?;
    let wanted: Vec<EngineKind> = engines.map(<[_]>::to_vec).unwrap_or_else(|| vec![EngineKind::Native]);
    let mut rows = Vec::new();
    let mut jobs = Vec::new();
    for entry in &entries {
        match (&entry.status, &entry.config) {
            (EntryStatus::Ok, Some(cfg)) => {
                for engine in wanted.iter().filter(|k| cfg.has_engine(**k)) {
                    jobs.push((entry, cfg, *engine));
                }
            }
            _ => rows.push(NsTestRow {
                namespace: entry.namespace.clone(),
                name: entry.name.clone(),
                engine: None,
                summary: Summary {
                    passed: 0,
                    failed: 0,
                    errored: 1,
                },
                report: None,
                error: Some(entry.first_error()),
            }),
        }
    }
    let tested: Vec<NsTestRow> = pool(parallel).install(|| {
        jobs.par_iter()
            .map(|(entry, cfg, engine)| {
                let report = run_tests(cfg, *engine);
                NsTestRow {
                    namespace: entry.namespace.clone(),
                    name: entry.name.clone(),
                    engine: Some(*engine),
                    summary: report.summary(),
                    report: Some(report),
                    error: None,
                }
            })
            .collect()
    });
    rows.extend(tested);
    rows.sort_by(|a, b| (&a.namespace, &a.name, a.engine).cmp(&(&b.namespace, &b.name, b.engine)));
    Ok(NsTestReport { rows })
}

pub fn format_ns_test_report(report: &NsTestReport, style: ReportStyle) -> String {
    let mut out = String::new();
    match style {
        ReportStyle::Human => {
            let width = report
                .rows
                .iter()
                .map(|r| qualified(&r.namespace, &r.name).len())
                .chain(["COMPONENT".len()])
                .max()
                .unwrap_or(9);
            writeln!(out, "{:<width$}  {:<9}  {:>6}  {:>6}  {:>7}", "COMPONENT", "ENGINE", "PASSED", "FAILED", "ERRORED").unwrap();
            for row in &report.rows {
                writeln!(
                    out,
                    "{:<width$}  {:<9}  {:>6}  {:>6}  {:>7}",
                    qualified(&row.namespace, &row.name),
                    row.engine.map(|e| e.as_str()).unwrap_or("-"),
                    row.summary.passed,
                    row.summary.failed,
                    row.summary.errored
                )
                .unwrap();
            }
            for row in &report.rows {
                if let Some(err) = &row.error {
                    writeln!(out, "\n{}: {err}", qualified(&row.namespace, &row.name)).unwrap();
                }
                if let Some(r) = &row.report {
                    if !r.success() {
                        out.push('\n');
                        out.push_str(&crate::harness::format_report(r, ReportStyle::Human));
                    }
                }
            }
            writeln!(out, "\ntotal: {}", summary_line(report.totals())).unwrap();
        }
        ReportStyle::Machine => {
            for row in &report.rows {
                match &row.report {
                    Some(r) => out.push_str(&crate::harness::format_report(r, ReportStyle::Machine)),
                    None => {
                        #[derive(Serialize)]
                        struct Invalid<'a> {
                            r#type: &'static str,
                            component: String,
                            error: &'a str,
                        }
                        let rec = Invalid {
                            r#type: "invalid",
                            component: qualified(&row.namespace, &row.name),
                            error: row.error.as_deref().unwrap_or(""),
                        };
                        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
                        out.push('\n');
                    }
                }
            }
            #[derive(Serialize)]
            struct Total {
                r#type: &'static str,
                passed: usize,
                failed: usize,
                errored: usize,
            }
            let t = report.totals();
            let rec = Total {
                r#type: "total",
                passed: t.passed,
                failed: t.failed,
                errored: t.errored,
            };
            out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
            out.push('\n');
        }
    }
    out
}

/// Human: a table of namespace, name, version and engines, with invalid
/// entries flagged. Machine: a YAML stream of the normalized valid configs.
pub fn ns_list(entries: &[NamespaceEntry], style: ReportStyle) -> String {
    let mut out = String::new();
    match style {
        ReportStyle::Human => {
            let rows: Vec<[String; 4]> = entries
                .iter()
                .map(|e| {
                    let (version, engines) = match &e.config {
                        Some(cfg) => (
                            cfg.version.clone(),
                            cfg.engines.iter().map(|x| x.kind.as_str()).collect::<Vec<_>>().join(","),
                        ),
                        None => ("-".to_string(), "-".to_string()),
                    };
                    [e.namespace.clone().unwrap_or_else(|| "-".into()), e.name.clone(), version, engines]
                })
                .collect();
            let header = ["NAMESPACE", "NAME", "VERSION", "ENGINES"];
            let widths: Vec<usize> = (0..4)
                .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: [&str; 4]| {
                format!(
                    "{:<w0$}  {:<w1$}  {:<w2$}  {:<w3$}",
                    cells[0],
                    cells[1],
                    cells[2],
                    cells[3],
                    w0 = widths[0],
                    w1 = widths[1],
                    w2 = widths[2],
                    w3 = widths[3]
                )
            };
            writeln!(out, "{}", line(header).trim_end()).unwrap();
            for (entry, row) in entries.iter().zip(&rows) {
                let mut text = line([&row[0], &row[1], &row[2], &row[3]]);
                if !entry.is_ok() {
                    text.push_str(&format!("  ERROR: {}", entry.first_error()));
                }
                writeln!(out, "{}", text.trim_end()).unwrap();
            }
        }
        ReportStyle::Machine => {
            for entry in entries.iter().filter(|e| e.is_ok()) {
                if let Some(cfg) = &entry.config {
                    out.push_str("---\n");
                    out.push_str(&view_config(cfg));
                }
            }
        }
    }
    out
}
