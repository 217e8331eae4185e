use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{first_duplicate_flag, ComponentConfig, EngineKind, Resource, ResourceKind};
use crate::args::{ArgType, ArgumentSpec, Direction};
use crate::container::PackageManager;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Dotted path of the offending field, e.g. `arguments[1].default`.
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        }
    }

    fn warning(field: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}: {}", self.field, self.message)
    }
}

const RESERVED_FLAGS: [&str; 2] = ["--help", "--version"];
const PACKAGE_METACHARS: &[char] = &[';', '|', '&', '$', '`', '<', '>', '(', ')', '\'', '"', '\\'];

/// Check every config invariant. An empty error set means the config is
/// buildable.
pub fn validate_config(cfg: &ComponentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    if !is_identifier(&cfg.name) {
        out.push(Diagnostic::error(
            "name",
            format!("`{}` must match [a-z][a-z0-9_]*", cfg.name),
        ));
    }
    if let Some(ns) = &cfg.namespace {
        if ns.is_empty() || !ns.split('/').all(is_namespace_segment) {
            out.push(Diagnostic::error(
                "namespace",
                format!("`{ns}` must be a slash-separated path of [A-Za-z0-9_.-] segments"),
            ));
        }
    }
    if cfg.version.is_empty() || cfg.version.chars().any(|c| c.is_whitespace() || c.is_control()) {
        out.push(Diagnostic::error(
            "version",
            "must be non-empty and contain no whitespace",
        ));
    }

    check_resources(cfg, &mut out);
    check_arguments(&cfg.arguments, &mut out);
    check_engines(cfg, &mut out);
    out
}

fn check_resources(cfg: &ComponentConfig, out: &mut Vec<Diagnostic>) {
    match cfg.resources.first() {
        None => out.push(Diagnostic::error("resources", "at least one resource (the main script) is required")),
        Some(main) if main.kind() != ResourceKind::Script => out.push(Diagnostic::error(
            "resources[0]",
            "the first resource must be the main script",
        )),
        Some(_) => {}
    }
    for (list, resources) in [("resources", &cfg.resources), ("test_resources", &cfg.test_resources)] {
        let mut dests = HashSet::new();
        for (i, res) in resources.iter().enumerate() {
            let field = format!("{list}[{i}]");
            check_resource(&field, res, out);
            if let Some(dest) = res.dest_name() {
                if !dests.insert(dest.clone()) {
                    out.push(Diagnostic::error(
                        format!("{field}.dest"),
                        format!("destination `{dest}` is used by more than one resource"),
                    ));
                }
            }
        }
    }
    if let Some(dest) = cfg.resources.iter().filter_map(Resource::dest_name).find(|d| *d == cfg.name) {
        out.push(Diagnostic::error(
            "resources",
            format!("destination `{dest}` collides with the generated executable"),
        ));
    }
}

fn check_resource(field: &str, res: &Resource, out: &mut Vec<Diagnostic>) {
    if res.path.is_some() == res.text.is_some() {
        out.push(Diagnostic::error(field, "exactly one of `path` or `text` must be set"));
    }
    if res.kind() == ResourceKind::Script && res.language.is_none() {
        out.push(Diagnostic::error(
            format!("{field}.language"),
            "script resources need a language (bash, python, r or javascript)",
        ));
    }
    if let Some(dest) = res.dest_name() {
        if !super::resources::is_safe_dest(&dest) {
            out.push(Diagnostic::error(
                format!("{field}.dest"),
                format!("`{dest}` must be a relative path inside the output directory"),
            ));
        }
    }
}

fn check_arguments(specs: &[ArgumentSpec], out: &mut Vec<Diagnostic>) {
    if let Some(dup) = first_duplicate_flag(specs) {
        out.push(Diagnostic::error("arguments", format!("duplicate argument name `{dup}`")));
    }
    for (i, spec) in specs.iter().enumerate() {
        let field = format!("arguments[{i}]");
        if !is_long_flag(&spec.name) {
            out.push(Diagnostic::error(
                format!("{field}.name"),
                format!("`{}` must match --[A-Za-z][A-Za-z0-9_]*", spec.name),
            ));
        }
        for alt in &spec.alternatives {
            if !is_alternative(alt) {
                out.push(Diagnostic::error(
                    format!("{field}.alternatives"),
                    format!("`{alt}` must match -[A-Za-z0-9_]+ or --[A-Za-z][A-Za-z0-9_]*"),
                ));
            }
        }
        for flag in spec.flags() {
            if RESERVED_FLAGS.contains(&flag) {
                out.push(Diagnostic::error(
                    format!("{field}.name"),
                    format!("`{flag}` is reserved"),
                ));
            }
        }
        if spec.multiple_sep.chars().count() != 1 {
            out.push(Diagnostic::error(
                format!("{field}.multiple_sep"),
                "must be exactly one character",
            ));
        }
        if spec.arg_type == ArgType::BooleanTrue {
            if spec.required {
                out.push(Diagnostic::error(
                    format!("{field}.required"),
                    "boolean_true arguments cannot be required",
                ));
            }
            if spec.multiple {
                out.push(Diagnostic::error(
                    format!("{field}.multiple"),
                    "boolean_true arguments cannot be multiple",
                ));
            }
            if spec.default.as_ref().is_some_and(|d| !d.is_null() && d.as_bool() != Some(false)) {
                out.push(Diagnostic::error(
                    format!("{field}.default"),
                    "boolean_true arguments always default to false",
                ));
            }
        } else {
            match spec.default_value() {
                Err(e) => out.push(Diagnostic::error(
                    format!("{field}.default"),
                    format!("default for {} does not coerce: {e}", spec.name),
                )),
                Ok(Some(_)) if spec.required => out.push(Diagnostic::warning(
                    format!("{field}.required"),
                    format!("{} is required but has a default; the default is used when absent", spec.name),
                )),
                Ok(_) => {}
            }
        }
        if !spec.is_file() && (spec.must_exist || spec.direction == Direction::Output) {
            out.push(Diagnostic::warning(
                field.clone(),
                "`must_exist` and `direction` only apply to file arguments",
            ));
        }
    }
}

fn check_engines(cfg: &ComponentConfig, out: &mut Vec<Diagnostic>) {
    for kind in EngineKind::ALL {
        if cfg.engines.iter().filter(|e| e.kind == kind).count() > 1 {
            out.push(Diagnostic::error(
                "engines",
                format!("engine `{kind}` is declared more than once"),
            ));
        }
    }
    for (i, engine) in cfg.engines.iter().enumerate() {
        let field = format!("engines[{i}]");
        if engine.kind != EngineKind::Container
            && (engine.image.is_some() || engine.registry.is_some() || !engine.setup.is_empty())
        {
            out.push(Diagnostic::warning(
                field.clone(),
                "`image`, `registry` and `setup` only apply to the container engine",
            ));
        }
        if engine.kind != EngineKind::Workflow && !engine.directives.is_empty() {
            out.push(Diagnostic::warning(
                field.clone(),
                "`directives` only apply to the workflow engine",
            ));
        }
        if engine.kind != EngineKind::Container {
            continue;
        }
        if engine.image.as_deref().is_none_or(|img| img.trim().is_empty()) {
            out.push(Diagnostic::error(
                format!("{field}.image"),
                "the container engine needs a non-empty base image",
            ));
        }
        if let Some(registry) = &engine.registry {
            if registry.is_empty()
                || registry.ends_with('/')
                || registry.chars().any(|c| c.is_whitespace() || c.is_control() || c == '\'')
            {
                out.push(Diagnostic::error(format!("{field}.registry"), "invalid registry prefix"));
            }
        }
        if !is_image_tag(&cfg.version) {
            out.push(Diagnostic::error(
                "version",
                format!("`{}` is not a valid image tag ([A-Za-z0-9_][A-Za-z0-9_.-]{{0,127}})", cfg.version),
            ));
        }
        for (j, req) in engine.setup.iter().enumerate() {
            let field = format!("{field}.setup[{j}]");
            if req.manager.parse::<PackageManager>().is_err() {
                out.push(Diagnostic::error(
                    format!("{field}.manager"),
                    format!(
                        "unknown package manager `{}` (allowed: {})",
                        req.manager,
                        PackageManager::ALL.map(PackageManager::as_str).join(", ")
                    ),
                ));
            }
            if req.packages.is_empty() {
                out.push(Diagnostic::error(format!("{field}.packages"), "must list at least one package"));
            }
            for pkg in &req.packages {
                if !is_safe_package(pkg) {
                    out.push(Diagnostic::error(
                        format!("{field}.packages"),
                        format!("package name `{pkg}` contains whitespace or shell metacharacters"),
                    ));
                }
            }
        }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

fn is_namespace_segment(s: &str) -> bool {
    !s.is_empty()
        && s != "."
        && s != ".."
        && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

fn is_word(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_long_flag(s: &str) -> bool {
    s.strip_prefix("--").is_some_and(is_word)
}

fn is_alternative(s: &str) -> bool {
    if is_long_flag(s) {
        return true;
    }
    s.strip_prefix('-').is_some_and(|rest| {
        !rest.is_empty() && rest.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
    })
}

pub(crate) fn is_image_tag(s: &str) -> bool {
    let mut chars = s.chars();
    s.len() <= 128
        && matches!(chars.next(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

pub(crate) fn is_safe_package(pkg: &str) -> bool {
    !pkg.is_empty() && !pkg.chars().any(|c| c.is_whitespace() || c.is_control() || PACKAGE_METACHARS.contains(&c))
}
