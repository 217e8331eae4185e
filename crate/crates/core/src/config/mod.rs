//! Component config schema, parsing and normalized serialization.
//!
//! A config is a YAML document, conventionally named `<name>.comp.yaml`,
//! that lives beside its script resources:
//!
//! ```yaml
//! name: hello
//! version: 0.1.0
//! description: Greets someone.
//! arguments:
//!   - name: --name
//!     type: string
//!     default: World
//! resources:
//!   - kind: script
//!     language: bash
//!     path: script.sh
//! test_resources:
//!   - kind: script
//!     language: bash
//!     path: test.sh
//! engines:
//!   - kind: native
//!   - kind: container
//!     image: bash:5.2
//! ```

mod resources;
mod validate;

use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

pub use crate::args::ArgumentSpec;
pub use resources::{resolve_resources, resolve_test_resources, ResolvedResource, ResourceError, ResourceSource};
pub use validate::{validate_config, Diagnostic, Severity};

/// File suffix used to discover component configs in a source tree.
pub const CONFIG_SUFFIX: &str = ".comp.yaml";

/// The parsed component definition consumed by every build target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub namespace: Option<String>,
    #[serde(default = "default_version", deserialize_with = "scalar_string")]
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub arguments: Vec<ArgumentSpec>,
    #[serde(default)]
    pub resources: Vec<Resource>,
    #[serde(default)]
    pub test_resources: Vec<Resource>,
    #[serde(default = "default_engines")]
    pub engines: Vec<EngineSpec>,
    /// Absolute path of the file this config was read from.
    #[serde(skip)]
    pub config_path: PathBuf,
}

fn default_version() -> String {
    "dev".to_string()
}

fn default_engines() -> Vec<EngineSpec> {
    vec![EngineSpec::native()]
}

impl ComponentConfig {
    /// Directory that relative resource paths are resolved against.
    pub fn base_dir(&self) -> PathBuf {
        self.config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn main_script(&self) -> Option<&Resource> {
        self.resources.first().filter(|r| r.kind() == ResourceKind::Script)
    }

    pub fn main_language(&self) -> Option<Language> {
        self.main_script().and_then(|r| r.language)
    }

    pub fn engine(&self, kind: EngineKind) -> Option<&EngineSpec> {
        self.engines.iter().find(|e| e.kind == kind)
    }

    pub fn has_engine(&self, kind: EngineKind) -> bool {
        self.engine(kind).is_some()
    }

    /// Equality ignoring the source location.
    pub fn same_definition(&self, other: &ComponentConfig) -> bool {
        let mut a = self.clone();
        a.config_path = other.config_path.clone();
        &a == other
    }

    /// Fill in derived defaults: resource kinds, languages inferred from
    /// extensions, destination names, and the default engine list.
    fn normalize(&mut self) {
        for r in self.resources.iter_mut().chain(self.test_resources.iter_mut()) {
            r.normalize();
        }
        if self.engines.is_empty() {
            self.engines = default_engines();
        }
    }
}

/// Supported script languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Bash,
    Python,
    R,
    Javascript,
}

impl Language {
    pub const ALL: [Language; 4] = [Language::Bash, Language::Python, Language::R, Language::Javascript];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::Bash => "bash",
            Language::Python => "python",
            Language::R => "r",
            Language::Javascript => "javascript",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Language::Bash => "sh",
            Language::Python => "py",
            Language::R => "R",
            Language::Javascript => "js",
        }
    }

    /// Line-comment token used for injection markers.
    pub fn comment_token(self) -> &'static str {
        match self {
            Language::Javascript => "//",
            _ => "#",
        }
    }

    /// Conventional interpreter executable looked up on `PATH`.
    pub fn runtime(self) -> &'static str {
        match self {
            Language::Bash => "bash",
            Language::Python => "python3",
            Language::R => "Rscript",
            Language::Javascript => "node",
        }
    }

    pub fn from_path(path: &str) -> Option<Language> {
        let ext = Path::new(path).extension()?.to_str()?;
        match ext {
            "sh" | "bash" => Some(Language::Bash),
            "py" => Some(Language::Python),
            "R" | "r" => Some(Language::R),
            "js" | "mjs" | "cjs" => Some(Language::Javascript),
            _ => None,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Script,
    PlainFile,
}

/// A script or data file shipped with the component.
///
/// Exactly one of `path` and `text` is set. When `kind` is omitted the
/// resource is a script if it declares a language and a plain file otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ResourceKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<Language>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dest: Option<String>,
}

impl Resource {
    pub fn script_file(language: Language, path: impl Into<String>) -> Self {
        let mut r = Resource {
            kind: Some(ResourceKind::Script),
            language: Some(language),
            path: Some(path.into()),
            text: None,
            dest: None,
        };
        r.normalize();
        r
    }

    pub fn inline_script(language: Language, text: impl Into<String>) -> Self {
        let mut r = Resource {
            kind: Some(ResourceKind::Script),
            language: Some(language),
            path: None,
            text: Some(text.into()),
            dest: None,
        };
        r.normalize();
        r
    }

    pub fn plain_file(path: impl Into<String>) -> Self {
        let mut r = Resource {
            kind: Some(ResourceKind::PlainFile),
            language: None,
            path: Some(path.into()),
            text: None,
            dest: None,
        };
        r.normalize();
        r
    }

    pub fn kind(&self) -> ResourceKind {
        self.kind.unwrap_or(if self.language.is_some() {
            ResourceKind::Script
        } else {
            ResourceKind::PlainFile
        })
    }

    /// Output-relative file name: explicit `dest`, else the basename of
    /// `path`, else `main.<ext>` for inline text.
    pub fn dest_name(&self) -> Option<String> {
        if let Some(dest) = &self.dest {
            return Some(dest.clone());
        }
        if let Some(path) = &self.path {
            return Path::new(path)
                .file_name()
                .and_then(|n| n.to_str())
                .map(str::to_string);
        }
        if self.text.is_some() {
            let ext = self.language.map(Language::extension).unwrap_or("txt");
            return Some(format!("main.{ext}"));
        }
        None
    }

    fn normalize(&mut self) {
        let kind = self.kind();
        self.kind = Some(kind);
        if kind == ResourceKind::Script && self.language.is_none() {
            self.language = self.path.as_deref().and_then(Language::from_path);
        }
        if self.dest.is_none() {
            self.dest = self.dest_name();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Native,
    Container,
    Workflow,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [EngineKind::Native, EngineKind::Container, EngineKind::Workflow];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Native => "native",
            EngineKind::Container => "container",
            EngineKind::Workflow => "workflow",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" => Ok(EngineKind::Native),
            "container" => Ok(EngineKind::Container),
            "workflow" => Ok(EngineKind::Workflow),
            other => Err(format!(
                "unknown engine '{other}' (expected native, container or workflow)"
            )),
        }
    }
}

/// One build target. Container fields are only meaningful for the
/// container engine and directives only for the workflow engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSpec {
    pub kind: EngineKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registry: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub setup: Vec<SetupRequirement>,
    #[serde(
        default,
        skip_serializing_if = "IndexMap::is_empty",
        deserialize_with = "scalar_map"
    )]
    pub directives: IndexMap<String, String>,
}

impl EngineSpec {
    pub fn native() -> Self {
        Self::of_kind(EngineKind::Native)
    }

    pub fn container(image: impl Into<String>) -> Self {
        EngineSpec {
            image: Some(image.into()),
            ..Self::of_kind(EngineKind::Container)
        }
    }

    pub fn workflow() -> Self {
        Self::of_kind(EngineKind::Workflow)
    }

    fn of_kind(kind: EngineKind) -> Self {
        EngineSpec {
            kind,
            image: None,
            registry: None,
            setup: Vec::new(),
            directives: IndexMap::new(),
        }
    }
}

/// A package-installation step baked into the container recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetupRequirement {
    pub manager: String,
    #[serde(default)]
    pub packages: Vec<String>,
}

impl SetupRequirement {
    pub fn new<I, S>(manager: &str, packages: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SetupRequirement {
            manager: manager.to_string(),
            packages: packages.into_iter().map(Into::into).collect(),
        }
    }
}

fn scalar_string<'de, D>(de: D) -> Result<String, D::Error>
where
    D: Deserializer<'de>,
{
    let raw = serde_yaml::Value::deserialize(de)?;
    scalar_to_string(&raw).ok_or_else(|| serde::de::Error::custom("expected a scalar value"))
}

fn scalar_map<'de, D>(de: D) -> Result<IndexMap<String, String>, D::Error>
where
    D: Deserializer<'de>,
{
    let raw: IndexMap<String, serde_yaml::Value> = IndexMap::deserialize(de)?;
    raw.into_iter()
        .map(|(k, v)| match scalar_to_string(&v) {
            Some(s) => Ok((k, s)),
            None => Err(serde::de::Error::custom(format!(
                "directive `{k}` must be a scalar value"
            ))),
        })
        .collect()
}

/// String form of a YAML scalar; `None` for null, sequences and mappings.
pub(crate) fn scalar_to_string(v: &serde_yaml::Value) -> Option<String> {
    match v {
        serde_yaml::Value::String(s) => Some(s.clone()),
        serde_yaml::Value::Number(n) => Some(n.to_string()),
        serde_yaml::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Result of [`parse_config`]: the config plus non-fatal warnings such as
/// unknown keys.
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub config: ComponentConfig,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("invalid YAML at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("`resources` must list at least one resource (the main script)")]
    EmptyResources,
    #[error("duplicate argument name `{0}`")]
    DuplicateArgument(String),
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Parse a config from YAML text. Defaults are applied; unknown keys are
/// reported as warnings rather than errors.
pub fn parse_config(yaml_text: &str, source_path: &Path) -> Result<ParsedConfig, ParseError> {
    let value: serde_yaml::Value = serde_yaml::from_str(yaml_text).map_err(|e| {
        let (line, column) = e
            .location()
            .map(|l| (l.line(), l.column()))
            .unwrap_or((0, 0));
        ParseError::Syntax {
            line,
            column,
            message: strip_location(&e.to_string()),
        }
    })?;
    if value.is_null() {
        return Err(ParseError::MissingField("name"));
    }

    let mut unknown = Vec::new();
    let mut track = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
    let de = serde_ignored::Deserializer::new(value, &mut track);
    let mut config: ComponentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        ParseError::Schema {
            field: if field == "." { "<root>".to_string() } else { field },
            message: e.into_inner().to_string(),
        }
    })?;

    if config.name.is_empty() {
        return Err(ParseError::MissingField("name"));
    }
    if config.resources.is_empty() {
        return Err(ParseError::EmptyResources);
    }
    if let Some(dup) = first_duplicate_flag(&config.arguments) {
        return Err(ParseError::DuplicateArgument(dup));
    }

    config.config_path = absolute(source_path);
    config.normalize();

    let warnings = unknown
        .into_iter()
        .map(|key| format!("unknown key `{key}` ignored"))
        .collect();
    Ok(ParsedConfig { config, warnings })
}

/// Read and parse a config file.
pub fn load_config(path: &Path) -> Result<ParsedConfig, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

/// Normalized YAML with all defaults materialized.
pub fn view_config(cfg: &ComponentConfig) -> String {
    serde_yaml::to_string(cfg).expect("component config is always representable as YAML")
}

pub(crate) fn first_duplicate_flag(specs: &[ArgumentSpec]) -> Option<String> {
    let mut seen = std::collections::HashSet::new();
    specs
        .iter()
        .flat_map(|s| std::iter::once(&s.name).chain(s.alternatives.iter()))
        .find(|flag| !seen.insert(flag.as_str()))
        .cloned()
}

fn absolute(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()
            .map(|cwd| cwd.join(path))
            .unwrap_or_else(|_| path.to_path_buf())
    }
}

fn strip_location(message: &str) -> String {
    match message.find(" at line ") {
        Some(idx) => message[..idx].to_string(),
        None => message.to_string(),
    }
}
