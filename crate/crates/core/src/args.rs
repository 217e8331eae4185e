//! Argument parsing, type coercion and validation.
//!
//! This is the reference semantics for component command lines. The shell
//! wrappers emitted by the build targets implement the same rules, and the
//! two are checked against each other on randomized command lines.
//!
//! Rules:
//! - every argument is a flag; `--name value` and `--name=value` are both
//!   accepted, as are the declared alternatives;
//! - `boolean_true` flags are presence switches and take no value;
//! - `multiple` arguments accept repeated flags and `multiple_sep`-joined
//!   values, concatenated in order;
//! - a repeated single-valued flag keeps the last value and warns;
//! - `--help` and `--version` short-circuit parsing;
//! - absent arguments take their default, else fail if required.

use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{scalar_to_string, ComponentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgType {
    #[default]
    String,
    Integer,
    Double,
    Boolean,
    BooleanTrue,
    File,
}

impl ArgType {
    pub fn as_str(self) -> &'static str {
        match self {
            ArgType::String => "string",
            ArgType::Integer => "integer",
            ArgType::Double => "double",
            ArgType::Boolean => "boolean",
            ArgType::BooleanTrue => "boolean_true",
            ArgType::File => "file",
        }
    }
}

impl fmt::Display for ArgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Input,
    Output,
}

/// One command-line argument of a component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<String>,
    #[serde(rename = "type", default)]
    pub arg_type: ArgType,
    #[serde(default)]
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<serde_yaml::Value>,
    #[serde(default)]
    pub multiple: bool,
    #[serde(default = "default_sep")]
    pub multiple_sep: String,
    #[serde(default)]
    pub must_exist: bool,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

fn default_sep() -> String {
    ":".to_string()
}

impl ArgumentSpec {
    pub fn new(name: &str, arg_type: ArgType) -> Self {
        ArgumentSpec {
            name: name.to_string(),
            alternatives: Vec::new(),
            arg_type,
            required: false,
            default: None,
            multiple: false,
            multiple_sep: default_sep(),
            must_exist: false,
            direction: Direction::Input,
            description: String::new(),
        }
    }

    pub fn required(mut self) -> Self {
        self.required = true;
        self
    }

    pub fn multiple(mut self, sep: char) -> Self {
        self.multiple = true;
        self.multiple_sep = sep.to_string();
        self
    }

    pub fn with_default(mut self, value: impl Into<serde_yaml::Value>) -> Self {
        self.default = Some(value.into());
        self
    }

    pub fn with_alternative(mut self, alt: &str) -> Self {
        self.alternatives.push(alt.to_string());
        self
    }

    pub fn must_exist(mut self) -> Self {
        self.must_exist = true;
        self
    }

    pub fn output(mut self) -> Self {
        self.direction = Direction::Output;
        self
    }

    /// Identifier used as the key in parameter maps: the name without its
    /// leading dashes.
    pub fn id(&self) -> &str {
        self.name.trim_start_matches('-')
    }

    pub fn flags(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.name.as_str()).chain(self.alternatives.iter().map(String::as_str))
    }

    pub fn is_flag(&self) -> bool {
        self.arg_type == ArgType::BooleanTrue
    }

    pub fn is_file(&self) -> bool {
        self.arg_type == ArgType::File
    }

    pub(crate) fn sep(&self) -> &str {
        if self.multiple_sep.is_empty() {
            ":"
        } else {
            &self.multiple_sep
        }
    }

    /// The raw default tokens, before coercion.
    pub(crate) fn default_tokens(&self) -> Result<Option<Vec<String>>, CoerceError> {
        let Some(value) = &self.default else {
            return Ok(None);
        };
        let not_scalar = || CoerceError {
            token: serde_yaml::to_string(value)
                .unwrap_or_default()
                .trim_end()
                .to_string(),
            expected: self.arg_type,
        };
        match value {
            serde_yaml::Value::Null => Ok(None),
            serde_yaml::Value::Sequence(items) if self.multiple => items
                .iter()
                .map(|v| scalar_to_string(v).ok_or_else(not_scalar))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            other => {
                let token = scalar_to_string(other).ok_or_else(not_scalar)?;
                if self.multiple {
                    Ok(Some(token.split(self.sep()).map(str::to_string).collect()))
                } else {
                    Ok(Some(vec![token]))
                }
            }
        }
    }

    /// The default coerced under the declared type.
    pub fn default_value(&self) -> Result<Option<ParamValue>, CoerceError> {
        let Some(tokens) = self.default_tokens()? else {
            return Ok(None);
        };
        let values = tokens
            .iter()
            .map(|t| coerce(self.arg_type, t))
            .collect::<Result<Vec<_>, _>>()?;
        if self.multiple {
            Ok(Some(ParamValue::Multiple(values)))
        } else {
            Ok(values.into_iter().next().map(ParamValue::Single))
        }
    }
}

/// A typed argument value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    String(String),
    Integer(i64),
    Double(f64),
    Boolean(bool),
    File(String),
}

impl Value {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::String(s) | Value::File(s) => serde_json::Value::from(s.as_str()),
            Value::Integer(i) => serde_json::Value::from(*i),
            Value::Double(d) => serde_json::Value::from(*d),
            Value::Boolean(b) => serde_json::Value::from(*b),
        }
    }

    /// Canonical command-line token for this value.
    pub fn token(&self) -> String {
        match self {
            Value::String(s) | Value::File(s) => s.clone(),
            Value::Integer(i) => i.to_string(),
            Value::Double(d) => format!("{d:?}"),
            Value::Boolean(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Single(Value),
    Multiple(Vec<Value>),
}

impl ParamValue {
    pub fn values(&self) -> &[Value] {
        match self {
            ParamValue::Single(v) => std::slice::from_ref(v),
            ParamValue::Multiple(vs) => vs,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ParamValue::Single(v) => v.to_json(),
            ParamValue::Multiple(vs) => vs.iter().map(Value::to_json).collect(),
        }
    }
}

/// Validated argument values keyed by argument identifier, in declaration
/// order. Arguments that were neither given nor defaulted map to `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamMap {
    entries: IndexMap<String, Option<ParamValue>>,
}

impl ParamMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, value: Option<ParamValue>) {
        self.entries.insert(id.into(), value);
    }

    pub fn set(&mut self, id: impl Into<String>, value: Value) {
        self.insert(id, Some(ParamValue::Single(value)));
    }

    pub fn get(&self, id: &str) -> Option<&ParamValue> {
        self.entries.get(id).and_then(Option::as_ref)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Option<&ParamValue>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_ref()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map = self
            .entries
            .iter()
            .map(|(k, v)| {
                let json = v.as_ref().map_or(serde_json::Value::Null, ParamValue::to_json);
                (k.clone(), json)
            })
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected {expected}, got '{token}'")]
pub struct CoerceError {
    pub token: String,
    pub expected: ArgType,
}

/// Convert a raw command-line token to a typed value.
///
/// Integers are signed decimal within the 64-bit range. Doubles are decimal
/// with an optional exponent (`1.5`, `.5`, `5.`, `1e-3`); `inf` and `nan`
/// spellings are rejected. Booleans accept true/false/yes/no/1/0 in any
/// letter case.
pub fn coerce(ty: ArgType, raw: &str) -> Result<Value, CoerceError> {
    let fail = || CoerceError {
        token: raw.to_string(),
        expected: ty,
    };
    match ty {
        ArgType::String => Ok(Value::String(raw.to_string())),
        ArgType::File => Ok(Value::File(raw.to_string())),
        ArgType::Integer => raw.parse::<i64>().map(Value::Integer).map_err(|_| fail()),
        ArgType::Double => {
            if !is_decimal_literal(raw) {
                return Err(fail());
            }
            raw.parse::<f64>().map(Value::Double).map_err(|_| fail())
        }
        ArgType::Boolean | ArgType::BooleanTrue => match raw.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Ok(Value::Boolean(true)),
            "false" | "no" | "0" => Ok(Value::Boolean(false)),
            _ => Err(fail()),
        },
    }
}

/// `[+-]? (digits ('.' digits?)? | '.' digits) ([eE] [+-]? digits)?`
fn is_decimal_literal(raw: &str) -> bool {
    fn digits(s: &str) -> bool {
        !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
    }
    let unsigned = raw.strip_prefix(['+', '-']).unwrap_or(raw);
    let (mantissa, exponent) = match unsigned.find(['e', 'E']) {
        Some(idx) => (&unsigned[..idx], Some(&unsigned[idx + 1..])),
        None => (unsigned, None),
    };
    if let Some(exp) = exponent {
        if !digits(exp.strip_prefix(['+', '-']).unwrap_or(exp)) {
            return false;
        }
    }
    match mantissa.split_once('.') {
        Some((int, frac)) => {
            (int.is_empty() || digits(int))
                && (frac.is_empty() || digits(frac))
                && !(int.is_empty() && frac.is_empty())
        }
        None => digits(mantissa),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UsageError {
    #[error("missing required argument {0}")]
    MissingRequired(String),
    #[error("unknown argument: {0}")]
    Unknown(String),
    #[error("missing value for argument {0}")]
    MissingValue(String),
    #[error("argument {0} does not take a value")]
    UnexpectedValue(String),
    #[error("invalid value for {flag}: {source}")]
    Invalid {
        flag: String,
        #[source]
        source: CoerceError,
    },
}

impl UsageError {
    /// The argument the error is about, if any.
    pub fn flag(&self) -> &str {
        match self {
            UsageError::MissingRequired(f)
            | UsageError::Unknown(f)
            | UsageError::MissingValue(f)
            | UsageError::UnexpectedValue(f) => f,
            UsageError::Invalid { flag, .. } => flag,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseOutcome {
    Params {
        params: ParamMap,
        warnings: Vec<String>,
    },
    Help,
    Version,
}

/// Parse a component command line.
pub fn parse_args<S: AsRef<str>>(
    specs: &[ArgumentSpec],
    argv: &[S],
) -> Result<ParseOutcome, UsageError> {
    let lookup = |flag: &str| specs.iter().position(|s| s.flags().any(|f| f == flag));

    let mut collected: Vec<Option<Vec<Value>>> = vec![None; specs.len()];
    let mut warnings = Vec::new();
    let mut i = 0;
    while i < argv.len() {
        let token = argv[i].as_ref();
        i += 1;
        match token {
            "--help" => return Ok(ParseOutcome::Help),
            "--version" => return Ok(ParseOutcome::Version),
            _ => {}
        }

        let (idx, raw) = if let Some(idx) = lookup(token) {
            if specs[idx].is_flag() {
                (idx, None)
            } else {
                let value = argv
                    .get(i)
                    .ok_or_else(|| UsageError::MissingValue(specs[idx].name.clone()))?;
                i += 1;
                (idx, Some(value.as_ref()))
            }
        } else {
            let split = token
                .split_once('=')
                .and_then(|(flag, value)| lookup(flag).map(|idx| (idx, value)));
            match split {
                Some((idx, _)) if specs[idx].is_flag() => {
                    return Err(UsageError::UnexpectedValue(specs[idx].name.clone()))
                }
                Some((idx, value)) => (idx, Some(value)),
                None => return Err(UsageError::Unknown(token.to_string())),
            }
        };

        let spec = &specs[idx];
        let invalid = |source| UsageError::Invalid {
            flag: spec.name.clone(),
            source,
        };
        let slot = &mut collected[idx];
        match raw {
            None => {
                if slot.is_some() {
                    warnings.push(repeat_warning(&spec.name));
                }
                *slot = Some(vec![Value::Boolean(true)]);
            }
            Some(raw) if spec.multiple => {
                let parsed = raw
                    .split(spec.sep())
                    .map(|part| coerce(spec.arg_type, part))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(invalid)?;
                slot.get_or_insert_with(Vec::new).extend(parsed);
            }
            Some(raw) => {
                let value = coerce(spec.arg_type, raw).map_err(invalid)?;
                if slot.is_some() {
                    warnings.push(repeat_warning(&spec.name));
                }
                *slot = Some(vec![value]);
            }
        }
    }

    let mut params = ParamMap::new();
    for (spec, values) in specs.iter().zip(collected) {
        let value = match values {
            Some(vs) if spec.multiple => Some(ParamValue::Multiple(vs)),
            Some(vs) => vs.into_iter().next().map(ParamValue::Single),
            None => match spec.default_value().map_err(|source| UsageError::Invalid {
                flag: spec.name.clone(),
                source,
            })? {
                Some(v) => Some(v),
                None if spec.is_flag() => Some(ParamValue::Single(Value::Boolean(false))),
                None if spec.required => {
                    return Err(UsageError::MissingRequired(spec.name.clone()))
                }
                None => None,
            },
        };
        params.insert(spec.id(), value);
    }
    Ok(ParseOutcome::Params { params, warnings })
}

fn repeat_warning(flag: &str) -> String {
    format!("{flag} given more than once; using the last value")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("file not found for {flag}: {path}")]
pub struct FileError {
    pub flag: String,
    pub path: String,
}

/// Existence check for `must_exist` input files. Output files are exempt.
pub fn check_files(specs: &[ArgumentSpec], params: &ParamMap) -> Vec<FileError> {
    specs
        .iter()
        .filter(|s| s.is_file() && s.must_exist && s.direction == Direction::Input)
        .filter_map(|s| params.get(s.id()).map(|v| (s, v)))
        .flat_map(|(spec, value)| {
            value.values().iter().filter_map(move |v| match v {
                Value::File(path) | Value::String(path) if !Path::new(path).exists() => {
                    Some(FileError {
                        flag: spec.name.clone(),
                        path: path.clone(),
                    })
                }
                _ => None,
            })
        })
        .collect()
}

/// Usage text shown by `--help`, identical for in-process runs and the
/// generated wrappers.
pub fn render_help(cfg: &ComponentConfig) -> String {
    let mut out = format!("{} {}\n", cfg.name, cfg.version);
    if let Some(desc) = cfg.description.as_deref().map(str::trim).filter(|d| !d.is_empty()) {
        out.push('\n');
        out.push_str(desc);
        out.push('\n');
    }
    out.push_str(&format!("\nUsage: {} [options]\n\nOptions:\n", cfg.name));
    for spec in &cfg.arguments {
        let mut line = format!("  {}  {}", spec.flags().collect::<Vec<_>>().join(", "), spec.arg_type);
        if spec.required {
            line.push_str("  [required]");
        }
        if spec.multiple {
            line.push_str(&format!("  [multiple, sep '{}']", spec.sep()));
        }
        if spec.is_file() {
            line.push_str(match (spec.direction, spec.must_exist) {
                (Direction::Output, _) => "  [output]",
                (Direction::Input, true) => "  [must exist]",
                (Direction::Input, false) => "",
            });
        }
        if let Ok(Some(default)) = spec.default_value() {
            let shown = default
                .values()
                .iter()
                .map(Value::token)
                .collect::<Vec<_>>()
                .join(spec.sep());
            line.push_str(&format!("  (default: {shown})"));
        }
        let desc = spec.description.split_whitespace().collect::<Vec<_>>().join(" ");
        if !desc.is_empty() {
            line.push_str("  ");
            line.push_str(&desc);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("  --help  Print this help and exit.\n");
    out.push_str("  --version  Print the component name and version and exit.\n");
    out
}
