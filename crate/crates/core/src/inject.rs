//! Parameter injection into component scripts.
//!
//! A script may contain one marker-delimited block:
//!
//! ```python
//! # COMPKIT START
//! par = {"input": "placeholder.txt"}
//! # COMPKIT END
//! ```
//!
//! (`//` comments for javascript). Everything between the
//! markers is replaced by assignments binding `par` and `meta` as native
//! literals of the script's language, so the script runs standalone during
//! development and receives real values once built. Scripts without markers
//! get the block inserted after the interpreter line, or at the top.

use indexmap::IndexMap;
use thiserror::Error;

use crate::args::{ParamMap, ParamValue, Value};
use crate::config::Language;

/// Values exposed to scripts as `meta`: at least `name`, `version` and
/// `resources_dir`.
pub type Meta = IndexMap<String, String>;

pub const START_TEXT: &str = "COMPKIT START";
pub const END_TEXT: &str = "COMPKIT END";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InjectError {
    #[error("line {0}: injection start marker has no matching end marker")]
    MissingEnd(usize),
    #[error("line {0}: injection end marker appears before any start marker")]
    EndBeforeStart(usize),
    #[error("line {0}: only one injection block is allowed per script")]
    MultipleBlocks(usize),
}

/// A generated block of assignments for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectionBlock {
    pub language: Language,
    pub body: String,
}

impl InjectionBlock {
    pub fn new(language: Language, params: &ParamMap, meta: &Meta) -> Self {
        InjectionBlock {
            language,
            body: serialize_params(language, params, meta),
        }
    }

    pub fn start_marker(&self) -> String {
        start_marker(self.language)
    }

    pub fn end_marker(&self) -> String {
        end_marker(self.language)
    }

    /// Body wrapped in its markers.
    pub fn render(&self) -> String {
        format!("{}\n{}{}\n", self.start_marker(), self.body, self.end_marker())
    }
}

pub fn start_marker(language: Language) -> String {
    format!("{} {START_TEXT}", language.comment_token())
}

pub fn end_marker(language: Language) -> String {
    format!("{} {END_TEXT}", language.comment_token())
}

/// The script split around the injection point: the injected script is
/// always `prefix + body + suffix`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ScriptTemplate {
    pub prefix: String,
    pub suffix: String,
}

impl ScriptTemplate {
    pub fn parse(script: &str, language: Language) -> Result<Self, InjectError> {
        let token = language.comment_token();
        let is_marker = |line: &str, text: &str| {
            let trimmed = line.trim_start();
            trimmed.starts_with(token) && trimmed.contains(text)
        };

        let mut start: Option<usize> = None;
        let mut end: Option<usize> = None;
        let mut offset = 0;
        for (lineno, line) in script.split_inclusive('\n').enumerate() {
            let lineno = lineno + 1;
            if is_marker(line, START_TEXT) {
                if start.is_some() {
                    return Err(InjectError::MultipleBlocks(lineno));
                }
                start = Some(offset + line.len());
            } else if is_marker(line, END_TEXT) {
                match (start, end) {
                    (None, _) => return Err(InjectError::EndBeforeStart(lineno)),
                    (Some(_), Some(_)) => return Err(InjectError::MultipleBlocks(lineno)),
                    (Some(_), None) => end = Some(offset),
                }
            }
            offset += line.len();
        }

        match (start, end) {
            (Some(s), Some(e)) => Ok(ScriptTemplate {
                prefix: script[..s].to_string(),
                suffix: script[e..].to_string(),
            }),
            (Some(_), None) => {
                let lineno = script[..start.unwrap()].matches('\n').count().max(1);
                Err(InjectError::MissingEnd(lineno))
            }
            _ => {
                let (shebang, rest) = match script.split_inclusive('\n').next() {
                    Some(first) if first.starts_with("#!") => (first, &script[first.len()..]),
                    _ => ("", script),
                };
                let mut prefix = shebang.to_string();
                if !prefix.is_empty() && !prefix.ends_with('\n') {
                    prefix.push('\n');
                }
                prefix.push_str(&start_marker(language));
                prefix.push('\n');
                Ok(ScriptTemplate {
                    prefix,
                    suffix: format!("{}\n{rest}", end_marker(language)),
                })
            }
        }
    }
}

/// Splice `block` into `script`.
pub fn inject(script: &str, language: Language, block: &InjectionBlock) -> Result<String, InjectError> {
    let template = ScriptTemplate::parse(script, language)?;
    Ok(format!("{}{}{}", template.prefix, block.body, template.suffix))
}

/// Assignments binding `par` and `meta` in the given language.
///
/// Bash gets one variable per key (`par_<id>`, `meta_<key>`) and arrays for
/// multiple values; absent values are `unset`. Python, R and javascript get
/// a single mapping named `par` and one named `meta`.
pub fn serialize_params(language: Language, params: &ParamMap, meta: &Meta) -> String {
    let par: Vec<(String, String)> = params
        .iter()
        .map(|(k, v)| (k.to_string(), param_literal(language, v)))
        .collect();
    let meta: Vec<(String, String)> = meta
        .iter()
        .map(|(k, v)| (k.clone(), string_literal(language, v)))
        .collect();

    let mut out = String::new();
    if language == Language::Bash {
        for (prefix, entries) in [("par", &par), ("meta", &meta)] {
            for (key, lit) in entries {
                match lit.as_str() {
                    "" => out.push_str(&format!("unset {prefix}_{key}\n")),
                    _ => out.push_str(&format!("{prefix}_{key}={lit}\n")),
                }
            }
        }
        return out;
    }
    out.push_str(&mapping(language, "par", &par));
    out.push_str(&mapping(language, "meta", &meta));
    out
}

/// `open`, entries joined by ",\n", `close`. No trailing comma, which R
/// rejects.
fn mapping(language: Language, var: &str, entries: &[(String, String)]) -> String {
    let (open, assoc, close) = match language {
        Language::Python => (format!("{var} = {{"), ": ", "}"),
        Language::R => (format!("{var} <- list("), " = ", ")"),
        Language::Javascript => (format!("const {var} = {{"), ": ", "};"),
        Language::Bash => unreachable!("bash uses per-key variables"),
    };
    let mut out = open;
    out.push('\n');
    let body = entries
        .iter()
        .map(|(k, lit)| format!("  \"{k}\"{assoc}{lit}"))
        .collect::<Vec<_>>()
        .join(",\n");
    if !body.is_empty() {
        out.push_str(&body);
        out.push('\n');
    }
    out.push_str(close);
    out.push('\n');
    out
}

fn param_literal(language: Language, value: Option<&ParamValue>) -> String {
    match value {
        None => null_literal(language).to_string(),
        Some(ParamValue::Single(v)) => value_literal(language, v),
        Some(ParamValue::Multiple(vs)) => {
            let items: Vec<String> = vs.iter().map(|v| value_literal(language, v)).collect();
            match language {
                Language::Bash => format!("({})", items.join(" ")),
                Language::R => format!("c({})", items.join(", ")),
                _ => format!("[{}]", items.join(", ")),
            }
        }
    }
}

fn null_literal(language: Language) -> &'static str {
    match language {
        Language::Bash => "",
        Language::Python => "None",
        Language::R => "NULL",
        Language::Javascript => "null",
    }
}

fn value_literal(language: Language, value: &Value) -> String {
    if language == Language::Bash {
        return bash_string(&value.token());
    }
    match value {
        Value::String(s) | Value::File(s) => quoted_string(s),
        Value::Boolean(b) => match (language, b) {
            (Language::Python, true) => "True".into(),
            (Language::Python, false) => "False".into(),
            (Language::R, true) => "TRUE".into(),
            (Language::R, false) => "FALSE".into(),
            (_, b) => b.to_string(),
        },
        Value::Integer(i) => match language {
            Language::R if i32::try_from(*i).is_ok() => format!("{i}L"),
            _ => i.to_string(),
        },
        Value::Double(d) if d.is_finite() => format!("{d:?}"),
        Value::Double(d) => {
            let neg = if d.is_sign_negative() { "-" } else { "" };
            match language {
                Language::Python => format!("float(\"{neg}inf\")"),
                Language::R => format!("{neg}Inf"),
                _ => format!("{neg}Infinity"),
            }
        }
    }
}

fn string_literal(language: Language, s: &str) -> String {
    match language {
        Language::Bash => bash_string(s),
        _ => quoted_string(s),
    }
}

/// Single-quoted bash word. Double quotes are avoided because bash
/// corrupts DEL and SOH bytes inside double-quoted array elements.
pub(crate) fn bash_string(s: &str) -> String {
    crate::shell::single_quote(s)
}

/// Double-quoted string literal valid in python, R and javascript.
pub(crate) fn quoted_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
