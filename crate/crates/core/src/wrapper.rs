//! Bash code generation shared by the native and container wrappers.
//!
//! The generated parser mirrors [`crate::args::parse_args`],
//! [`crate::args::coerce`] and [`crate::args::check_files`] rule for rule,
//! including the exact error texts, so that a wrapper and the in-process
//! engine agree on every command line. Values are kept in canonical form
//! (integers without leading zeros, doubles as `<int>.<frac>[e<exp>]`,
//! booleans as `true`/`false`).
//!
//! Per argument `<id>` the wrapper keeps `compkit_seen_<id>` (1 once a value
//! is present, including defaults), `compkit_val_<id>` for single values and
//! the array `compkit_list_<id>` for multiple values.

use std::fmt::Write as _;

use crate::args::{ArgType, ArgumentSpec, Direction, ParamValue};
use crate::config::{ComponentConfig, Language};
use crate::inject::ScriptTemplate;
use crate::shell::single_quote;

/// Shebang, identity and resource-directory resolution.
pub(crate) fn header(cfg: &ComponentConfig, kind: &str) -> String {
    format!(
        r#"#!/usr/bin/env bash
# {name} {version}
#
# {kind} wrapper generated by compkit {tool}. Do not edit: rebuild instead.
# Requires bash.

COMPKIT_NAME={qname}
COMPKIT_VERSION={qversion}

compkit_source="${{BASH_SOURCE[0]}}"
while [ -h "$compkit_source" ]; do
  compkit_dir="$(cd -P -- "$(dirname -- "$compkit_source")" && pwd)"
  compkit_source="$(readlink -- "$compkit_source")"
  case "$compkit_source" in
    /*) ;;
    *) compkit_source="$compkit_dir/$compkit_source" ;;
  esac
done
COMPKIT_RESOURCES_DIR="$(cd -P -- "$(dirname -- "$compkit_source")" && pwd)"
"#,
        name = cfg.name,
        version = cfg.version,
        tool = crate::TOOL_VERSION,
        qname = single_quote(&cfg.name),
        qversion = single_quote(&cfg.version),
    )
}

/// Diagnostics, coercion and quoting helpers.
pub(crate) const HELPERS: &str = r#"
compkit_fail() {
  printf 'error: %s\n' "$1" >&2
  exit 1
}

compkit_warn() {
  printf 'warning: %s\n' "$1" >&2
}

# compkit_coerce <type> <token> <flag>: canonical value in COMPKIT_VALUE.
compkit_coerce() {
  local LC_ALL=C
  local type="$1" raw="$2" flag="$3" s sign= limit
  local bad="invalid value for $3: expected $1, got '$2'"
  case "$type" in
    string|file)
      COMPKIT_VALUE="$raw"
      ;;
    integer)
      s="$raw"
      case "$s" in [+-]*) sign="${s:0:1}"; s="${s:1}" ;; esac
      case "$s" in ''|*[!0123456789]*) compkit_fail "$bad" ;; esac
      s="${s#"${s%%[!0]*}"}"
      [ -n "$s" ] || s=0
      limit=9223372036854775807
      [ "$sign" = "-" ] && limit=9223372036854775808
      if [ "${#s}" -gt 19 ] || { [ "${#s}" -eq 19 ] && [[ "$s" > "$limit" ]]; }; then
        compkit_fail "$bad"
      fi
      if [ "$sign" = "-" ] && [ "$s" != 0 ]; then s="-$s"; fi
      COMPKIT_VALUE="$s"
      ;;
    double)
      s="$raw"
      case "$s" in [+-]*) sign="${s:0:1}"; s="${s:1}" ;; esac
      local mant="$s" exp= hasexp=0 int frac=
      case "$s" in *[eE]*) mant="${s%%[eE]*}"; exp="${s#*[eE]}"; hasexp=1 ;; esac
      if [ "$hasexp" = 1 ]; then
        case "${exp#[+-]}" in ''|*[!0123456789]*) compkit_fail "$bad" ;; esac
      fi
      case "$mant" in
        *.*) int="${mant%%.*}"; frac="${mant#*.}" ;;
        *) int="$mant" ;;
      esac
      case "$int" in *[!0123456789]*) compkit_fail "$bad" ;; esac
      case "$frac" in *[!0123456789]*) compkit_fail "$bad" ;; esac
      if [ -z "$int" ] && [ -z "$frac" ]; then compkit_fail "$bad"; fi
      int="${int#"${int%%[!0]*}"}"
      [ -n "$int" ] || int=0
      [ -n "$frac" ] || frac=0
      s="$int.$frac"
      [ "$hasexp" = 1 ] && s="${s}e$exp"
      [ "$sign" = "-" ] && s="-$s"
      COMPKIT_VALUE="$s"
      ;;
    boolean|boolean_true)
      case "$raw" in
        [Tt][Rr][Uu][Ee]|[Yy][Ee][Ss]|1) COMPKIT_VALUE=true ;;
        [Ff][Aa][Ll][Ss][Ee]|[Nn][Oo]|0) COMPKIT_VALUE=false ;;
        *) compkit_fail "$bad" ;;
      esac
      ;;
  esac
}

# Single-quoted bash word.
compkit_q_bash() {
  local sq="'"
  COMPKIT_Q="'${1//"$sq"/"$sq\\$sq$sq"}'"
}

# Double-quoted python/R/javascript string literal.
compkit_q_dq() {
  local s="$1" bs='\' dq='"' nl=$'\n' cr=$'\r'
  s="${s//"$bs"/"$bs$bs"}"
  s="${s//"$dq"/"$bs$dq"}"
  s="${s//"$nl"/"${bs}n"}"
  s="${s//"$cr"/"${bs}r"}"
  COMPKIT_Q="\"$s\""
}
"#;

pub(crate) fn help_fn(help: &str) -> String {
    format!("\ncompkit_help() {{\n  printf '%s' {}\n}}\n", single_quote(help))
}

/// Argument loop, defaults, required checks and file-existence checks.
pub(crate) fn parser(cfg: &ComponentConfig) -> String {
    let mut out = String::from("\n# Repeat warnings are only reported once parsing succeeds.\ncompkit_warnings=()\n");
    for spec in &cfg.arguments {
        let id = spec.id();
        writeln!(out, "compkit_seen_{id}=0").unwrap();
        if spec.multiple {
            writeln!(out, "compkit_list_{id}=()").unwrap();
        }
    }
    for spec in &cfg.arguments {
        out.push_str(&store_fn(spec));
    }

    out.push_str("\nwhile [ $# -gt 0 ]; do\n  case \"$1\" in\n");
    out.push_str("    --help)\n      compkit_help\n      exit 0\n      ;;\n");
    out.push_str(
        "    --version)\n      printf '%s %s\\n' \"$COMPKIT_NAME\" \"$COMPKIT_VERSION\"\n      exit 0\n      ;;\n",
    );
    for spec in &cfg.arguments {
        let id = spec.id();
        let flags = spec.flags().collect::<Vec<_>>().join("|");
        let eq_flags = spec.flags().map(|f| format!("{f}=*")).collect::<Vec<_>>().join("|");
        if spec.is_flag() {
            writeln!(out, "    {flags})\n      compkit_store_{id}\n      shift\n      ;;").unwrap();
            writeln!(
                out,
                "    {eq_flags})\n      compkit_fail {}\n      ;;",
                single_quote(&format!("argument {} does not take a value", spec.name))
            )
            .unwrap();
        } else {
            writeln!(
                out,
                "    {flags})\n      [ $# -ge 2 ] || compkit_fail {}\n      compkit_store_{id} \"$2\"\n      shift 2\n      ;;",
                single_quote(&format!("missing value for argument {}", spec.name))
            )
            .unwrap();
            writeln!(out, "    {eq_flags})\n      compkit_store_{id} \"${{1#*=}}\"\n      shift\n      ;;").unwrap();
        }
    }
    out.push_str("    *)\n      compkit_fail \"unknown argument: $1\"\n      ;;\n  esac\ndone\n");

    for spec in &cfg.arguments {
        out.push_str(&absent_handling(spec));
    }
    out.push_str("for compkit_w in \"${compkit_warnings[@]}\"; do\n  compkit_warn \"$compkit_w\"\ndone\n");

    let checked: Vec<&ArgumentSpec> = cfg
        .arguments
        .iter()
        .filter(|s| s.is_file() && s.must_exist && s.direction == Direction::Input)
        .collect();
    if !checked.is_empty() {
        out.push_str("\ncompkit_missing=0\n");
        for spec in checked {
            let id = spec.id();
            let values = if spec.multiple {
                format!("\"${{compkit_list_{id}[@]}}\"")
            } else {
                format!("\"$compkit_val_{id}\"")
            };
            writeln!(
                out,
                "if [ \"$compkit_seen_{id}\" = 1 ]; then\n  for compkit_f in {values}; do\n    if [ ! -e \"$compkit_f\" ]; then\n      printf 'error: file not found for %s: %s\\n' {flag} \"$compkit_f\" >&2\n      compkit_missing=1\n    fi\n  done\nfi",
                flag = spec.name
            )
            .unwrap();
        }
        out.push_str("[ \"$compkit_missing\" = 0 ] || exit 1\n");
    }
    out
}

fn store_fn(spec: &ArgumentSpec) -> String {
    let id = spec.id();
    let ty = spec.arg_type.as_str();
    let name = &spec.name;
    let warn = format!(
        "  if [ \"$compkit_seen_{id}\" = 1 ]; then\n    compkit_warnings+=({})\n  fi\n",
        single_quote(&format!("{name} given more than once; using the last value"))
    );
    if spec.is_flag() {
        format!("\ncompkit_store_{id}() {{\n{warn}  compkit_seen_{id}=1\n  compkit_val_{id}=true\n}}\n")
    } else if spec.multiple {
        format!(
            r#"
compkit_store_{id}() {{
  local rest="$1" sep={sep} part
  while [[ "$rest" == *"$sep"* ]]; do
    part="${{rest%%"$sep"*}}"
    rest="${{rest#*"$sep"}}"
    compkit_coerce {ty} "$part" {name}
    compkit_list_{id}+=("$COMPKIT_VALUE")
  done
  compkit_coerce {ty} "$rest" {name}
  compkit_list_{id}+=("$COMPKIT_VALUE")
  compkit_seen_{id}=1
}}
"#,
            sep = single_quote(spec.sep()),
        )
    } else {
        format!(
            "\ncompkit_store_{id}() {{\n  compkit_coerce {ty} \"$1\" {name}\n{warn}  compkit_seen_{id}=1\n  compkit_val_{id}=\"$COMPKIT_VALUE\"\n}}\n"
        )
    }
}

fn absent_handling(spec: &ArgumentSpec) -> String {
    let id = spec.id();
    let fill = match spec.default_value() {
        Ok(Some(default)) => {
            let tokens: Vec<String> = default
                .values()
                .iter()
                .map(|v| single_quote(&canonical_token(v)))
                .collect();
            match default {
                ParamValue::Multiple(_) => format!("compkit_list_{id}=({})", tokens.join(" ")),
                ParamValue::Single(_) => format!("compkit_val_{id}={}", tokens[0]),
            }
        }
        _ if spec.is_flag() => format!("compkit_val_{id}=false"),
        _ if spec.required => {
            return format!(
                "if [ \"$compkit_seen_{id}\" != 1 ]; then\n  compkit_fail {}\nfi\n",
                single_quote(&format!("missing required argument {}", spec.name))
            )
        }
        _ => return String::new(),
    };
    format!("if [ \"$compkit_seen_{id}\" != 1 ]; then\n  {fill}\n  compkit_seen_{id}=1\nfi\n")
}

/// The token the shell coercion would produce for a value.
fn canonical_token(v: &crate::args::Value) -> String {
    use crate::args::Value;
    match v {
        Value::Double(d) if d.is_finite() => {
            let s = format!("{d:?}");
            if s.contains(['.', 'e']) {
                s
            } else {
                format!("{s}.0")
            }
        }
        other => other.token(),
    }
}

/// `compkit_render_block`: prints the injection body for `language` using
/// the parsed values, byte-identical to [`crate::inject::serialize_params`]
/// for string, file, integer and boolean values.
pub(crate) fn render_block_fn(cfg: &ComponentConfig, language: Language, meta_keys: &[(&str, &str)]) -> String {
    let mut out = String::from("\ncompkit_render_block() {\n");
    if language == Language::Bash {
        for spec in &cfg.arguments {
            let id = spec.id();
            let assign = if spec.multiple {
                format!(
                    "    compkit_items=\n    for compkit_x in \"${{compkit_list_{id}[@]}}\"; do\n      compkit_q_bash \"$compkit_x\"\n      compkit_items=\"$compkit_items${{compkit_items:+ }}$COMPKIT_Q\"\n    done\n    printf 'par_{id}=(%s)\\n' \"$compkit_items\"\n"
                )
            } else {
                format!("    compkit_q_bash \"$compkit_val_{id}\"\n    printf 'par_{id}=%s\\n' \"$COMPKIT_Q\"\n")
            };
            writeln!(
                out,
                "  if [ \"$compkit_seen_{id}\" = 1 ]; then\n{assign}  else\n    printf 'unset par_{id}\\n'\n  fi"
            )
            .unwrap();
        }
        for (key, var) in meta_keys {
            writeln!(out, "  compkit_q_bash \"${var}\"\n  printf 'meta_{key}=%s\\n' \"$COMPKIT_Q\"").unwrap();
        }
        out.push_str("}\n");
        return out;
    }

    let (assoc, null, list_open, list_close) = match language {
        Language::Python => (": ", "None", "[", "]"),
        Language::R => (" = ", "NULL", "c(", ")"),
        Language::Javascript => (": ", "null", "[", "]"),
        Language::Bash => unreachable!(),
    };
    let (par_open, par_close, meta_open) = match language {
        Language::Python => ("par = {", "}", "meta = {"),
        Language::R => ("par <- list(", ")", "meta <- list("),
        _ => ("const par = {", "};", "const meta = {"),
    };

    out.push_str("  compkit_n=0\n");
    writeln!(out, "  printf '%s\\n' {}", single_quote(par_open)).unwrap();
    for spec in &cfg.arguments {
        let id = spec.id();
        let lit = literal_fn(language, spec.arg_type);
        let value = if spec.multiple {
            format!(
                "    compkit_items=\n    for compkit_x in \"${{compkit_list_{id}[@]}}\"; do\n      {lit} \"$compkit_x\"\n      compkit_items=\"$compkit_items${{compkit_items:+, }}$COMPKIT_Q\"\n    done\n    COMPKIT_Q={}\"$compkit_items\"{}\n",
                single_quote(list_open),
                single_quote(list_close)
            )
        } else {
            format!("    {lit} \"$compkit_val_{id}\"\n")
        };
        writeln!(
            out,
            "  if [ \"$compkit_seen_{id}\" = 1 ]; then\n{value}  else\n    COMPKIT_Q={null}\n  fi\n  compkit_entry {} \"$COMPKIT_Q\"",
            single_quote(&format!("  \"{id}\"{assoc}"))
        )
        .unwrap();
    }
    writeln!(out, "  compkit_close {}", single_quote(par_close)).unwrap();
    writeln!(out, "  printf '%s\\n' {}", single_quote(meta_open)).unwrap();
    for (key, var) in meta_keys {
        writeln!(
            out,
            "  compkit_q_dq \"${var}\"\n  compkit_entry {} \"$COMPKIT_Q\"",
            single_quote(&format!("  \"{key}\"{assoc}"))
        )
        .unwrap();
    }
    writeln!(out, "  compkit_close {}", single_quote(par_close)).unwrap();
    out.push_str("}\n");

    out.push_str(
        r#"
compkit_entry() {
  if [ "$compkit_n" -gt 0 ]; then printf ',\n'; fi
  printf '%s%s' "$1" "$2"
  compkit_n=$((compkit_n + 1))
}

compkit_close() {
  if [ "$compkit_n" -gt 0 ]; then printf '\n'; fi
  printf '%s\n' "$1"
  compkit_n=0
}
"#,
    );
    out.push_str(&literal_helpers(language));
    out
}

fn literal_fn(language: Language, ty: ArgType) -> &'static str {
    let _ = language;
    match ty {
        ArgType::String | ArgType::File => "compkit_q_dq",
        ArgType::Integer => "compkit_lit_integer",
        ArgType::Double => "compkit_lit_double",
        ArgType::Boolean | ArgType::BooleanTrue => "compkit_lit_boolean",
    }
}

fn literal_helpers(language: Language) -> String {
    let (t, f) = match language {
        Language::Python => ("True", "False"),
        Language::R => ("TRUE", "FALSE"),
        _ => ("true", "false"),
    };
    let integer = if language == Language::R {
        "  if [ \"$1\" -ge -2147483648 ] && [ \"$1\" -le 2147483647 ]; then\n    COMPKIT_Q=\"$1L\"\n  else\n    COMPKIT_Q=\"$1\"\n  fi\n"
    } else {
        "  COMPKIT_Q=\"$1\"\n"
    };
    format!(
        "\ncompkit_lit_integer() {{\n{integer}}}\n\ncompkit_lit_double() {{\n  COMPKIT_Q=\"$1\"\n}}\n\ncompkit_lit_boolean() {{\n  if [ \"$1\" = true ]; then COMPKIT_Q={t}; else COMPKIT_Q={f}; fi\n}}\n"
    )
}

/// Writes the injected script to `$1` from the embedded template.
pub(crate) fn write_script_fn(template: &ScriptTemplate) -> String {
    format!(
        "\ncompkit_write_script() {{\n  {{\n    printf '%s' {}\n    compkit_render_block\n    printf '%s' {}\n  }} > \"$1\"\n}}\n",
        single_quote(&template.prefix),
        single_quote(&template.suffix)
    )
}
