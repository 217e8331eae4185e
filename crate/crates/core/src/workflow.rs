//! Workflow target: a Nextflow DSL2 module wrapping the native build.
//!
//! Process contract: input `tuple val(id), path(<file>)..., val(args)` where
//! the paths are the input-direction file arguments and `args` is a map of
//! all other argument values keyed by argument id; output
//! `tuple val(id), path(<file>)...` for the output-direction file arguments,
//! emitted as `output`.

use std::fmt::Write as _;
use std::path::Path;

use crate::args::{ArgumentSpec, Direction};
use crate::build::{ensure_valid, write_file, BuildArtifact, BuildError, GenerateError};
use crate::config::{ComponentConfig, EngineKind};
use crate::container::{ImageRef, APP_DIR};

/// File name of the emitted module.
pub const MODULE_FILE: &str = "main.nf";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowModule {
    pub module_text: String,
    pub process_name: String,
    pub container_ref: Option<ImageRef>,
}

const HELPERS: &str = r#"def compkitQuote(value) {
    "'" + value.toString().replace("'", "'\\''") + "'"
}

def compkitFlag(String flag, value) {
    if (value == null) {
        return ''
    }
    if (value instanceof Collection) {
        return value.collect { compkitFlag(flag, it) }.findAll { it }.join(' ')
    }
    return flag + ' ' + compkitQuote(value)
}

def compkitSwitch(String flag, value) {
    (value != null && value.toString() == 'true') ? flag : ''
}

def compkitOutput(Map args, String key, id, fallback) {
    def value = args[key]
    if (value != null) {
        return value.toString()
    }
    return fallback != null ? fallback : "${id}.${key}"
}
"#;

fn input_files(cfg: &ComponentConfig) -> impl Iterator<Item = &ArgumentSpec> {
    cfg.arguments
        .iter()
        .filter(|s| s.is_file() && s.direction == Direction::Input)
}

fn output_files(cfg: &ComponentConfig) -> impl Iterator<Item = &ArgumentSpec> {
    cfg.arguments
        .iter()
        .filter(|s| s.is_file() && s.direction == Direction::Output)
}

/// Groovy string literal.
fn groovy_string(s: &str) -> String {
    let mut out = String::from("'");
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn directive_value(v: &str) -> String {
    let numeric = !v.is_empty() && v.parse::<f64>().is_ok() && v.chars().all(|c| c.is_ascii_digit() || c == '.');
    if numeric || v == "true" || v == "false" {
        v.to_string()
    } else {
        groovy_string(v)
    }
}

/// Output file name expression for an output-direction file argument.
fn output_expr(spec: &ArgumentSpec) -> String {
    let fallback = match spec.default_tokens() {
        Ok(Some(tokens)) if !tokens.is_empty() => groovy_string(&tokens[0]),
        _ => "null".to_string(),
    };
    format!("compkitOutput(args, {}, id, {fallback})", groovy_string(spec.id()))
}

fn process_name(cfg: &ComponentConfig) -> String {
    cfg.name.clone()
}

pub fn generate_workflow_module(cfg: &ComponentConfig) -> Result<WorkflowModule, GenerateError> {
    let engine = cfg
        .engine(EngineKind::Workflow)
        .ok_or(GenerateError::MissingEngine(EngineKind::Workflow))?;
    let container_ref = ImageRef::for_component(cfg);
    let name = process_name(cfg);

    let mut out = String::new();
    writeln!(out, "// {} {}", cfg.name, cfg.version).unwrap();
    writeln!(
        out,
        "// Workflow module generated by compkit {}. Do not edit: rebuild instead.\n",
        crate::TOOL_VERSION
    )
    .unwrap();
    out.push_str("nextflow.enable.dsl = 2\n\n");
    out.push_str(HELPERS);

    writeln!(out, "\nprocess {name} {{").unwrap();
    out.push_str("    tag \"${id}\"\n");
    if let Some(image) = &container_ref {
        writeln!(out, "    container {}", groovy_string(&image.to_string())).unwrap();
    }
    for (key, value) in &engine.directives {
        writeln!(out, "    {key} {}", directive_value(value)).unwrap();
    }

    let mut inputs = vec!["val(id)".to_string()];
    inputs.extend(input_files(cfg).map(|s| format!("path({}_path)", s.id())));
    inputs.push("val(args)".to_string());
    writeln!(out, "\n    input:\n    tuple {}", inputs.join(", ")).unwrap();

    let mut outputs = vec!["val(id)".to_string()];
    outputs.extend(output_files(cfg).map(|s| format!("path(\"${{{}}}\")", output_expr(s))));
    writeln!(out, "\n    output:\n    tuple {}, emit: output", outputs.join(", ")).unwrap();

    out.push_str("\n    script:\n    def flags = [\n");
    for spec in &cfg.arguments {
        let flag = groovy_string(&spec.name);
        let id = spec.id();
        let expr = if spec.is_flag() {
            format!("compkitSwitch({flag}, args[{}])", groovy_string(id))
        } else if spec.is_file() && spec.direction == Direction::Input {
            format!("compkitFlag({flag}, {id}_path)")
        } else if spec.is_file() {
            format!("compkitFlag({flag}, {})", output_expr(spec))
        } else {
            format!("compkitFlag({flag}, args[{}])", groovy_string(id))
        };
        writeln!(out, "        {expr},").unwrap();
    }
    out.push_str("    ].findAll { it }.join(' ')\n");
    let exe = if container_ref.is_some() {
        format!("{APP_DIR}/{}", cfg.name)
    } else {
        format!("${{moduleDir}}/{}", cfg.name)
    };
    writeln!(out, "    \"\"\"\n    {exe} ${{flags}}\n    \"\"\"\n}}").unwrap();

    writeln!(
        out,
        "\nworkflow {name}_workflow {{\n    take:\n    input_ch\n\n    main:\n    {name}(input_ch)\n\n    emit:\n    output = {name}.out.output\n}}"
    )
    .unwrap();

    Ok(WorkflowModule {
        module_text: out,
        process_name: name,
        container_ref,
    })
}

/// Write `main.nf` beside a native build of the component.
pub fn build_workflow(cfg: &ComponentConfig, out_dir: &Path) -> Result<BuildArtifact, BuildError> {
    ensure_valid(cfg)?;
    let module = generate_workflow_module(cfg)?;
    let native = crate::native::build_native(cfg, out_dir)?;
    let entry_path = out_dir.join(MODULE_FILE);
    write_file(&entry_path, module.module_text.as_bytes(), false)?;
    let mut aux_files = vec![native.entry_path];
    aux_files.extend(native.aux_files);
    Ok(BuildArtifact {
        engine_kind: EngineKind::Workflow,
        output_dir: out_dir.to_path_buf(),
        entry_path,
        aux_files,
        version: cfg.version.clone(),
    })
}
