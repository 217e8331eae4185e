//! Native target: a standalone bash executable that parses arguments, injects
//! them into a temporary copy of the script and runs the language runtime.

use std::path::Path;

use crate::args::render_help;
use crate::build::{
    create_dir, ensure_valid, main_script_text, stage_resources, write_file, BuildArtifact,
    BuildError, GenerateError,
};
use crate::config::{ComponentConfig, EngineKind};
use crate::inject::ScriptTemplate;
use crate::shell::single_quote;
use crate::wrapper;

/// Meta keys injected next to `par`, with the wrapper variable holding each.
pub(crate) const META_KEYS: &[(&str, &str)] = &[
    ("name", "COMPKIT_NAME"),
    ("version", "COMPKIT_VERSION"),
    ("resources_dir", "COMPKIT_RESOURCES_DIR"),
    ("temp_dir", "compkit_tmp"),
];

/// Wrapper text for the native executable.
pub fn generate_native_wrapper(cfg: &ComponentConfig) -> Result<String, GenerateError> {
    let main = cfg.main_script().ok_or(GenerateError::NoMainScript)?;
    let language = main.language.ok_or(GenerateError::NoMainScript)?;
    let script = main_script_text(cfg)?;
    let template = ScriptTemplate::parse(&script, language)?;
    let script_name = main
        .dest_name()
        .and_then(|d| d.rsplit('/').next().map(str::to_string))
        .unwrap_or_else(|| format!("main.{}", language.extension()));

    let mut out = wrapper::header(cfg, "Native");
    out.push_str(wrapper::HELPERS);
    out.push_str(&wrapper::help_fn(&render_help(cfg)));
    out.push_str(&wrapper::render_block_fn(cfg, language, META_KEYS));
    out.push_str(&wrapper::write_script_fn(&template));
    out.push_str(&wrapper::parser(cfg));
    out.push_str(&format!(
        r#"
compkit_runtime={runtime}
if ! command -v "$compkit_runtime" >/dev/null 2>&1; then
  compkit_fail "runtime '$compkit_runtime' not found on PATH"
fi
compkit_tmp="$(mktemp -d "${{TMPDIR:-/tmp}}/compkit_{name}.XXXXXX")" || compkit_fail "cannot create a temporary directory"
if [ "${{COMPKIT_DEBUG:-}}" = 1 ]; then
  printf 'debug: keeping %s\n' "$compkit_tmp" >&2
else
  trap 'rm -rf "$compkit_tmp"' EXIT
fi
compkit_write_script "$compkit_tmp/"{script}
"$compkit_runtime" "$compkit_tmp/"{script}
exit $?
"#,
        runtime = language.runtime(),
        name = cfg.name,
        script = single_quote(&script_name),
    ));
    Ok(out)
}

/// Write the native executable `<out_dir>/<name>` plus all resources.
pub fn build_native(cfg: &ComponentConfig, out_dir: &Path) -> Result<BuildArtifact, BuildError> {
    ensure_valid(cfg)?;
    let wrapper_text = generate_native_wrapper(cfg)?;
    create_dir(out_dir)?;
    let aux_files = stage_resources(cfg, out_dir)?;
    let entry_path = out_dir.join(&cfg.name);
    write_file(&entry_path, wrapper_text.as_bytes(), true)?;
    Ok(BuildArtifact {
        engine_kind: EngineKind::Native,
        output_dir: out_dir.to_path_buf(),
        entry_path,
        aux_files,
        version: cfg.version.clone(),
    })
}
