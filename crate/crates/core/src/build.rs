//! Build dispatch and the artifact/error types shared by all targets.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{
    resolve_resources, validate_config, ComponentConfig, Diagnostic, EngineKind, ResourceError,
    ResourceSource, ResolvedResource,
};
use crate::inject::InjectError;

/// What a build left on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildArtifact {
    pub engine_kind: EngineKind,
    pub output_dir: PathBuf,
    /// The executable (native, container) or the module file (workflow).
    pub entry_path: PathBuf,
    /// Every other file written, in write order.
    pub aux_files: Vec<PathBuf>,
    pub version: String,
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("component has no main script")]
    NoMainScript,
    #[error("engine `{0}` is not configured for this component")]
    MissingEngine(EngineKind),
    #[error("cannot read main script {}: {source}", path.display())]
    ReadScript { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Inject(#[from] InjectError),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("invalid config: {}", first_error(.0))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

fn first_error(diags: &[Diagnostic]) -> String {
    let errors: Vec<String> = diags.iter().filter(|d| d.is_error()).map(|d| d.to_string()).collect();
    errors.join("; ")
}

/// Validate `cfg` and build it for `kind` into `out_dir`.
pub fn build(cfg: &ComponentConfig, kind: EngineKind, out_dir: &Path) -> Result<BuildArtifact, BuildError> {
    match kind {
        EngineKind::Native => crate::native::build_native(cfg, out_dir),
        EngineKind::Container => crate::container::build_container(cfg, out_dir),
        EngineKind::Workflow => crate::workflow::build_workflow(cfg, out_dir),
    }
}

pub(crate) fn ensure_valid(cfg: &ComponentConfig) -> Result<(), BuildError> {
    let diags = validate_config(cfg);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(BuildError::Invalid(diags));
    }
    Ok(())
}

/// Text of the main script, read from disk or taken inline.
pub(crate) fn main_script_text(cfg: &ComponentConfig) -> Result<String, GenerateError> {
    let main = cfg.main_script().ok_or(GenerateError::NoMainScript)?;
    if let Some(text) = &main.text {
        return Ok(text.clone());
    }
    let rel = main.path.as_deref().ok_or(GenerateError::NoMainScript)?;
    let path = cfg.base_dir().join(rel);
    fs::read_to_string(&path).map_err(|source| GenerateError::ReadScript { path, source })
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BuildError + '_ {
    move |source| BuildError::Io { path: path.to_path_buf(), source }
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), BuildError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub(crate) fn write_file(path: &Path, contents: &[u8], executable: bool) -> Result<(), BuildError> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, contents).map_err(io_err(path))?;
    set_mode(path, if executable { 0o755 } else { 0o644 })
}

#[cfg(unix)]
fn set_mode(path: &Path, mode: u32) -> Result<(), BuildError> {
    use std::os::unix::fs::PermissionsExt;
    fs::set_permissions(path, fs::Permissions::from_mode(mode)).map_err(io_err(path))
}

#[cfg(not(unix))]
fn set_mode(_path: &Path, _mode: u32) -> Result<(), BuildError> {
    Ok(())
}

/// Copy resolved resources into `dir`, returning the written paths.
pub(crate) fn copy_resources(resources: &[ResolvedResource], dir: &Path) -> Result<Vec<PathBuf>, BuildError> {
    let mut written = Vec::with_capacity(resources.len());
    for res in resources {
        let dest = dir.join(&res.dest);
        let contents = match &res.source {
            ResourceSource::File(src) => fs::read(src).map_err(io_err(src))?,
            ResourceSource::Text(text) => text.clone().into_bytes(),
        };
        let executable = match &res.source {
            ResourceSource::File(src) => is_executable(src),
            ResourceSource::Text(_) => false,
        };
        write_file(&dest, &contents, executable)?;
        written.push(dest);
    }
    Ok(written)
}

#[cfg(unix)]
fn is_executable(path: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    fs::metadata(path).map(|m| m.permissions().mode() & 0o111 != 0).unwrap_or(false)
}

#[cfg(not(unix))]
fn is_executable(_path: &Path) -> bool {
    false
}

/// Resolve and copy all resources of `cfg`.
pub(crate) fn stage_resources(cfg: &ComponentConfig, dir: &Path) -> Result<Vec<PathBuf>, BuildError> {
    let resolved = resolve_resources(cfg)?;
    copy_resources(&resolved, dir)
}
