use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};

use thiserror::Error;

use super::{ComponentConfig, Resource};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResourceSource {
    File(PathBuf),
    Text(String),
}

/// A resource paired with its destination inside a build directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedResource {
    pub source: ResourceSource,
    pub dest: String,
    pub resource: Resource,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResourceError {
    #[error("resource file not found: {}", join_paths(.0))]
    Missing(Vec<PathBuf>),
    #[error("resources collide on destination `{0}`")]
    Collision(String),
    #[error("invalid resource destination `{0}` (must be a relative path inside the output directory)")]
    BadDest(String),
    #[error("resource #{0} must set exactly one of `path` or `text`")]
    Ambiguous(usize),
}

fn join_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Map every resource to a unique output-relative destination. Relative
/// paths are resolved against the directory holding the config.
pub fn resolve_resources(cfg: &ComponentConfig) -> Result<Vec<ResolvedResource>, ResourceError> {
    resolve(&cfg.base_dir(), &cfg.resources)
}

/// Same as [`resolve_resources`] for the test resources.
pub fn resolve_test_resources(
    cfg: &ComponentConfig,
) -> Result<Vec<ResolvedResource>, ResourceError> {
    resolve(&cfg.base_dir(), &cfg.test_resources)
}

fn resolve(base: &Path, resources: &[Resource]) -> Result<Vec<ResolvedResource>, ResourceError> {
    let mut resolved = Vec::with_capacity(resources.len());
    let mut missing = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, res) in resources.iter().enumerate() {
        let source = match (&res.path, &res.text) {
            (Some(path), None) => {
                let full = base.join(path);
                if !full.is_file() {
                    missing.push(full.clone());
                }
                ResourceSource::File(full)
            }
            (None, Some(text)) => ResourceSource::Text(text.clone()),
            _ => return Err(ResourceError::Ambiguous(idx)),
        };
        let dest = res.dest_name().ok_or(ResourceError::Ambiguous(idx))?;
        if !is_safe_dest(&dest) {
            return Err(ResourceError::BadDest(dest));
        }
        if seen.insert(dest.clone(), idx).is_some() {
            return Err(ResourceError::Collision(dest));
        }
        resolved.push(ResolvedResource {
            source,
            dest,
            resource: res.clone(),
        });
    }

    if !missing.is_empty() {
        return Err(ResourceError::Missing(missing));
    }
    Ok(resolved)
}

pub(crate) fn is_safe_dest(dest: &str) -> bool {
    let path = Path::new(dest);
    !dest.is_empty()
        && path
            .components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
        && path.components().any(|c| matches!(c, Component::Normal(_)))
}
