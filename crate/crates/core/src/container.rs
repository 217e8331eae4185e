//! Container target: a recipe built from a base image plus setup layers, and
//! a wrapper that runs the component inside the image with its file
//! arguments mounted.
//!
//! Build layout:
//!
//! ```text
//! <out>/<name>        container wrapper
//! <out>/Dockerfile    recipe
//! <out>/app/<name>    native wrapper, the image entrypoint
//! <out>/app/...       resources
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::args::render_help;
use crate::build::{ensure_valid, write_file, BuildArtifact, BuildError, GenerateError};
use crate::config::{ComponentConfig, EngineKind, EngineSpec, SetupRequirement};
use crate::shell::single_quote;
use crate::wrapper;

/// Directory inside the image holding the native build.
pub const APP_DIR: &str = "/app";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PackageManager {
    Apt,
    Apk,
    Yum,
    Pip,
    R,
}

impl PackageManager {
    pub const ALL: [PackageManager; 5] = [
        PackageManager::Apt,
        PackageManager::Apk,
        PackageManager::Yum,
        PackageManager::Pip,
        PackageManager::R,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PackageManager::Apt => "apt",
            PackageManager::Apk => "apk",
            PackageManager::Yum => "yum",
            PackageManager::Pip => "pip",
            PackageManager::R => "r",
        }
    }
}

impl fmt::Display for PackageManager {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unsupported package manager `{0}`")]
pub struct UnsupportedManager(pub String);

impl FromStr for PackageManager {
    type Err = UnsupportedManager;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PackageManager::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnsupportedManager(s.to_string()))
    }
}

/// Recipe lines for one setup requirement. Every manager yields exactly one
/// `RUN` line that also removes its caches.
pub fn setup_commands(req: &SetupRequirement) -> Result<Vec<String>, UnsupportedManager> {
    let manager: PackageManager = req.manager.parse()?;
    let pkgs = req.packages.join(" ");
    let line = match manager {
        PackageManager::Apt => format!(
            "RUN apt-get update && DEBIAN_FRONTEND=noninteractive apt-get install -y --no-install-recommends {pkgs} && rm -rf /var/lib/apt/lists/*"
        ),
        PackageManager::Apk => format!("RUN apk add --no-cache {pkgs}"),
        PackageManager::Yum => {
            format!("RUN yum install -y {pkgs} && yum clean all && rm -rf /var/cache/yum")
        }
        PackageManager::Pip => format!("RUN pip install --no-cache-dir {pkgs}"),
        PackageManager::R => {
            let installs: Vec<String> = req
                .packages
                .iter()
                .map(|p| {
                    let fun = if p.contains('/') { "install_github" } else { "install_cran" };
                    format!("Rscript -e 'remotes::{fun}(\"{p}\")'")
                })
                .collect();
            format!(
                "RUN Rscript -e 'if (!requireNamespace(\"remotes\", quietly = TRUE)) install.packages(\"remotes\", repos = \"https://cloud.r-project.org\")' && {} && rm -rf /tmp/*",
                installs.join(" && ")
            )
        }
    };
    Ok(vec![line])
}

/// `[registry/]name:tag`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ImageRef {
    pub registry: Option<String>,
    pub name: String,
    pub tag: String,
}

impl ImageRef {
    /// The image a component's container engine produces; the tag is the
    /// component version.
    pub fn for_component(cfg: &ComponentConfig) -> Option<ImageRef> {
        let engine = cfg.engine(EngineKind::Container)?;
        Some(ImageRef {
            registry: engine.registry.clone(),
            name: cfg.name.clone(),
            tag: cfg.version.clone(),
        })
    }
}

impl fmt::Display for ImageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(registry) = &self.registry {
            write!(f, "{registry}/")?;
        }
        write!(f, "{}:{}", self.name, self.tag)
    }
}

fn container_engine(cfg: &ComponentConfig) -> Result<&EngineSpec, GenerateError> {
    cfg.engine(EngineKind::Container)
        .ok_or(GenerateError::MissingEngine(EngineKind::Container))
}

/// The container recipe.
pub fn generate_containerfile(cfg: &ComponentConfig) -> Result<String, GenerateError> {
    let engine = container_engine(cfg)?;
    let image = engine
        .image
        .as_deref()
        .ok_or_else(|| GenerateError::Unsupported("container engine has no base image".into()))?;
    let mut out = format!("FROM {image}\n");
    for req in &engine.setup {
        let lines = setup_commands(req).map_err(|e| GenerateError::Unsupported(e.to_string()))?;
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out.push_str(&format!(
        "LABEL compkit.name=\"{}\" compkit.version=\"{}\"\n",
        cfg.name, cfg.version
    ));
    out.push_str(&format!("COPY app/ {APP_DIR}/\n"));
    Ok(out)
}

/// The host-side wrapper that runs the component inside its image.
pub fn generate_container_wrapper(cfg: &ComponentConfig) -> Result<String, GenerateError> {
    let image = ImageRef::for_component(cfg).ok_or(GenerateError::MissingEngine(EngineKind::Container))?;
    let recipe = generate_containerfile(cfg)?;

    let mut out = wrapper::header(cfg, "Container");
    out.push_str(&format!("COMPKIT_IMAGE={}\n", single_quote(&image.to_string())));
    out.push_str(wrapper::HELPERS);
    out.push_str(&wrapper::help_fn(&render_help(cfg)));
    out.push_str(&format!(
        r#"
compkit_recipe() {{
  printf '%s' {recipe}
}}

compkit_shq() {{
  local LC_ALL=C sq="'"
  case "$1" in
    ''|*[!A-Za-z0-9_=/,.+:@%-]*) COMPKIT_Q="'${{1//"$sq"/"$sq\\$sq$sq"}}'" ;;
    *) COMPKIT_Q="$1" ;;
  esac
}}

# Run a command, or print it when ---dryrun was given.
compkit_exec() {{
  if [ "$compkit_dryrun" = 1 ]; then
    local line= word
    for word in "$@"; do
      compkit_shq "$word"
      line="$line${{line:+ }}$COMPKIT_Q"
    done
    printf '%s\n' "$line"
    return 0
  fi
  if ! command -v "$1" >/dev/null 2>&1; then
    compkit_fail "container runtime '$1' not found on PATH"
  fi
  "$@"
}}

compkit_dryrun=0
compkit_meta=
compkit_setup_mode=build
compkit_rest=()
while [ $# -gt 0 ]; do
  case "$1" in
    ---dryrun)
      compkit_dryrun=1
      ;;
    ---setup)
      compkit_meta=setup
      case "${{2-}}" in
        build|pull|push)
          compkit_setup_mode="$2"
          shift
          ;;
      esac
      ;;
    ---dockerfile)
      compkit_meta=dockerfile
      ;;
    ---image)
      compkit_meta=image
      ;;
    ---*)
      compkit_fail "unknown meta-command: $1"
      ;;
    *)
      compkit_rest+=("$1")
      ;;
  esac
  shift
done
set -- "${{compkit_rest[@]}}"

compkit_engine="${{COMPKIT_CONTAINER_RUNTIME:-docker}}"
case "$compkit_meta" in
  dockerfile)
    compkit_recipe
    exit 0
    ;;
  image)
    printf '%s\n' "$COMPKIT_IMAGE"
    exit 0
    ;;
  setup)
    case "$compkit_setup_mode" in
      build)
        compkit_recipe | compkit_exec "$compkit_engine" build -t "$COMPKIT_IMAGE" -f - "$COMPKIT_RESOURCES_DIR"
        ;;
      pull)
        compkit_exec "$compkit_engine" pull "$COMPKIT_IMAGE"
        ;;
      push)
        compkit_exec "$compkit_engine" push "$COMPKIT_IMAGE"
        ;;
    esac
    exit $?
    ;;
esac
"#,
        recipe = single_quote(&recipe),
    ));
    out.push_str(&wrapper::parser(cfg));

    let file_args: Vec<_> = cfg.arguments.iter().filter(|s| s.is_file()).collect();
    out.push_str("\ncompkit_dirs=()\n");
    if !file_args.is_empty() {
        out.push_str(
            r#"
# Absolute form of a file argument in COMPKIT_ABS.
compkit_abs() {
  local p="$1"
  case "$p" in
    /*) ;;
    *)
      while [[ "$p" == ./* ]]; do p="${p#./}"; done
      p="$PWD/$p"
      ;;
  esac
  COMPKIT_ABS="$p"
}

compkit_parent() {
  compkit_abs "$1"
  local dir="${COMPKIT_ABS%/*}"
  [ -n "$dir" ] || dir=/
  compkit_dirs+=("$dir")
}

# In-container path of a file argument in COMPKIT_VALUE.
compkit_rewrite() {
  compkit_abs "$1"
  local dir="${COMPKIT_ABS%/*}" base="${COMPKIT_ABS##*/}" i
  [ -n "$dir" ] || dir=/
  for i in "${!compkit_mounts[@]}"; do
    if [ "${compkit_mounts[$i]}" = "$dir" ]; then
      COMPKIT_VALUE="/mnt/v$i/$base"
      return
    fi
  done
}
"#,
        );
        for spec in &file_args {
            let id = spec.id();
            let values = if spec.multiple {
                format!("\"${{compkit_list_{id}[@]}}\"")
            } else {
                format!("\"$compkit_val_{id}\"")
            };
            out.push_str(&format!(
                "if [ \"$compkit_seen_{id}\" = 1 ]; then\n  for compkit_f in {values}; do\n    compkit_parent \"$compkit_f\"\n  done\nfi\n"
            ));
        }
    }
    out.push_str(
        r#"
compkit_mounts=()
if [ "${#compkit_dirs[@]}" -gt 0 ]; then
  while IFS= read -r compkit_line; do
    compkit_mounts+=("$compkit_line")
  done < <(printf '%s\n' "${compkit_dirs[@]}" | LC_ALL=C sort -u)
fi

compkit_cmd=("$compkit_engine" run --rm -i)
for compkit_i in "${!compkit_mounts[@]}"; do
  compkit_cmd+=(-v "${compkit_mounts[$compkit_i]}:/mnt/v$compkit_i")
done
"#,
    );
    out.push_str(&format!(
        "compkit_cmd+=(--entrypoint {} \"$COMPKIT_IMAGE\")\n",
        single_quote(&format!("{APP_DIR}/{}", cfg.name))
    ));
    for spec in &cfg.arguments {
        let id = spec.id();
        let flag = &spec.name;
        let body = if spec.is_flag() {
            format!("  if [ \"$compkit_val_{id}\" = true ]; then\n    compkit_cmd+=({flag})\n  fi\n")
        } else if spec.multiple {
            let rewrite = if spec.is_file() { "    compkit_rewrite \"$compkit_x\"\n" } else { "    COMPKIT_VALUE=\"$compkit_x\"\n" };
            format!(
                "  for compkit_x in \"${{compkit_list_{id}[@]}}\"; do\n{rewrite}    compkit_cmd+=({flag} \"$COMPKIT_VALUE\")\n  done\n"
            )
        } else {
            let rewrite = if spec.is_file() {
                format!("  compkit_rewrite \"$compkit_val_{id}\"\n")
            } else {
                format!("  COMPKIT_VALUE=\"$compkit_val_{id}\"\n")
            };
            format!("{rewrite}  compkit_cmd+=({flag} \"$COMPKIT_VALUE\")\n")
        };
        out.push_str(&format!("if [ \"$compkit_seen_{id}\" = 1 ]; then\n{body}fi\n"));
    }
    out.push_str("compkit_exec \"${compkit_cmd[@]}\"\nexit $?\n");
    Ok(out)
}

/// Write the container wrapper, the recipe and the native build under `app/`.
pub fn build_container(cfg: &ComponentConfig, out_dir: &Path) -> Result<BuildArtifact, BuildError> {
    ensure_valid(cfg)?;
    let wrapper_text = generate_container_wrapper(cfg)?;
    let recipe = generate_containerfile(cfg)?;
    let app = crate::native::build_native(cfg, &out_dir.join("app"))?;

    let recipe_path = out_dir.join("Dockerfile");
    write_file(&recipe_path, recipe.as_bytes(), false)?;
    let entry_path = out_dir.join(&cfg.name);
    write_file(&entry_path, wrapper_text.as_bytes(), true)?;

    let mut aux_files = vec![recipe_path, app.entry_path];
    aux_files.extend(app.aux_files);
    Ok(BuildArtifact {
        engine_kind: EngineKind::Container,
        output_dir: out_dir.to_path_buf(),
        entry_path,
        aux_files,
        version: cfg.version.clone(),
    })
}
