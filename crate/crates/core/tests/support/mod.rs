#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use compkit_core::{
    build, check_files, parse_args, render_help, ComponentConfig, EngineKind, ParseOutcome,
};
use sha2::{Digest, Sha256};

/// Write `yaml` as `<name>.comp.yaml` in `dir` and parse it.
pub fn component(dir: &Path, yaml: &str) -> ComponentConfig {
    fs::create_dir_all(dir).unwrap();
    let path = dir.join("component.comp.yaml");
    fs::write(&path, yaml).unwrap();
    compkit_core::load_config(&path).unwrap().config
}

pub fn build_native(cfg: &ComponentConfig, out: &Path) -> PathBuf {
    build(cfg, EngineKind::Native, out).unwrap().entry_path
}

pub fn run_in(exe: &Path, args: &[String], cwd: &Path) -> Output {
    Command::new(exe).args(args).current_dir(cwd).output().unwrap()
}

pub fn has_runtime(name: &str) -> bool {
    which::which(name).is_ok()
}

/// What the in-process engine says a wrapper must do for `argv`: exit
/// code, exact stdout (or the parameter JSON) and exact stderr.
#[derive(Debug, PartialEq)]
pub enum Expected {
    Params { json: serde_json::Value, stderr: String },
    Text { stdout: String },
    Failure { stderr: String },
}

pub fn oracle(cfg: &ComponentConfig, argv: &[String], cwd: &Path) -> Expected {
    match parse_args(&cfg.arguments, argv) {
        Err(e) => Expected::Failure { stderr: format!("error: {e}\n") },
        Ok(ParseOutcome::Help) => Expected::Text { stdout: render_help(cfg) },
        Ok(ParseOutcome::Version) => Expected::Text {
            stdout: format!("{} {}\n", cfg.name, cfg.version),
        },
        Ok(ParseOutcome::Params { params, warnings }) => {
            let mut stderr: String = warnings.iter().map(|w| format!("warning: {w}\n")).collect();
            // check_files resolves relative paths against the process cwd.
            let missing = with_cwd(cwd, || check_files(&cfg.arguments, &params));
            if !missing.is_empty() {
                for e in missing {
                    stderr.push_str(&format!("error: {e}\n"));
                }
                return Expected::Failure { stderr };
            }
            Expected::Params { json: params.to_json(), stderr }
        }
    }
}

fn with_cwd<T>(cwd: &Path, f: impl FnOnce() -> T) -> T {
    use std::sync::Mutex;
    static LOCK: Mutex<()> = Mutex::new(());
    let _guard = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let prev = std::env::current_dir().unwrap();
    std::env::set_current_dir(cwd).unwrap();
    let out = f();
    std::env::set_current_dir(prev).unwrap();
    out
}

/// Compare a wrapper run with the oracle. The wrapped python script prints
/// `json.dumps(par)` on its first stdout line.
pub fn agree(expected: &Expected, out: &Output) -> Result<(), String> {
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    let code = out.status.code();
    let fail = |what: &str| {
        Err(format!(
            "{what}\nexpected: {expected:?}\nexit: {code:?}\nstdout: {stdout}\nstderr: {stderr}"
        ))
    };
    match expected {
        Expected::Failure { stderr: want } => {
            if code != Some(1) || &stderr != want || !stdout.is_empty() {
                return fail("failure mismatch");
            }
        }
        Expected::Text { stdout: want } => {
            if code != Some(0) || &stdout != want || !stderr.is_empty() {
                return fail("text mismatch");
            }
        }
        Expected::Params { json, stderr: want } => {
            if code != Some(0) || &stderr != want {
                return fail("status or warnings mismatch");
            }
            let line = stdout.lines().next().unwrap_or("");
            let got: serde_json::Value = match serde_json::from_str(line) {
                Ok(v) => v,
                Err(_) => return fail("unparseable parameter dump"),
            };
            if &got != json {
                return fail("parameter mismatch");
            }
        }
    }
    Ok(())
}

/// SHA-256 over relative paths, modes and contents of every file under
/// `dir`, in sorted order.
pub fn dir_digest(dir: &Path) -> String {
    let mut files = Vec::new();
    collect(dir, dir, &mut files);
    files.sort();
    let mut hasher = Sha256::new();
    for rel in files {
        let path = dir.join(&rel);
        hasher.update(rel.to_string_lossy().as_bytes());
        hasher.update([0]);
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            let mode = fs::metadata(&path).unwrap().permissions().mode();
            hasher.update(mode.to_le_bytes());
        }
        hasher.update(fs::read(&path).unwrap());
        hasher.update([0]);
    }
    format!("{:x}", hasher.finalize())
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect(root, &path, out);
        } else {
            out.push(path.strip_prefix(root).unwrap().to_path_buf());
        }
    }
}
