mod support;

use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::Path;
use std::process::Command;

use compkit_core::native::generate_native_wrapper;
use compkit_core::{build, EngineKind};
use support::{build_native, component, dir_digest, has_runtime};

const HELLO: &str = r#"
name: hello
version: 0.1.0
arguments:
  - name: --name
    type: string
    required: true
resources:
  - language: bash
    path: script.sh
"#;

fn hello(dir: &Path) -> compkit_core::ComponentConfig {
    fs::create_dir_all(dir).unwrap();
    fs::write(
        dir.join("script.sh"),
        "#!/usr/bin/env bash\n# COMPKIT START\npar_name=World\n# COMPKIT END\necho \"Hello $par_name\"\n",
    )
    .unwrap();
    component(dir, HELLO)
}

fn run(exe: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(exe).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn hello_world_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = hello(&tmp.path().join("src"));
    let exe = build_native(&cfg, &tmp.path().join("out"));
    assert_eq!(run(&exe, &["--name", "World"]), (0, "Hello World\n".into(), String::new()));
    assert_eq!(run(&exe, &["--version"]).1, "hello 0.1.0\n");
    let (code, _, err) = run(&exe, &[]);
    assert_eq!(code, 1);
    assert!(err.contains("--name"), "{err}");
}

#[test]
fn artifact_invariants() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = hello(&tmp.path().join("src"));
    let artifact = build(&cfg, EngineKind::Native, &tmp.path().join("out")).unwrap();
    assert_eq!(artifact.version, "0.1.0");
    assert_eq!(artifact.engine_kind, EngineKind::Native);
    assert_eq!(artifact.entry_path, tmp.path().join("out/hello"));
    let mode = fs::metadata(&artifact.entry_path).unwrap().permissions().mode();
    assert_eq!(mode & 0o111, 0o111);
    assert_eq!(artifact.aux_files, vec![tmp.path().join("out/script.sh")]);
    for f in &artifact.aux_files {
        assert!(f.exists());
    }
}

#[test]
fn exit_codes_are_forwarded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = component(
        tmp.path(),
        "name: exiter\narguments:\n  - name: --code\n    type: integer\n    required: true\nresources:\n  - language: bash\n    text: |\n      # COMPKIT START\n      # COMPKIT END\n      exit \"$par_code\"\n",
    );
    let exe = build_native(&cfg, &tmp.path().join("out"));
    for k in [0, 1, 2, 77] {
        assert_eq!(run(&exe, &["--code", &k.to_string()]).0, k);
    }
    if has_runtime("python3") {
        let cfg = component(
            &tmp.path().join("py"),
            "name: exiter\narguments:\n  - name: --code\n    type: integer\nresources:\n  - language: python\n    text: |\n      import sys\n      # COMPKIT START\n      # COMPKIT END\n      sys.exit(par[\"code\"])\n",
        );
        let exe = build_native(&cfg, &tmp.path().join("pyout"));
        for k in [0, 1, 2, 77] {
            assert_eq!(run(&exe, &["--code", &k.to_string()]).0, k);
        }
    }
}

#[test]
fn helper_resource_is_copied_and_resources_dir_injected() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    fs::create_dir_all(&src).unwrap();
    fs::write(src.join("helper.txt"), "helper contents\n").unwrap();
    let cfg = component(
        &src,
        "name: withhelper\nresources:\n  - language: bash\n    text: |\n      # COMPKIT START\n      # COMPKIT END\n      echo \"$meta_resources_dir\"\n      cat \"$meta_resources_dir/helper.txt\"\n  - path: helper.txt\n",
    );
    let out = tmp.path().join("out");
    let exe = build_native(&cfg, &out);
    assert!(out.join("helper.txt").is_file());
    let (code, stdout, _) = run(&exe, &[]);
    assert_eq!(code, 0);
    let mut lines = stdout.lines();
    let reported = lines.next().unwrap();
    assert_eq!(
        fs::canonicalize(reported).unwrap(),
        fs::canonicalize(&out).unwrap()
    );
    assert_eq!(lines.next(), Some("helper contents"));
}

#[test]
fn wrapper_follows_symlinks_to_find_resources() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    fs::create_dir_all(&src).unwrap();
    fs::write(src.join("data.txt"), "linked\n").unwrap();
    let cfg = component(
        &src,
        "name: linked\nresources:\n  - language: bash\n    text: |\n      # COMPKIT START\n      # COMPKIT END\n      cat \"$meta_resources_dir/data.txt\"\n  - path: data.txt\n",
    );
    let exe = build_native(&cfg, &tmp.path().join("out"));
    let bin = tmp.path().join("bin");
    fs::create_dir_all(&bin).unwrap();
    std::os::unix::fs::symlink(&exe, bin.join("linked")).unwrap();
    assert_eq!(run(&bin.join("linked"), &[]), (0, "linked\n".into(), String::new()));
}

#[test]
fn rebuild_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = hello(&tmp.path().join("src"));
    let out = tmp.path().join("out");
    build_native(&cfg, &out);
    let first = dir_digest(&out);
    build_native(&cfg, &out);
    assert_eq!(first, dir_digest(&out));
    let other = tmp.path().join("other");
    build_native(&cfg, &other);
    assert_eq!(first, dir_digest(&other));
}

#[test]
fn temp_dir_is_removed_unless_debugging() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = component(
        tmp.path(),
        "name: tmpcheck\nresources:\n  - language: bash\n    text: |\n      # COMPKIT START\n      # COMPKIT END\n      echo \"$meta_temp_dir\"\n",
    );
    let exe = build_native(&cfg, &tmp.path().join("out"));
    let scratch = tmp.path().join("scratch");
    fs::create_dir_all(&scratch).unwrap();

    let out = Command::new(&exe).env("TMPDIR", &scratch).output().unwrap();
    let used = String::from_utf8(out.stdout).unwrap();
    assert!(used.trim().starts_with(scratch.to_str().unwrap()));
    assert!(!Path::new(used.trim()).exists());

    let out = Command::new(&exe)
        .env("TMPDIR", &scratch)
        .env("COMPKIT_DEBUG", "1")
        .output()
        .unwrap();
    let kept = String::from_utf8(out.stdout).unwrap();
    assert!(Path::new(kept.trim()).join("main.sh").is_file());
}

#[test]
fn missing_runtime_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = component(
        tmp.path(),
        "name: needsnode\nresources:\n  - language: javascript\n    text: console.log(1)\n",
    );
    let exe = build_native(&cfg, &tmp.path().join("out"));
    // A PATH with the basic tools the wrapper uses but no node.
    let bin = tmp.path().join("bin");
    fs::create_dir_all(&bin).unwrap();
    for tool in ["bash", "mktemp", "rm", "dirname", "readlink"] {
        if let Ok(p) = which::which(tool) {
            std::os::unix::fs::symlink(p, bin.join(tool)).unwrap();
        }
    }
    let out = Command::new(which::which("bash").unwrap())
        .arg(&exe)
        .env("PATH", &bin)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("runtime 'node' not found"));
}

#[test]
fn infinite_doubles_reach_python_as_inf() {
    if !has_runtime("python3") {
        eprintln!("skipping: python3 not installed");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let cfg = component(
        tmp.path(),
        "name: inf\narguments:\n  - name: --d\n    type: double\nresources:\n  - language: python\n    text: |\n      # COMPKIT START\n      # COMPKIT END\n      print(repr(par[\"d\"]))\n",
    );
    let exe = build_native(&cfg, &tmp.path().join("out"));
    assert_eq!(run(&exe, &["--d", "1e400"]).1, "inf\n");
    assert_eq!(run(&exe, &["--d", "-1e400"]).1, "-inf\n");
}

#[test]
fn fixture_wrappers_pass_syntax_check() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/fixtures");
    let mut checked = 0;
    for entry in walkdir::WalkDir::new(&fixtures) {
        let entry = entry.unwrap();
        let name = entry.file_name().to_string_lossy();
        if !name.ends_with(".comp.yaml") {
            continue;
        }
        let Ok(parsed) = compkit_core::load_config(entry.path()) else { continue };
        let cfg = parsed.config;
        if compkit_core::validate_config(&cfg).iter().any(|d| d.is_error()) {
            continue;
        }
        let mut texts = Vec::new();
        if let Ok(text) = generate_native_wrapper(&cfg) {
            texts.push(text);
        }
        if let Ok(text) = compkit_core::container::generate_container_wrapper(&cfg) {
            texts.push(text);
        }
        for text in texts {
            let out = Command::new("bash")
                .arg("-n")
                .stdin(std::process::Stdio::piped())
                .stdout(std::process::Stdio::piped())
                .stderr(std::process::Stdio::piped())
                .spawn()
                .and_then(|mut child| {
                    use std::io::Write;
                    child.stdin.take().unwrap().write_all(text.as_bytes())?;
                    child.wait_with_output()
                })
                .unwrap();
            assert!(
                out.status.success(),
                "{}: {}",
                entry.path().display(),
                String::from_utf8_lossy(&out.stderr)
            );
            checked += 1;
        }
    }
    assert!(checked >= 4, "only {checked} wrappers checked");
}
