//! The generated native wrapper must behave exactly like the in-process
//! argument engine: same exit code, same diagnostics, same values.

mod support;

use std::path::PathBuf;
use std::sync::OnceLock;

use compkit_core::ComponentConfig;
use proptest::prelude::*;
use proptest::test_runner::{Config, FileFailurePersistence};
use support::{agree, build_native, component, oracle, run_in};

const GENERAL: &str = r#"
name: eq
version: 1.2.3
arguments:
  - name: --s
    alternatives: [-s]
    type: string
  - name: --i
    type: integer
    default: 7
  - name: --d
    type: double
  - name: --b
    type: boolean
  - name: --f
    alternatives: [-f]
    type: boolean_true
  - name: --xs
    type: integer
    multiple: true
    multiple_sep: ","
  - name: --ss
    type: string
    multiple: true
    default: [x, y]
  - name: --file
    type: file
    must_exist: true
  - name: --files
    type: file
    multiple: true
    must_exist: true
  - name: --out
    type: file
    direction: output
    must_exist: true
resources:
  - language: python
    text: |
      import json
      # COMPKIT START
      # COMPKIT END
      print(json.dumps(par))
"#;

const REQUIRED: &str = r#"
name: req
version: 0.1.0
arguments:
  - name: --name
    type: string
    required: true
  - name: --count
    type: integer
    required: true
  - name: --input
    type: file
    must_exist: true
    required: true
resources:
  - language: python
    text: |
      import json
      # COMPKIT START
      # COMPKIT END
      print(json.dumps(par))
"#;

struct Fixture {
    cfg: ComponentConfig,
    exe: PathBuf,
    cwd: PathBuf,
}

fn fixture(yaml: &'static str, cell: &'static OnceLock<Fixture>) -> &'static Fixture {
    cell.get_or_init(|| {
        let root = tempfile::tempdir_in(env!("CARGO_TARGET_TMPDIR")).unwrap().keep();
        let cfg = component(&root.join("src"), yaml);
        let exe = build_native(&cfg, &root.join("out"));
        let cwd = root.join("work");
        std::fs::create_dir_all(&cwd).unwrap();
        std::fs::write(cwd.join("present.txt"), "x").unwrap();
        Fixture { cfg, exe, cwd }
    })
}

fn general() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    fixture(GENERAL, &CELL)
}

fn required() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    fixture(REQUIRED, &CELL)
}

fn check(f: &Fixture, argv: &[String]) -> Result<(), String> {
    let expected = oracle(&f.cfg, argv, &f.cwd);
    agree(&expected, &run_in(&f.exe, argv, &f.cwd))
}

fn value_token() -> impl Strategy<Value = String> {
    let fixed = prop::sample::select(vec![
        "", "abc", "a b", "'", "\"", "\\", "$HOME", "`id`", "é", "日本", "\n", "a\r\nb", "0", "-0",
        "-1", "007", "+5", "1.5", ".5", "5.", "-.5e+3", "1e3", "1E-2", "+.e1", "1e", ".", "-", "e5",
        "0x10", "1_000", " 1", "9223372036854775807", "9223372036854775808", "-9223372036854775808",
        "-9223372036854775809", "00000000000000000000001", "true", "YES", "No", "FALSE", "1", "yes ",
        "1,2", "1,,2", ",", "3,x", "present.txt", "missing.txt", "./present.txt", "a=b", "-s",
        "--i", "---x",
    ])
    .prop_map(str::to_string);
    prop_oneof![
        6 => fixed,
        1 => "[^\\x00]{0,6}",
        1 => "[0-9]{1,25}",
        1 => "[+-]?[0-9]{0,3}(\\.[0-9]{0,3})?([eE][+-]?[0-9]{1,2})?",
    ]
}

fn general_argv() -> impl Strategy<Value = Vec<String>> {
    let flag = prop::sample::select(vec![
        "--s", "-s", "--i", "--d", "--b", "--f", "-f", "--xs", "--ss", "--file", "--files", "--out",
        "--zz", "-x", "--help", "--version",
    ])
    .prop_map(str::to_string);
    let token = prop_oneof![
        3 => flag.clone(),
        3 => value_token(),
        2 => (flag, value_token()).prop_map(|(f, v)| format!("{f}={v}")),
    ];
    prop::collection::vec(token, 0..8)
}

/// Mostly well-formed command lines so that success paths are exercised.
fn general_pairs() -> impl Strategy<Value = Vec<String>> {
    let pair = prop_oneof![
        prop::sample::select(vec!["--s", "-s", "--i", "--d", "--b", "--xs", "--ss", "--file", "--files", "--out"])
            .prop_flat_map(|f| (Just(f.to_string()), value_token()))
            .prop_map(|(f, v)| vec![f, v]),
        Just(vec!["--f".to_string()]),
        Just(vec!["-f".to_string()]),
    ];
    prop::collection::vec(pair, 0..5).prop_map(|v| v.concat())
}

fn required_argv() -> impl Strategy<Value = Vec<String>> {
    let pair = prop::sample::select(vec!["--name", "--count", "--input"])
        .prop_flat_map(|f| (Just(f.to_string()), value_token()))
        .prop_map(|(f, v)| vec![f, v]);
    prop::collection::vec(pair, 0..4).prop_map(|v| v.concat())
}

fn config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: Some(Box::new(FileFailurePersistence::Off)),
        ..Config::default()
    }
}

proptest! {
    #![proptest_config(config(160))]

    #[test]
    fn arbitrary_command_lines_agree(argv in general_argv()) {
        if let Err(msg) = check(general(), &argv) {
            prop_assert!(false, "argv {:?}: {}", argv, msg);
        }
    }

    #[test]
    fn well_formed_command_lines_agree(argv in general_pairs()) {
        if let Err(msg) = check(general(), &argv) {
            prop_assert!(false, "argv {:?}: {}", argv, msg);
        }
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn required_arguments_agree(argv in required_argv()) {
        if let Err(msg) = check(required(), &argv) {
            prop_assert!(false, "argv {:?}: {}", argv, msg);
        }
    }
}

fn argv(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn fixed_edge_cases_agree() {
    let f = general();
    let present = f.cwd.join("present.txt").display().to_string();
    let cases: Vec<Vec<String>> = vec![
        argv(&[]),
        argv(&["--help"]),
        argv(&["--version"]),
        argv(&["--s", "x", "--help"]),
        argv(&["--s"]),
        argv(&["--f=yes"]),
        argv(&["--i", "abc"]),
        argv(&["--i=-0012"]),
        argv(&["--d", "+5.e3"]),
        argv(&["--xs", "1,2", "--xs=-3"]),
        argv(&["--xs", "1,x"]),
        argv(&["--ss", "a,b"]),
        argv(&["--s", "a", "-s", "b"]),
        argv(&["-f", "--f"]),
        argv(&["--file", "missing.txt", "--files", "present.txt,gone.txt"]),
        argv(&["--file", &present]),
        argv(&["--out", "not-yet-written.txt"]),
        argv(&["--s=a=b"]),
        argv(&["--zz"]),
        argv(&["--s", "-s"]),
    ];
    for case in cases {
        if let Err(msg) = check(f, &case) {
            panic!("argv {case:?}: {msg}");
        }
    }
}

#[test]
fn required_fixed_cases_agree() {
    let f = required();
    for case in [
        argv(&[]),
        argv(&["--name", "x"]),
        argv(&["--name", "x", "--count", "abc"]),
        argv(&["--name", "x", "--count", "3", "--input", "nope.txt"]),
        argv(&["--name", "x", "--count", "3", "--input", "present.txt"]),
    ] {
        if let Err(msg) = check(f, &case) {
            panic!("argv {case:?}: {msg}");
        }
    }
}
