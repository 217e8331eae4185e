//! Values must reach the script bit-exactly, both through `inject` and
//! through a built wrapper. Each script prints the UTF-8 hex of every value
//! it received, one per line.

mod support;

use std::path::Path;
use std::process::Command;

use compkit_core::{
    inject, InjectionBlock, Language, Meta, ParamMap, ParamValue, Value,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, FileFailurePersistence};
use support::{build_native, component, has_runtime};

fn script(language: Language) -> &'static str {
    match language {
        Language::Bash => {
            "#!/usr/bin/env bash\n# COMPKIT START\n# COMPKIT END\nfor v in \"${par_v[@]}\"; do printf '%s' \"$v\" | od -An -v -tx1 | tr -d ' \\n'; echo; done\n"
        }
        Language::Python => {
            "import sys\n# COMPKIT START\n# COMPKIT END\nfor v in par[\"v\"]:\n    sys.stdout.write(v.encode(\"utf-8\").hex() + \"\\n\")\n"
        }
        Language::Javascript => {
            "// COMPKIT START\n// COMPKIT END\nfor (const v of par.v) process.stdout.write(Buffer.from(v, \"utf8\").toString(\"hex\") + \"\\n\");\n"
        }
        Language::R => {
            "# COMPKIT START\n# COMPKIT END\nfor (v in par$v) cat(paste(as.character(charToRaw(enc2utf8(v))), collapse = \"\"), \"\\n\", sep = \"\")\n"
        }
    }
}

const LANGUAGES: [Language; 4] = [Language::Bash, Language::Python, Language::Javascript, Language::R];

fn available(language: Language) -> bool {
    let ok = has_runtime(language.runtime());
    if !ok {
        eprintln!("skipping {language}: runtime '{}' not installed", language.runtime());
    }
    ok
}

fn hex_lines(values: &[String]) -> String {
    values
        .iter()
        .map(|v| v.bytes().map(|b| format!("{b:02x}")).collect::<String>() + "\n")
        .collect()
}

fn run_script(language: Language, text: &str, dir: &Path) -> String {
    let path = dir.join(format!("main.{}", language.extension()));
    std::fs::write(&path, text).unwrap();
    let out = Command::new(language.runtime()).arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn via_inject(language: Language, values: &[String]) -> String {
    let dir = tempfile::tempdir().unwrap();
    let mut params = ParamMap::new();
    params.insert(
        "v",
        Some(ParamValue::Multiple(values.iter().cloned().map(Value::String).collect())),
    );
    let mut meta = Meta::new();
    meta.insert("name".into(), "fidelity".into());
    meta.insert("resources_dir".into(), dir.path().display().to_string());
    let block = InjectionBlock::new(language, &params, &meta);
    let text = inject(script(language), language, &block).unwrap();
    run_script(language, &text, dir.path())
}

fn wrapper_yaml(language: Language) -> String {
    format!(
        "name: fidelity\narguments:\n  - name: --v\n    type: string\n    multiple: true\n    multiple_sep: \"\\x01\"\nresources:\n  - language: {}\n    path: main.{}\n",
        language.as_str(),
        language.extension()
    )
}

fn via_wrapper(language: Language, values: &[String]) -> String {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    std::fs::create_dir_all(&src).unwrap();
    std::fs::write(src.join(format!("main.{}", language.extension())), script(language)).unwrap();
    let cfg = component(&src, &wrapper_yaml(language));
    let exe = build_native(&cfg, &dir.path().join("out"));
    let mut cmd = Command::new(exe);
    for v in values {
        cmd.arg("--v").arg(v);
    }
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn values() -> impl Strategy<Value = Vec<String>> {
    let special = prop::sample::select(vec![
        "", "'", "\"", "\\", "\\\\\"", "\n", "\r\n", "$x", "${x}", "`x`", "$(x)", "%s", "{}", "é",
        "日本語", "🦀", "\u{2028}", "\t", "\x7f", "a\x02\x7fb", "\\n", "a\"b'c\\d", "#", "//", "*/", "]]",
    ])
    .prop_map(str::to_string);
    let token = prop_oneof![
        2 => special,
        3 => "[^\\x00\\x01]{0,10}",
        1 => "[\"'\\\\\n$`é ]{0,8}",
    ];
    prop::collection::vec(token, 1..4)
}

fn config() -> Config {
    Config {
        cases: 24,
        failure_persistence: Some(Box::new(FileFailurePersistence::Off)),
        ..Config::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn injected_values_round_trip(values in values()) {
        let want = hex_lines(&values);
        for language in LANGUAGES {
            if !has_runtime(language.runtime()) {
                continue;
            }
            prop_assert_eq!(&via_inject(language, &values), &want, "{} via inject", language);
        }
    }

    #[test]
    fn wrapper_values_round_trip(values in values()) {
        let want = hex_lines(&values);
        for language in LANGUAGES {
            if !has_runtime(language.runtime()) {
                continue;
            }
            prop_assert_eq!(&via_wrapper(language, &values), &want, "{} via wrapper", language);
        }
    }
}

#[test]
fn runtimes_report() {
    for language in LANGUAGES {
        available(language);
    }
}

#[test]
fn empty_string_and_plain_ascii() {
    let values = vec![String::new(), "plain".to_string()];
    for language in LANGUAGES.into_iter().filter(|l| available(*l)) {
        assert_eq!(via_inject(language, &values), hex_lines(&values), "{language}");
        assert_eq!(via_wrapper(language, &values), hex_lines(&values), "{language}");
    }
}

#[test]
fn typed_values_keep_their_types() {
    let dir = tempfile::tempdir().unwrap();
    let mut params = ParamMap::new();
    params.set("i", Value::Integer(-9_007_199_254_740_991));
    params.set("d", Value::Double(-2.5e-8));
    params.set("t", Value::Boolean(true));
    params.set("f", Value::Boolean(false));
    params.insert("none", None);
    params.insert(
        "xs",
        Some(ParamValue::Multiple(vec![Value::Integer(1), Value::Integer(2)])),
    );
    let meta = Meta::new();
    let want = r#"{"i":-9007199254740991,"d":-2.5e-8,"t":true,"f":false,"none":null,"xs":[1,2]}"#;

    if available(Language::Python) {
        let text = inject(
            "import json\n# COMPKIT START\n# COMPKIT END\nprint(json.dumps(par, separators=(',', ':')))\n",
            Language::Python,
            &InjectionBlock::new(Language::Python, &params, &meta),
        )
        .unwrap();
        let got = run_script(Language::Python, &text, dir.path());
        let got: serde_json::Value = serde_json::from_str(got.trim()).unwrap();
        assert_eq!(got, serde_json::from_str::<serde_json::Value>(want).unwrap());
    }
    if available(Language::Javascript) {
        let text = inject(
            "// COMPKIT START\n// COMPKIT END\nconsole.log(JSON.stringify(par));\n",
            Language::Javascript,
            &InjectionBlock::new(Language::Javascript, &params, &meta),
        )
        .unwrap();
        let got = run_script(Language::Javascript, &text, dir.path());
        let got: serde_json::Value = serde_json::from_str(got.trim()).unwrap();
        assert_eq!(got, serde_json::from_str::<serde_json::Value>(want).unwrap());
    }
    if available(Language::R) {
        let text = inject(
            "# COMPKIT START\n# COMPKIT END\ncat(class(par$i), class(par$d), class(par$t), is.null(par$none), class(par$xs), sep = \" \")\n",
            Language::R,
            &InjectionBlock::new(Language::R, &params, &meta),
        )
        .unwrap();
        // -9007199254740991 is outside R's integer range and stays numeric.
        assert_eq!(run_script(Language::R, &text, dir.path()), "numeric numeric logical TRUE integer");
    }
    if available(Language::Bash) {
        let text = inject(
            "# COMPKIT START\n# COMPKIT END\necho \"$par_i $par_d $par_t $par_f ${par_none-unset} ${par_xs[*]}\"\n",
            Language::Bash,
            &InjectionBlock::new(Language::Bash, &params, &meta),
        )
        .unwrap();
        assert_eq!(
            run_script(Language::Bash, &text, dir.path()),
            "-9007199254740991 -2.5e-8 true false unset 1 2\n"
        );
    }
}

#[test]
fn text_outside_markers_is_preserved() {
    let original = "#!/usr/bin/env python3\nbefore = 1\n# COMPKIT START\nold = 2\n# COMPKIT END\nafter = 3\n";
    let mut params = ParamMap::new();
    params.set("x", Value::String("y".into()));
    let block = InjectionBlock::new(Language::Python, &params, &Meta::new());
    let out = inject(original, Language::Python, &block).unwrap();
    assert!(out.starts_with("#!/usr/bin/env python3\nbefore = 1\n# COMPKIT START\n"));
    assert!(out.ends_with("# COMPKIT END\nafter = 3\n"));
    assert!(!out.contains("old = 2"));
}
