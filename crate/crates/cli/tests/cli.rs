use std::path::PathBuf;
use std::process::Command;

use clap::CommandFactory;
use quickrest::{parse_args, repro_prefix, run, Args};
use quickrest_core::report::parse_json;
use quickrest_fixture::{Fixture, Options};

fn fig1() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data/fig1.json")
        .display()
        .to_string()
}

fn run_capture(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("quickrest").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn help_lists_every_flag_with_a_default() {
    let mut cmd = Args::command();
    let help = cmd.render_long_help().to_string();
    let help = &help[help.find("Options:").unwrap()..];
    for arg in Args::command().get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if long == "help" || long == "version" {
            continue;
        }
        let start = help
            .find(&format!("--{long}"))
            .unwrap_or_else(|| panic!("--{long} missing from help"));
        let block = &help[start..];
        let end = block[2..].find("\n      --").map_or(block.len(), |e| e + 2);
        let block = &block[..end];
        assert!(
            block.contains("[default:") || block.contains("(required)"),
            "--{long} does not state its default:\n{block}"
        );
    }
}

#[test]
fn clean_fixture_run_passes() {
    let fixture = Fixture::start(Options {
        clean: true,
        ..Default::default()
    })
    .unwrap();
    let base = fixture.base_url();
    let (code, out, err) = run_capture(&[
        "--spec", &fig1(), "--base-url", &base, "--tests", "10", "--iterations", "30", "--seed", "7",
    ]);
    assert_eq!(code, 0, "{out}\n{err}");
    assert!(out.contains("2 passed, 0 failed, 0 aborted"), "{out}");
}

#[test]
fn failures_exit_one_and_print_a_repro() {
    let fixture = Fixture::start(Options::default()).unwrap();
    let base = fixture.base_url();
    let (code, out, _) = run_capture(&[
        "--spec", &fig1(), "--base-url", &base, "--string-mix", "1", "--seed", "3",
        "--endpoint", "GET /objects",
    ]);
    assert_eq!(code, 1);
    assert!(out.contains("GET /objects"));
    assert!(out.contains("0 passed, 1 failed"), "filter ignored:\n{out}");
    let repro = format!(
        "repro: quickrest --spec {} --base-url {base} --string-mix 1 --seed 3 --endpoint 'GET /objects'",
        fig1()
    );
    assert!(out.contains(&repro), "{out}");
}

#[test]
fn configuration_errors_exit_two() {
    assert_eq!(run_capture(&["--spec", "/no/such/file.json"]).0, 2);
    assert_eq!(run_capture(&["--spec", &fig1(), "--no-such-flag"]).0, 2);
    assert_eq!(run_capture(&["--spec", &fig1(), "--string-mix", "1.5"]).0, 2);
    assert_eq!(run_capture(&["--spec", &fig1(), "--properties", "Fast"]).0, 2);
    assert_eq!(run_capture(&["--spec", &fig1(), "--identity-map", "id"]).0, 2);
    assert_eq!(run_capture(&["--spec", &fig1(), "--reset-hook", "FETCH http://x/reset"]).0, 2);
    assert_eq!(run_capture(&["--spec", &fig1(), "--min-length", "4", "--max-length", "2"]).0, 2);
    assert_eq!(run_capture(&["--tests", "5"]).0, 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r##"{"swagger": "2.0", "paths": {"/a": {"get": {"responses": {"200": {"description": "ok", "schema": {"$ref": "#/definitions/Nope"}}}}}}}"##).unwrap();
    let (code, _, err) = run_capture(&["--spec", bad.to_str().unwrap(), "--base-url", "http://127.0.0.1:9"]);
    assert_eq!(code, 2);
    assert!(err.contains("not a valid OpenAPI 2.0 document"), "{err}");
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = run_capture(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("--string-mix"));
    assert_eq!(run_capture(&["--version"]).0, 0);
}

#[test]
fn empty_document_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("empty.json");
    std::fs::write(&doc, r#"{"swagger": "2.0", "paths": {}}"#).unwrap();
    let json = dir.path().join("r.json");
    let (code, out, _) = run_capture(&[
        "--spec", doc.to_str().unwrap(), "--base-url", "http://127.0.0.1:9",
        "--report-json", json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{out}");
    let report = parse_json(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert!(report.outcomes.is_empty() && report.records.is_empty());
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"spec": "api.json", "seed": 9, "stringMix": 0.25, "tests": 3, "identityMap": ["objectid=id"], "keepGoing": true}"#,
    )
    .unwrap();
    let args = parse_args(["quickrest", "--config", cfg.to_str().unwrap(), "--tests", "4"]).unwrap();
    assert_eq!(args.spec.as_deref(), Some("api.json"));
    assert_eq!(args.seed, 9);
    assert_eq!(args.string_mix, 0.25);
    assert_eq!(args.tests, 4);
    assert!(args.keep_going);
    assert_eq!(args.identity_map, ["objectid=id"]);
    assert_eq!(args.iterations, 30);

    std::fs::write(&cfg, r#"{"strngMix": 0.25}"#).unwrap();
    assert!(parse_args(["quickrest", "--config", cfg.to_str().unwrap()]).is_err());
    std::fs::write(&cfg, r#"{"seed": "nine"}"#).unwrap();
    assert!(parse_args(["quickrest", "--config", cfg.to_str().unwrap()]).is_err());
}

#[test]
fn settings_map_flags_onto_configs() {
    let args = parse_args([
        "quickrest", "--spec", "a.json", "--string-mix", "0.1", "--int-mode", "1", "--tests", "100",
        "--iterations", "2", "--properties", "non500,BodyConforms", "--param-strategy",
        "per-param-first", "--identity-map", "objectid=id", "--identity-map", "n=count",
        "--reset-hook", "POST http://127.0.0.1:1/reset", "--timeout", "0.5", "--reject-extra-keys",
    ])
    .unwrap();
    let s = args.settings().unwrap();
    assert_eq!(s.generator.string_mix, 0.1);
    assert_eq!(s.generator.int_mode, 1.0);
    assert_eq!(s.plan.tests_per_iteration, 100);
    assert_eq!(s.plan.iterations, 2);
    assert_eq!(s.plan.enabled_properties.len(), 2);
    assert_eq!(s.stateful.identity.len(), 2);
    assert_eq!(s.stateful.identity["n"], "count");
    assert_eq!(s.stateful.reset_hook.as_ref().unwrap().url, "http://127.0.0.1:1/reset");
    assert_eq!(s.client.timeout.as_millis(), 500);
    assert!(s.validation.reject_extra_keys);

    let none = parse_args(["quickrest", "--spec", "a.json", "--properties", ""]).unwrap();
    assert!(none.settings().unwrap().plan.enabled_properties.is_empty());
}

#[test]
fn repro_prefix_drops_run_specific_flags() {
    let argv: Vec<String> = [
        "/usr/bin/quickrest", "--spec", "my api.json", "--seed", "4", "--endpoint=GET /x",
        "--report-json", "r.json", "--canonical", "--tests", "5",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(repro_prefix(&argv), "quickrest --spec 'my api.json' --tests 5");
}

#[test]
fn auth_header_falls_back_to_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_quickrest"))
        .args(["--spec", &fig1(), "--base-url", "http://127.0.0.1:9"])
        .env(quickrest::AUTH_ENV, "no colon here")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no colon here"));
}
