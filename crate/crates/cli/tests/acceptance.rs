//! End-to-end acceptance checks against the bundled fixture service.
//! Prints one PASS/FAIL line per criterion and exits non-zero on any FAIL.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use quickrest_core::checker::{check_operation, CheckContext, CheckOutcome, Property, RunPlan, Verdict};
use quickrest_core::exec::{build_request, Client, ClientConfig};
use quickrest_core::gen::{conformance_failures, shrink_candidates, GeneratorConfig};
use quickrest_core::oas::parse_document;
use quickrest_core::par::{self, Execution};
use quickrest_core::report::{frequency_table, parse_json, TestReport};
use quickrest_core::spec::{compile_api, CompiledApi, ValidationOptions};
use quickrest_fixture::{Fixture, Options};
use serde_json::Value;

const SEEDS: std::ops::RangeInclusive<u64> = 1..=30;

struct Env {
    fixture: Fixture,
    doc: quickrest_core::oas::ApiDescription,
    api: CompiledApi,
    client: Client,
}

impl Env {
    fn start() -> Env {
        let fixture = Fixture::start(Options::default()).expect("fixture starts");
        let text = quickrest_fixture::document(&fixture.addr().to_string()).to_string();
        let doc = parse_document(&text).expect("fixture document parses");
        let api = compile_api(&doc, ValidationOptions::default()).expect("fixture document compiles");
        let client = Client::new(&ClientConfig::default()).unwrap();
        Env { fixture, doc, api, client }
    }

    fn base(&self) -> String {
        self.fixture.base_url()
    }

    fn check(&self, op: &str, cfg: &GeneratorConfig, plan: &RunPlan) -> CheckOutcome {
        let base = self.base();
        let ctx = CheckContext {
            api: &self.api,
            client: &self.client,
            base_url: &base,
            cfg,
            plan,
            repro_prefix: None,
        };
        check_operation(&ctx, self.api.operation(op).expect("operation exists"))
    }

    fn status(&self, op: &str, input: &serde_json::Map<String, Value>) -> Option<u16> {
        let o = self.api.operation(op)?;
        let plan = build_request(&o.op, input, &self.base()).ok()?;
        self.client.execute(op, &plan, Default::default()).status()
    }

    fn reset(&self) {
        let _ = ureq::post(format!("{}/reset", self.base())).send_empty();
    }
}

fn cli(args: &[String]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("quickrest".to_string()).chain(args.iter().cloned());
    let code = quickrest::run(argv, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}

fn strs(args: &[&str]) -> Vec<String> {
    args.iter().map(|s| s.to_string()).collect()
}

/// Runs `op` once per seed in 1..=30 and counts seeds that ended in a Non500 failure.
fn detections(env: &Env, op: &str, cfg: &GeneratorConfig, tests: u32) -> usize {
    let seeds: Vec<u64> = SEEDS.collect();
    let found = par::map(Execution::Parallel { workers: 0 }, &seeds, |&seed| {
        let plan = RunPlan {
            tests_per_iteration: tests,
            iterations: 1,
            seed,
            enabled_properties: BTreeSet::from([Property::Non500]),
            shrink_budget: 0,
            ..Default::default()
        };
        let out = env.check(op, cfg, &plan);
        out.verdict == Verdict::Fail && out.first_failure().is_some_and(|f| f.status == 500)
    });
    found.into_iter().filter(|&f| f).count()
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    if took <= limit {
        Ok(())
    } else {
        Err(format!("took {:.1}s, limit {}s", took.as_secs_f64(), limit.as_secs()))
    }
}

fn string_generator_efficiency(env: &Env) -> Result<String, String> {
    let start = Instant::now();
    let alnum = GeneratorConfig { string_mix: 0.0, ..Default::default() };
    let any = GeneratorConfig { string_mix: 1.0, charset_max: 255, ..Default::default() };
    let a = detections(env, "GET /objects", &alnum, 1000);
    let b = detections(env, "GET /objects", &any, 1000);
    within(Duration::from_secs(120), start)?;
    let detail = format!("alphanumeric {a}/30, any-string {b}/30");
    if a == 0 && b >= 29 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn integer_generator_efficiency(env: &Env) -> Result<String, String> {
    let start = Instant::now();
    let nat = GeneratorConfig { int_mode: 1.0, ..Default::default() };
    let any = GeneratorConfig { int_mode: 0.0, ..Default::default() };
    let a = detections(env, "GET /items/{n}", &nat, 100);
    let b = detections(env, "GET /items/{n}", &any, 100);
    within(Duration::from_secs(30), start)?;
    let detail = format!("nat-int {a}/30, any-int {b}/30");
    if a >= 28 && b >= 28 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn response_code_coverage(env: &Env) -> Result<String, String> {
    let start = Instant::now();
    let mut seen = Vec::new();
    for mix in [1.0, 0.0, 0.1] {
        env.reset();
        let cfg = GeneratorConfig { string_mix: mix, ..Default::default() };
        let plan = RunPlan {
            tests_per_iteration: 100,
            iterations: 30,
            seed: 1,
            enabled_properties: BTreeSet::new(),
            ..Default::default()
        };
        let out = env.check("POST /objects", &cfg, &plan);
        if out.tests_run != 3000 {
            return Err(format!("mix {mix}: ran {} tests", out.tests_run));
        }
        let codes: BTreeSet<u16> = frequency_table(&out.records, &env.doc)
            .iter()
            .map(|row| row.status)
            .collect();
        seen.push(codes);
    }
    within(Duration::from_secs(120), start)?;
    let detail = format!("{{1,0}} {:?}, {{0,1}} {:?}, {{0.1,0.9}} {:?}", seen[0], seen[1], seen[2]);
    let all: BTreeSet<u16> = [201, 400, 500].into();
    if !seen[0].contains(&201) && !seen[1].contains(&500) && all.is_subset(&seen[2]) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn stateful_bug(env: &Env) -> Result<String, String> {
    let start = Instant::now();
    let cfg = GeneratorConfig::default();
    let ops = ["POST /resources", "DELETE /resources/{id}", "GET /resources/{id}", "PUT /resources/{id}"];
    // 25,000 tests per operation: 10^5 stateless tests over /resources.
    let plan = RunPlan {
        tests_per_iteration: 1000,
        iterations: 25,
        seed: 5,
        ..Default::default()
    };
    let stateless = par::map(Execution::Parallel { workers: 0 }, &ops, |op| env.check(op, &cfg, &plan));
    let mut stateless_tests = 0;
    for out in &stateless {
        stateless_tests += out.tests_run;
        if has_500(out) {
            return Err(format!("stateless run hit 500 on {}", out.operation));
        }
    }
    env.reset();

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let json = dir.path().join("stateful.json");
    let base = env.base();
    let (code, out, err) = cli(&strs(&[
        "--spec", &env.fixture.document_url(), "--base-url", &base, "--mode", "stateful",
        "--endpoint", "/resources*", "--sequences", "500", "--min-length", "2", "--max-length", "5",
        "--identity-map", "id=id", "--reset-hook", &format!("POST {base}/reset"), "--seed", "1",
        "--report-json", json.to_str().unwrap(),
    ]));
    if code != 1 {
        return Err(format!("stateful CLI exit {code}\n{out}{err}"));
    }
    let report = parse_json(&std::fs::read_to_string(&json).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let seq = report.sequences.first().ok_or("no sequence outcome")?;
    let shrunk: Vec<&str> = seq.shrunk_sequence.iter().map(|s| s.operation.as_str()).collect();
    within(Duration::from_secs(120), start)?;
    let detail = format!(
        "{stateless_tests} stateless tests clean; stateful failed after {} sequences, shrunk to {shrunk:?}",
        seq.sequences_run
    );
    let ok = seq.verdict == Verdict::Fail
        && seq.sequences_run <= 500
        && shrunk == ["POST /resources", "DELETE /resources/{id}", "PUT /resources/{id}"]
        && seq.shrunk_sequence.last().and_then(|s| s.status) == Some(500);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn has_500(out: &CheckOutcome) -> bool {
    out.records.iter().any(|r| r.status() == Some(500))
}

fn oracle_strength(env: &Env) -> Result<String, String> {
    env.reset();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let json = dir.path().join("full.json");
    let (code, out, err) = cli(&strs(&[
        "--spec", &env.fixture.document_url(), "--seed", "3", "--workers", "4",
        "--report-json", json.to_str().unwrap(),
    ]));
    if code != 1 {
        return Err(format!("full run exit {code}\n{out}{err}"));
    }
    let report = parse_json(&std::fs::read_to_string(&json).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let failure = |op: &str| {
        report
            .outcomes
            .iter()
            .find(|o| o.operation == op)
            .and_then(|o| o.first_failure().cloned())
    };
    let teapot = failure("GET /teapot").ok_or("GET /teapot did not fail")?;
    let badbody = failure("GET /badbody").ok_or("GET /badbody did not fail")?;
    let paths: Vec<&str> = badbody.violations.iter().map(|v| v.json_path.as_str()).collect();
    let detail = format!(
        "teapot {} ({}), badbody {} at {paths:?}",
        teapot.property, teapot.status, badbody.property
    );
    if teapot.property == Property::StatusDocumented
        && teapot.status == 418
        && badbody.property == Property::BodyConforms
        && paths == ["$.id"]
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn shrinking_quality(env: &Env) -> Result<String, String> {
    let cfg = GeneratorConfig { string_mix: 1.0, ..Default::default() };
    let plan = RunPlan {
        tests_per_iteration: 1000,
        iterations: 1,
        seed: 6,
        ..Default::default()
    };
    let out = env.check("GET /objects", &cfg, &plan);
    let f = out.first_failure().ok_or("string bug not found")?;
    let q = f.shrunk_input.get("query.q").and_then(Value::as_str).ok_or("no q in shrunk input")?;
    let original = f.original_input.values.get("query.q").and_then(Value::as_str).unwrap_or("");
    let replay = env.status("GET /objects", &f.shrunk_input);
    let request = &env.api.operation("GET /objects").unwrap().request.name;
    let candidates = shrink_candidates(&env.api.registry, Some(request), &Value::Object(f.shrunk_input.clone()));
    let still_failing = candidates
        .iter()
        .filter(|c| c.as_object().and_then(|m| env.status("GET /objects", m)) == Some(500))
        .count();
    let detail = format!(
        "{} chars -> {q:?}, replay {replay:?}, {still_failing}/{} one-step candidates fail, {} executions",
        original.chars().count(),
        candidates.len(),
        f.shrink_executions
    );
    if q.chars().count() == 1 && replay == Some(500) && still_failing == 0 && f.shrink_executions <= 1000 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn generator_soundness(env: &Env) -> Result<String, String> {
    let cfg = GeneratorConfig::default();
    let specs = env.api.registry.spec_refs();
    let mut bad = Vec::new();
    for spec in &specs {
        let failures = conformance_failures(&env.api.registry, spec, &cfg, 7, 10_000, Execution::Parallel { workers: 0 });
        if !failures.is_empty() {
            bad.push(format!("{spec}: {} bad, first {:?}", failures.len(), failures[0]));
        }
    }
    let detail = format!("{} specs x 10000 samples", specs.len());
    if bad.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", bad.join("; ")))
    }
}

fn determinism(env: &Env) -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        env.reset();
        let path = dir.path().join(name);
        let (code, out, err) = cli(&strs(&[
            "--spec", &env.fixture.document_url(), "--seed", "8", "--canonical",
            "--report-json", path.to_str().unwrap(),
        ]));
        if code == 2 {
            return Err(format!("run failed\n{out}{err}"));
        }
        reports.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    let calls = parse_json(&String::from_utf8_lossy(&reports[0]))
        .map(|r: TestReport| r.records.len())
        .unwrap_or(0);
    let detail = format!("{} bytes, {calls} calls", reports[0].len());
    if reports[0] == reports[1] && calls > 0 {
        Ok(detail)
    } else {
        Err(format!("{detail}; reports differ"))
    }
}

fn mutation_mode(env: &Env) -> Result<String, String> {
    let cfg = GeneratorConfig { omit_required_prob: 1.0, ..Default::default() };
    let plan = RunPlan {
        tests_per_iteration: 100,
        iterations: 3,
        seed: 9,
        ..Default::default()
    };
    let out = env.check("GET /objects", &cfg, &plan);
    let with_q = out
        .records
        .iter()
        .filter(|r| url::Url::parse(&r.plan.url).is_ok_and(|u| u.query_pairs().any(|(k, _)| k == "q")))
        .count();
    let table = frequency_table(&out.records, &env.doc);
    let has_400 = table.iter().any(|row| row.path_template == "/objects" && row.status == 400);
    let detail = format!("{} requests, {with_q} with q, 400 row: {has_400}", out.records.len());
    if !out.records.is_empty() && with_q == 0 && has_400 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let env = Env::start();
    type Criterion = fn(&Env) -> Result<String, String>;
    let criteria: [(&str, Criterion); 9] = [
        ("string generator efficiency", string_generator_efficiency),
        ("integer generator efficiency", integer_generator_efficiency),
        ("response code coverage vs mix", response_code_coverage),
        ("stateful bug reproduction", stateful_bug),
        ("oracle strength", oracle_strength),
        ("shrinking quality", shrinking_quality),
        ("generator soundness", generator_soundness),
        ("report determinism", determinism),
        ("mutation mode", mutation_mode),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check(&env);
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
