use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use quickrest_core::checker::{check_all, shell_quote, CheckContext, ParamStrategy, Property, RunPlan};
use quickrest_core::exec::{Client, ClientConfig, RequestPlan};
use quickrest_core::gen::GeneratorConfig;
use quickrest_core::oas::{load_document, parse_document, ParseError, Verb};
use quickrest_core::par::Execution;
use quickrest_core::report::{render_json, render_text, RunMetadata, TestReport};
use quickrest_core::spec::{compile_api, CompiledOperation, ValidationOptions};
use quickrest_core::stateful::{check_stateful, StatefulConfig};

pub const AUTH_ENV: &str = "QUICKREST_AUTH_HEADER";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Independent random requests per operation
    Stateless,
    /// Random call sequences that reuse values from earlier responses
    Stateful,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Stateless => "stateless",
            Mode::Stateful => "stateful",
        }
    }
}

/// Property-based black-box testing of a REST API described by an OpenAPI 2.0 document.
///
/// Every option can also be given in a JSON file passed with --config, using
/// camelCase keys (`stringMix`, `baseUrl`, ...). Flags override the file.
#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(name = "quickrest", version)]
#[serde(rename_all = "camelCase")]
pub struct Args {
    /// OpenAPI 2.0 document, a file path or an http(s) URL (required)
    #[arg(long)]
    pub spec: Option<String>,

    /// Target API root [default: scheme, host and basePath from the document]
    #[arg(long)]
    pub base_url: Option<String>,

    /// Stateless checks each operation on its own; stateful runs call sequences
    #[arg(long, value_enum, default_value_t = Mode::Stateless)]
    pub mode: Mode,

    /// Tests per iteration in the first tier
    #[arg(long, default_value_t = 10)]
    pub tests: u32,

    /// Iterations per tier
    #[arg(long, default_value_t = 30)]
    pub iterations: u32,

    /// Factor by which tests per iteration grow from one tier to the next
    #[arg(long, default_value_t = 10)]
    pub tier_growth: u32,

    /// Number of tiers
    #[arg(long, default_value_t = 1)]
    pub tiers: u32,

    /// Root seed of every random draw
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Probability a string uses the full charset instead of [a-zA-Z0-9]
    #[arg(long, default_value_t = 0.5)]
    pub string_mix: f64,

    /// Highest code point in full-charset strings
    #[arg(long, default_value_t = 255)]
    pub charset_max: u32,

    /// Probability an integer is a natural number (0 included)
    #[arg(long, default_value_t = 0.5)]
    pub int_mode: f64,

    /// Probability a required parameter is left out
    #[arg(long, default_value_t = 0.0)]
    pub omit_required_prob: f64,

    /// Probability a parameter value is pushed out of range or retyped
    #[arg(long, default_value_t = 0.0)]
    pub out_of_range_prob: f64,

    /// Largest generation size
    #[arg(long, default_value_t = 100)]
    pub max_size: u32,

    /// Rejection attempts for pattern strings the pattern builder cannot handle
    #[arg(long, default_value_t = 100)]
    pub pattern_retries: u32,

    /// Request executions allowed while shrinking one failure
    #[arg(long, default_value_t = 1000)]
    pub shrink_budget: u32,

    /// Consecutive transport errors before an operation is aborted
    #[arg(long, default_value_t = 10)]
    pub max_transport_errors: u32,

    /// Operations checked concurrently
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Glob over `VERB /path` or `/path`; repeatable [default: every operation]
    #[arg(long)]
    pub endpoint: Vec<String>,

    /// Comma-separated properties to check
    #[arg(long, value_delimiter = ',', default_value = "Non500,StatusDocumented,BodyConforms")]
    pub properties: Vec<String>,

    /// per-param-first varies one parameter at a time before varying all
    #[arg(long, default_value = "all-params", value_parser = ["all-params", "per-param-first"])]
    pub param_strategy: String,

    /// After a failure keep testing the operation without the offending parameters [default: off]
    #[arg(long)]
    pub keep_going: bool,

    /// Write the JSON report to this file [default: no JSON report]
    #[arg(long)]
    pub report_json: Option<PathBuf>,

    /// Zero timestamps and latencies and drop Date headers in the JSON report [default: off]
    #[arg(long)]
    pub canonical: bool,

    /// Header sent with every request, `Name: value` [default: none]
    #[arg(long, env = AUTH_ENV, hide_env_values = true)]
    pub auth_header: Option<String>,

    /// Stateful mode: parameter name to response attribute, `param=attr`; repeatable
    #[arg(long, default_value = "id=id")]
    pub identity_map: Vec<String>,

    /// Stateful mode: request sent before each sequence, `VERB URL` [default: none]
    #[arg(long)]
    pub reset_hook: Option<String>,

    /// Stateful mode: sequences to run
    #[arg(long, default_value_t = 100)]
    pub sequences: u64,

    /// Stateful mode: shortest sequence
    #[arg(long, default_value_t = 1)]
    pub min_length: usize,

    /// Stateful mode: longest sequence
    #[arg(long, default_value_t = 5)]
    pub max_length: usize,

    /// Per-request timeout in seconds
    #[arg(long, default_value_t = 10.0)]
    pub timeout: f64,

    /// Treat response object keys missing from the schema as violations [default: off]
    #[arg(long)]
    pub reject_extra_keys: bool,

    /// Response bodies longer than this many bytes are truncated in the JSON report
    #[arg(long, default_value_t = quickrest_core::report::DEFAULT_BODY_CAP)]
    pub body_cap: usize,

    /// JSON file with option values; flags given on the command line win [default: none]
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// A fully checked configuration, ready to run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub spec: String,
    pub base_url: Option<String>,
    pub mode: Mode,
    pub generator: GeneratorConfig,
    pub plan: RunPlan,
    pub stateful: StatefulConfig,
    pub client: ClientConfig,
    pub validation: ValidationOptions,
    pub endpoints: Vec<glob::Pattern>,
    pub workers: usize,
    pub report_json: Option<PathBuf>,
    pub canonical: bool,
    pub body_cap: usize,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Parses `argv` (program name first) and overlays the `--config` file under
/// any option not given on the command line.
pub fn parse_args<I, T>(argv: I) -> Result<Args, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = Args::command().try_get_matches_from(argv)?;
    let args = Args::from_arg_matches(&matches)?;
    let Some(path) = args.config.clone() else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Args::command().error(
            clap::error::ErrorKind::Io,
            format!("cannot read config {}: {e}", path.display()),
        )
    })?;
    merge_config(args, &matches, &text).map_err(|e| {
        Args::command().error(
            clap::error::ErrorKind::InvalidValue,
            format!("config {}: {e}", path.display()),
        )
    })
}

fn merge_config(args: Args, matches: &ArgMatches, text: &str) -> Result<Args, UsageError> {
    let file: Value = serde_json::from_str(text).map_err(|e| usage(e.to_string()))?;
    let Value::Object(file) = file else {
        return Err(usage("expected a JSON object"));
    };
    let known: Vec<String> = Args::command()
        .get_arguments()
        .map(|a| a.get_id().to_string())
        .collect();
    let mut merged = serde_json::to_value(&args).expect("args serialize");
    for (key, value) in file {
        let id = snake_case(&key);
        if id == "config" || !known.contains(&id) {
            return Err(usage(format!("unknown key {key:?}")));
        }
        if matches.value_source(&id) != Some(ValueSource::CommandLine) {
            merged[key] = value;
        }
    }
    let mut out: Args = serde_json::from_value(merged).map_err(|e| usage(e.to_string()))?;
    out.config = args.config;
    Ok(out)
}

fn snake_case(key: &str) -> String {
    let mut out = String::with_capacity(key.len() + 4);
    for c in key.chars() {
        if c.is_ascii_uppercase() {
            out.push('_');
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

impl Args {
    pub fn settings(&self) -> Result<Settings, UsageError> {
        let spec = self
            .spec
            .clone()
            .ok_or_else(|| usage("--spec is required"))?;
        let generator = GeneratorConfig {
            string_mix: self.string_mix,
            charset_max: self.charset_max,
            int_mode: self.int_mode,
            omit_required_prob: self.omit_required_prob,
            out_of_range_prob: self.out_of_range_prob,
            max_size: self.max_size,
            pattern_retries: self.pattern_retries,
        };
        generator.validate().map_err(|e| usage(e.to_string()))?;

        let mut enabled_properties = std::collections::BTreeSet::new();
        for name in &self.properties {
            let name = name.trim();
            if name.is_empty() {
                continue;
            }
            let p = Property::from_name(name).ok_or_else(|| {
                usage(format!(
                    "unknown property {name:?}; expected one of Non500, StatusDocumented, BodyConforms"
                ))
            })?;
            enabled_properties.insert(p);
        }
        let param_strategy: ParamStrategy =
            serde_json::from_value(Value::String(self.param_strategy.clone()))
                .map_err(|_| usage(format!("unknown param strategy {:?}", self.param_strategy)))?;
        let plan = RunPlan {
            tests_per_iteration: self.tests,
            iterations: self.iterations,
            tier_growth: self.tier_growth,
            tiers: self.tiers,
            seed: self.seed,
            enabled_properties,
            param_strategy,
            shrink_budget: self.shrink_budget,
            max_transport_errors: self.max_transport_errors,
            keep_going: self.keep_going,
        };
        plan.validate().map_err(|e| usage(e.to_string()))?;

        let mut identity = BTreeMap::new();
        for pair in &self.identity_map {
            let (param, attr) = pair
                .split_once('=')
                .filter(|(p, a)| !p.is_empty() && !a.is_empty())
                .ok_or_else(|| usage(format!("--identity-map expects param=attr, got {pair:?}")))?;
            identity.insert(param.to_string(), attr.to_string());
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return Err(usage(format!(
                "sequence lengths must satisfy 1 <= min ({}) <= max ({})",
                self.min_length, self.max_length
            )));
        }
        let reset_hook = self.reset_hook.as_deref().map(parse_reset_hook).transpose()?;
        let stateful = StatefulConfig {
            sequences: self.sequences,
            min_length: self.min_length,
            max_length: self.max_length,
            identity,
            reset_hook,
        };

        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(usage(format!("--timeout must be positive, got {}", self.timeout)));
        }
        let client = ClientConfig {
            timeout: Duration::from_secs_f64(self.timeout),
            auth_header: self.auth_header.clone(),
        };
        let endpoints = self
            .endpoint
            .iter()
            .map(|g| glob::Pattern::new(g).map_err(|e| usage(format!("--endpoint {g:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        if self.workers == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        Ok(Settings {
            spec,
            base_url: self.base_url.clone(),
            mode: self.mode,
            generator,
            plan,
            stateful,
            client,
            validation: ValidationOptions {
                reject_extra_keys: self.reject_extra_keys,
            },
            endpoints,
            workers: self.workers,
            report_json: self.report_json.clone(),
            canonical: self.canonical,
            body_cap: self.body_cap,
        })
    }
}

/// `POST http://host/reset` into a bodiless request.
pub fn parse_reset_hook(text: &str) -> Result<RequestPlan, UsageError> {
    let (verb, url) = text
        .trim()
        .split_once(char::is_whitespace)
        .ok_or_else(|| usage(format!("--reset-hook expects \"VERB URL\", got {text:?}")))?;
    let verb = Verb::from_key(&verb.to_ascii_lowercase())
        .ok_or_else(|| usage(format!("--reset-hook: unknown verb {verb:?}")))?;
    let url = url.trim();
    url::Url::parse(url).map_err(|e| usage(format!("--reset-hook: {url:?}: {e}")))?;
    Ok(RequestPlan {
        verb,
        url: url.to_string(),
        headers: vec![],
        body: None,
    })
}

/// True when `op` is selected by the endpoint globs (all ops when there are none).
pub fn selects(patterns: &[glob::Pattern], op: &CompiledOperation) -> bool {
    patterns.is_empty()
        || patterns
            .iter()
            .any(|p| p.matches(&op.id()) || p.matches(&op.op.path_template))
}

/// The command line minus the options a repro command sets itself.
pub fn repro_prefix(argv: &[String]) -> String {
    const WITH_VALUE: [&str; 3] = ["--seed", "--endpoint", "--report-json"];
    let mut parts = vec!["quickrest".to_string()];
    let mut rest = argv.iter().skip(1);
    while let Some(arg) = rest.next() {
        if WITH_VALUE.contains(&arg.as_str()) {
            rest.next();
            continue;
        }
        if arg == "--canonical"
            || WITH_VALUE
                .iter()
                .any(|f| arg.strip_prefix(f).is_some_and(|r| r.starts_with('=')))
        {
            continue;
        }
        parts.push(shell_quote(arg));
    }
    parts.join(" ")
}

/// Runs the whole pipeline, writing the text report to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args = match parse_args(argv.clone()) {
        Ok(a) => a,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    let settings = match args.settings() {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    execute(&settings, &repro_prefix(&argv), out, err)
}

fn execute(s: &Settings, repro: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match load_document(&s.spec) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let doc = match parse_document(&text) {
        Ok(d) => d,
        Err(ParseError::InvalidModel(violations)) => {
            let _ = writeln!(err, "error: {} is not a valid OpenAPI 2.0 document:", s.spec);
            for v in violations {
                let _ = writeln!(err, "  {v}");
            }
            return 2;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", s.spec);
            return 2;
        }
    };
    let api = match compile_api(&doc, s.validation) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", s.spec);
            return 2;
        }
    };
    let Some(base_url) = s.base_url.clone().or_else(|| doc.default_base_url()) else {
        let _ = writeln!(err, "error: the document has no host; pass --base-url");
        return 2;
    };
    let base_url = base_url.trim_end_matches('/').to_string();
    let client = match Client::new(&s.client) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let ctx = CheckContext {
        api: &api,
        client: &client,
        base_url: &base_url,
        cfg: &s.generator,
        plan: &s.plan,
        repro_prefix: Some(repro),
    };
    let metadata = RunMetadata::new(s.mode.as_str(), &base_url, &text, &s.generator, &s.plan);
    let (outcomes, sequences) = match s.mode {
        Mode::Stateless => {
            let exec = Execution::with_workers(s.workers);
            (check_all(&ctx, exec, |op| selects(&s.endpoints, op)), vec![])
        }
        Mode::Stateful => {
            let ops: Vec<&CompiledOperation> = api
                .operations
                .iter()
                .filter(|op| selects(&s.endpoints, op))
                .collect();
            let seqs = if ops.is_empty() {
                vec![]
            } else {
                vec![check_stateful(&ctx, &ops, &s.stateful)]
            };
            (vec![], seqs)
        }
    };
    let mut report = TestReport::new(metadata, outcomes, sequences, &doc, s.body_cap);
    if s.canonical {
        report.canonicalize();
    }
    let _ = write!(out, "{}", render_text(&report));
    if let Some(path) = &s.report_json {
        if let Err(e) = std::fs::write(path, render_json(&report)) {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return 2;
        }
    }
    report.exit_code()
}
