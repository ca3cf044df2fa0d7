//! Run reports: call log, per-endpoint status-code frequencies, verdicts.

mod text;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checker::{CheckOutcome, RunPlan, Verdict};
use crate::exec::{CallOutcome, CallRecord};
use crate::gen::GeneratorConfig;
use crate::oas::{ApiDescription, Verb};
use crate::stateful::SequenceOutcome;

pub use text::render_text;

pub const REPORT_VERSION: u32 = 1;

/// Default cap on response bodies kept in the call log.
pub const DEFAULT_BODY_CAP: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunMetadata {
    pub tool_version: String,
    pub mode: String,
    pub seed: u64,
    pub base_url: String,
    pub document_sha256: String,
    pub generator: GeneratorConfig,
    pub plan: RunPlan,
    pub started_at: String,
    pub finished_at: String,
}

impl RunMetadata {
    pub fn new(mode: &str, base_url: &str, document: &str, generator: &GeneratorConfig, plan: &RunPlan) -> Self {
        RunMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            mode: mode.to_string(),
            seed: plan.seed,
            base_url: base_url.to_string(),
            document_sha256: document_hash(document),
            generator: generator.clone(),
            plan: plan.clone(),
            started_at: now(),
            finished_at: String::new(),
        }
    }
}

pub fn document_hash(document: &str) -> String {
    hex::encode(Sha256::digest(document.as_bytes()))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrequencyRow {
    pub path_template: String,
    pub verb: Verb,
    pub status: u16,
    pub count: u64,
    pub documented: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageRow {
    pub operation: String,
    /// Documented numeric status codes (`default` excluded).
    pub documented: Vec<u16>,
    pub observed: Vec<u16>,
    pub missing: Vec<u16>,
    pub fully_covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestReport {
    pub report_version: u32,
    pub metadata: RunMetadata,
    #[serde(default)]
    pub outcomes: Vec<CheckOutcome>,
    #[serde(default)]
    pub sequences: Vec<SequenceOutcome>,
    #[serde(default)]
    pub records: Vec<CallRecord>,
    #[serde(default)]
    pub frequency_table: Vec<FrequencyRow>,
    #[serde(default)]
    pub coverage: Vec<CoverageRow>,
}

/// Counts records by (path template, verb, status).
///
/// Records without an HTTP status are not counted. Operations missing from
/// `api` keep the path and verb from their id and are marked undocumented.
pub fn frequency_table(records: &[CallRecord], api: &ApiDescription) -> Vec<FrequencyRow> {
    let mut counts: BTreeMap<(String, Verb, u16), u64> = BTreeMap::new();
    for r in records {
        let Some(status) = r.status() else { continue };
        let (path, verb) = match api.operation_by_id(&r.operation) {
            Some(op) => (op.path_template.clone(), op.verb),
            None => {
                let (v, p) = r.operation.split_once(' ').unwrap_or(("GET", &r.operation));
                (p.to_string(), Verb::from_key(v).unwrap_or(r.plan.verb))
            }
        };
        *counts.entry((path, verb, status)).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|((path_template, verb, status), count)| FrequencyRow {
            documented: api
                .operation(&path_template, verb)
                .is_some_and(|op| op.documents_status(status)),
            path_template,
            verb,
            status,
            count,
        })
        .collect()
}

/// Documented vs observed status codes per operation, from the table alone.
pub fn coverage(table: &[FrequencyRow], api: &ApiDescription) -> Vec<CoverageRow> {
    let mut out = Vec::new();
    for (path, ops) in &api.paths {
        for (verb, op) in ops {
            let documented = op.documented_statuses();
            let observed: Vec<u16> = table
                .iter()
                .filter(|r| &r.path_template == path && r.verb == *verb)
                .map(|r| r.status)
                .collect();
            let missing: Vec<u16> = documented
                .iter()
                .copied()
                .filter(|s| !observed.contains(s))
                .collect();
            out.push(CoverageRow {
                operation: op.id(),
                fully_covered: missing.is_empty(),
                documented,
                observed,
                missing,
            });
        }
    }
    out
}

impl TestReport {
    /// Assembles a report, moving every call record out of the outcomes.
    pub fn new(
        mut metadata: RunMetadata,
        mut outcomes: Vec<CheckOutcome>,
        mut sequences: Vec<SequenceOutcome>,
        api: &ApiDescription,
        body_cap: usize,
    ) -> Self {
        let mut records = Vec::new();
        for o in &mut outcomes {
            records.append(&mut o.records);
        }
        for s in &mut sequences {
            records.append(&mut s.records);
        }
        for r in &mut records {
            if let CallOutcome::Response { body, .. } = &mut r.outcome {
                body.truncate(body_cap);
            }
        }
        let frequency_table = frequency_table(&records, api);
        let coverage = coverage(&frequency_table, api);
        metadata.finished_at = now();
        TestReport {
            report_version: REPORT_VERSION,
            metadata,
            outcomes,
            sequences,
            records,
            frequency_table,
            coverage,
        }
    }

    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.verdict == Verdict::Fail).count()
            + self.sequences.iter().filter(|s| s.verdict == Verdict::Fail).count()
    }

    pub fn aborted(&self) -> usize {
        self.outcomes.iter().filter(|o| o.verdict == Verdict::Aborted).count()
            + self.sequences.iter().filter(|s| s.verdict == Verdict::Aborted).count()
    }

    /// 0 when everything passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures() + self.aborted() == 0 {
            0
        } else {
            1
        }
    }

    /// Clears wall-clock data so reports of identical runs compare equal:
    /// start and end times, call timestamps and latencies, and `Date` headers.
    pub fn canonicalize(&mut self) {
        self.metadata.started_at.clear();
        self.metadata.finished_at.clear();
        for r in &mut self.records {
            r.timestamp_us = 0;
            r.latency_us = 0;
            if let CallOutcome::Response { headers, .. } = &mut r.outcome {
                headers.retain(|(k, _)| !k.eq_ignore_ascii_case("date"));
            }
        }
    }
}

pub fn render_json(report: &TestReport) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize")
}

pub fn parse_json(text: &str) -> Result<TestReport, serde_json::Error> {
    serde_json::from_str(text)
}
