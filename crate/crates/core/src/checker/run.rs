use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::properties::{evaluate_properties, evaluate_property, PropertyVerdict};
use super::{ParamStrategy, Property, RunPlan};
use crate::exec::{build_request, CallRecord, Client, RequestPlan, SeedContext, TransportErrorKind};
use crate::gen::{
    gen_value, mutate_assignment, shrink_value, size_schedule, stable_hash, Assignment,
    GeneratorConfig, Rng, ShrinkError, Size,
};
use crate::par::{self, Execution};
use crate::spec::{CompiledApi, CompiledOperation, ValidationViolation};

/// Everything a campaign needs besides the operation itself.
#[derive(Clone, Copy)]
pub struct CheckContext<'a> {
    pub api: &'a CompiledApi,
    pub client: &'a Client,
    pub base_url: &'a str,
    pub cfg: &'a GeneratorConfig,
    pub plan: &'a RunPlan,
    /// Command prefix for repro commands, e.g. `quickrest --spec api.json`.
    pub repro_prefix: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Failure {
    pub property: Property,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<ValidationViolation>,
    pub status: u16,
    /// `all` or the key of the single parameter being varied.
    pub campaign: String,
    pub test_index: u64,
    pub original_input: Assignment,
    pub shrunk_input: Map<String, Value>,
    pub shrink_steps: u32,
    pub shrink_executions: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub shrink_budget_exceeded: bool,
    /// The original input failed again when re-executed before shrinking.
    pub reproduced: bool,
    pub repro_command: String,
    pub curl: String,
    /// Parameters held fixed because they caused earlier failures.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded_params: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum Verdict {
    Pass,
    Fail,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckOutcome {
    pub operation: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Failure>,
    pub tests_run: u64,
    /// Tests whose request could not be formed or generated.
    pub skipped: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub transport_errors: BTreeMap<TransportErrorKind, u64>,
    /// Calls made for this operation; moved into the report when one is built.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<CallRecord>,
}

impl CheckOutcome {
    pub fn first_failure(&self) -> Option<&Failure> {
        self.failures.first()
    }
}

/// Quotes `s` for a POSIX shell.
pub fn shell_quote(s: &str) -> String {
    if !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./:=@,".contains(c))
    {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

/// A curl command that sends `plan`.
pub fn curl_command(plan: &RequestPlan) -> String {
    let mut parts = vec![
        "curl".to_string(),
        "-X".into(),
        plan.verb.as_str().into(),
        shell_quote(&plan.url),
    ];
    for (k, v) in &plan.headers {
        parts.push("-H".into());
        parts.push(shell_quote(&format!("{k}: {v}")));
    }
    if let Some(body) = &plan.body {
        parts.push("-H".into());
        parts.push(shell_quote(&format!("Content-Type: {}", body.media_type)));
        parts.push("--data-binary".into());
        parts.push(shell_quote(&body.text));
    }
    parts.join(" ")
}

struct Campaign {
    name: String,
    /// Parameters generated freely; the rest are held.
    varying: Vec<String>,
}

/// Runs the plan against one operation, stopping at the first failure
/// unless `keep_going` is set.
pub fn check_operation(ctx: &CheckContext<'_>, op: &CompiledOperation) -> CheckOutcome {
    Runner::new(ctx, op).run()
}

/// Checks every operation accepted by `filter`, in document order.
pub fn check_all(
    ctx: &CheckContext<'_>,
    exec: Execution,
    filter: impl Fn(&CompiledOperation) -> bool + Sync + Send,
) -> Vec<CheckOutcome> {
    let ops: Vec<&CompiledOperation> = ctx.api.operations.iter().filter(|o| filter(o)).collect();
    par::map(exec, &ops, |op| check_operation(ctx, op))
}

struct Runner<'c, 'a> {
    ctx: &'c CheckContext<'a>,
    op: &'c CompiledOperation,
    id: String,
    /// Smallest conforming value of each required parameter.
    minimal: Map<String, Value>,
    excluded: Vec<String>,
    outcome: CheckOutcome,
    consecutive_errors: u32,
}

enum Step {
    Continue,
    Stop,
}

impl<'c, 'a> Runner<'c, 'a> {
    fn new(ctx: &'c CheckContext<'a>, op: &'c CompiledOperation) -> Self {
        let id = op.id();
        let minimal = minimal_values(ctx, op, &id);
        Runner {
            ctx,
            op,
            minimal,
            excluded: Vec::new(),
            outcome: CheckOutcome {
                operation: id.clone(),
                verdict: Verdict::Pass,
                failures: Vec::new(),
                tests_run: 0,
                skipped: 0,
                transport_errors: BTreeMap::new(),
                records: Vec::new(),
            },
            id,
            consecutive_errors: 0,
        }
    }

    fn campaigns(&self) -> Vec<Campaign> {
        let all: Vec<String> = self.op.params.iter().map(|(p, _)| p.key()).collect();
        let mut out = Vec::new();
        if self.ctx.plan.param_strategy == ParamStrategy::PerParamFirst && all.len() > 1 {
            for key in &all {
                out.push(Campaign {
                    name: key.clone(),
                    varying: vec![key.clone()],
                });
            }
        }
        out.push(Campaign {
            name: "all".into(),
            varying: all,
        });
        out
    }

    fn run(mut self) -> CheckOutcome {
        let total = self.ctx.plan.total_tests();
        'campaigns: for campaign in self.campaigns() {
            for i in 0..total {
                if let Step::Stop = self.test(&campaign, i) {
                    break 'campaigns;
                }
            }
        }
        if !self.outcome.failures.is_empty() {
            self.outcome.verdict = Verdict::Fail;
        }
        self.outcome
    }

    fn hold(&self, values: &mut Map<String, Value>, key: &str) {
        match self.minimal.get(key) {
            Some(v) => {
                values.insert(key.to_string(), v.clone());
            }
            None => {
                values.remove(key);
            }
        }
    }

    fn test(&mut self, campaign: &Campaign, i: u64) -> Step {
        let ctx = self.ctx;
        let registry = &ctx.api.registry;
        let mut rng = Rng::derive(
            ctx.plan.seed,
            &[stable_hash(&self.id), stable_hash(&campaign.name), i],
        );
        let size = size_schedule(i, ctx.plan, ctx.cfg);
        self.outcome.tests_run += 1;
        let mut values = match gen_value(registry, &self.op.request, ctx.cfg, &mut rng, size) {
            Ok(Value::Object(m)) => m,
            _ => {
                self.outcome.skipped += 1;
                return Step::Continue;
            }
        };
        let varying: Vec<&String> = campaign
            .varying
            .iter()
            .filter(|k| !self.excluded.contains(k))
            .collect();
        for (param, _) in &self.op.params {
            let key = param.key();
            if !varying.contains(&&key) {
                self.hold(&mut values, &key);
            }
        }
        let mutable: Vec<_> = self
            .op
            .params
            .iter()
            .filter(|(p, _)| varying.contains(&&p.key()))
            .cloned()
            .collect();
        let assignment = mutate_assignment(registry, &mutable, Assignment::new(values), ctx.cfg, &mut rng);
        let Ok(request) = build_request(&self.op.op, &assignment.values, ctx.base_url) else {
            self.outcome.skipped += 1;
            return Step::Continue;
        };
        let seed_ctx = SeedContext {
            seed: ctx.plan.seed,
            test_index: i,
        };
        let record = ctx.client.execute(&self.id, &request, seed_ctx);
        if let crate::exec::CallOutcome::TransportError { kind, .. } = &record.outcome {
            *self.outcome.transport_errors.entry(*kind).or_default() += 1;
            self.outcome.records.push(record);
            self.consecutive_errors += 1;
            if self.consecutive_errors >= ctx.plan.max_transport_errors {
                self.outcome.verdict = Verdict::Aborted;
                return Step::Stop;
            }
            return Step::Continue;
        }
        self.consecutive_errors = 0;
        let failed = evaluate_properties(self.op, &record, registry, &ctx.plan.enabled_properties)
            .into_iter()
            .find(|r| r.failed());
        self.outcome.records.push(record);
        let Some(failed) = failed else {
            return Step::Continue;
        };
        let failure = self.shrink(campaign, i, failed.property, failed.verdict, assignment);
        let offending = self.offending(&failure.shrunk_input);
        self.outcome.failures.push(failure);
        if !ctx.plan.keep_going || offending.is_empty() {
            return Step::Stop;
        }
        self.excluded.extend(offending);
        Step::Continue
    }

    /// Varying parameters whose shrunk value differs from the held value.
    fn offending(&self, shrunk: &Map<String, Value>) -> Vec<String> {
        self.op
            .params
            .iter()
            .map(|(p, _)| p.key())
            .filter(|k| !self.excluded.contains(k))
            .filter(|k| shrunk.get(k) != self.minimal.get(k))
            .collect()
    }

    fn shrink(
        &mut self,
        campaign: &Campaign,
        test_index: u64,
        property: Property,
        verdict: PropertyVerdict,
        original: Assignment,
    ) -> Failure {
        let ctx = self.ctx;
        let registry = &ctx.api.registry;
        let (mut message, mut violations) = match verdict {
            PropertyVerdict::Fail { message, violations } => (message, violations),
            _ => unreachable!("only failed verdicts are shrunk"),
        };
        let mut status = self.outcome.records.last().and_then(CallRecord::status).unwrap_or(0);
        let seed_ctx = SeedContext {
            seed: ctx.plan.seed,
            test_index,
        };
        let op = self.op;
        let id = &self.id;
        let records = &mut self.outcome.records;
        let mut last_failure = None;
        let mut still_fails = |candidate: &Value| -> bool {
            let Some(map) = candidate.as_object() else {
                return false;
            };
            let Ok(request) = build_request(&op.op, map, ctx.base_url) else {
                return false;
            };
            let record = ctx.client.execute(id, &request, seed_ctx);
            let verdict = evaluate_property(property, op, &record, registry);
            let st = record.status();
            records.push(record);
            match verdict {
                Some(PropertyVerdict::Fail { message, violations }) => {
                    last_failure = Some((message, violations, st.unwrap_or(0)));
                    true
                }
                _ => false,
            }
        };
        let failing = Value::Object(original.values.clone());
        let reproduced = ctx.plan.shrink_budget > 0 && still_fails(&failing);
        let (shrunk, steps, executions, exceeded) = if reproduced {
            let budget = ctx.plan.shrink_budget - 1;
            match shrink_value(registry, Some(&op.request.name), failing.clone(), budget, &mut still_fails) {
                Ok(s) => (s.value, s.steps, s.executions + 1, false),
                Err(e @ ShrinkError::ShrinkBudgetExceeded { .. }) => {
                    let best = e.best().clone();
                    (best.value, best.steps, best.executions + 1, true)
                }
            }
        } else {
            (failing, 0, u32::from(ctx.plan.shrink_budget > 0), false)
        };
        if reproduced {
            if let Some((m, v, s)) = last_failure {
                message = m;
                violations = v;
                status = s;
            }
        }
        let shrunk_input = shrunk.as_object().cloned().unwrap_or_default();
        let curl = build_request(&op.op, &shrunk_input, ctx.base_url)
            .map(|p| curl_command(&p))
            .unwrap_or_default();
        let prefix = ctx.repro_prefix.unwrap_or("quickrest");
        Failure {
            property,
            message,
            violations,
            status,
            campaign: campaign.name.clone(),
            test_index,
            original_input: original,
            shrunk_input,
            shrink_steps: steps,
            shrink_executions: executions,
            shrink_budget_exceeded: exceeded,
            reproduced,
            repro_command: format!(
                "{prefix} --seed {} --endpoint {}",
                ctx.plan.seed,
                shell_quote(&self.id)
            ),
            curl,
            excluded_params: self.excluded.clone(),
        }
    }
}

fn minimal_values(ctx: &CheckContext<'_>, op: &CompiledOperation, id: &str) -> Map<String, Value> {
    let cfg = GeneratorConfig {
        string_mix: 0.0,
        int_mode: 1.0,
        ..ctx.cfg.without_mutations()
    };
    let mut out = Map::new();
    for (n, (param, spec)) in op.params.iter().enumerate() {
        if !param.required {
            continue;
        }
        let mut rng = Rng::derive(ctx.plan.seed, &[stable_hash(id), stable_hash("minimal"), n as u64]);
        if let Ok(v) = gen_value(&ctx.api.registry, spec, &cfg, &mut rng, Size(0)) {
            out.insert(param.key(), v);
        }
    }
    out
}
