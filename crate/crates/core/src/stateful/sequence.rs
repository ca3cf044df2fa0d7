use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::ResponsePool;
use crate::checker::{
    evaluate_properties, CheckContext, Property, PropertyVerdict, Verdict,
};
use crate::exec::{build_request, CallOutcome, CallRecord, RequestPlan, SeedContext};
use crate::gen::{gen_value, shrink_value, size_schedule, stable_hash, Rng, ShrinkError};
use crate::spec::{CompiledOperation, ValidationViolation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatefulConfig {
    pub sequences: u64,
    /// Inclusive bounds on sequence length.
    pub min_length: usize,
    pub max_length: usize,
    /// Parameter name to pool attribute. Parameters not listed are always random.
    pub identity: BTreeMap<String, String>,
    /// Request sent before every sequence execution to clear target state.
    pub reset_hook: Option<RequestPlan>,
}

impl Default for StatefulConfig {
    fn default() -> Self {
        StatefulConfig {
            sequences: 100,
            min_length: 1,
            max_length: 5,
            identity: BTreeMap::from([("id".to_string(), "id".to_string())]),
            reset_hook: None,
        }
    }
}

/// A step before execution: the operation, its random values, and the seed
/// for pool draws made when the step runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepTemplate {
    pub operation: String,
    pub values: Map<String, Value>,
    pub draw_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "camelCase")]
pub enum Provenance {
    Random,
    Pool { entry: usize, attribute: String },
}

/// A step as executed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CallStep {
    pub operation: String,
    pub assignment: Map<String, Value>,
    pub provenance: BTreeMap<String, Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SequenceFailure {
    pub property: Property,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<ValidationViolation>,
    pub operation: String,
    pub status: u16,
}

/// Result of running one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRun {
    pub steps: Vec<CallStep>,
    pub records: Vec<CallRecord>,
    pub failure: Option<SequenceFailure>,
    pub transport_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SequenceOutcome {
    pub verdict: Verdict,
    pub sequences_run: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<SequenceFailure>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failing_sequence: Vec<CallStep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shrunk_sequence: Vec<CallStep>,
    pub shrink_steps: u32,
    pub shrink_executions: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub shrink_budget_exceeded: bool,
    /// Shrinking ran without a reset hook, so replays saw leftover state.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub best_effort: bool,
    /// Replays recreate state, so shrunk values may differ from the original run.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub values_may_differ: bool,
    pub transport_errors: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<CallRecord>,
}

/// A random sequence over `ops`, length uniform in the configured range.
pub fn gen_sequence(
    ctx: &CheckContext<'_>,
    ops: &[&CompiledOperation],
    scfg: &StatefulConfig,
    rng: &mut Rng,
    sequence_index: u64,
) -> Vec<StepTemplate> {
    if ops.is_empty() {
        return Vec::new();
    }
    let len = rng.int_in(scfg.min_length.max(1) as i64, scfg.max_length.max(scfg.min_length.max(1)) as i64);
    let size = size_schedule(sequence_index, ctx.plan, ctx.cfg);
    let cfg = ctx.cfg.without_mutations();
    (0..len)
        .map(|_| {
            let op = ops[rng.index(ops.len())];
            let values = match gen_value(&ctx.api.registry, &op.request, &cfg, rng, size) {
                Ok(Value::Object(m)) => m,
                _ => Map::new(),
            };
            StepTemplate {
                operation: op.id(),
                values,
                draw_seed: rng.next_u64(),
            }
        })
        .collect()
}

/// Fills identity parameters from the pool, falling back to the random values.
pub fn materialize(
    template: &StepTemplate,
    op: &CompiledOperation,
    pool: &ResponsePool,
    identity: &BTreeMap<String, String>,
) -> CallStep {
    let mut rng = Rng::new(template.draw_seed);
    let mut assignment = template.values.clone();
    let mut provenance = BTreeMap::new();
    for (param, _) in &op.params {
        let key = param.key();
        let drawn = identity
            .get(&param.name)
            .and_then(|attr| pool.draw_input(attr, &mut rng).map(|d| (attr, d)));
        match drawn {
            Some((attr, (entry, value))) => {
                assignment.insert(key.clone(), value);
                provenance.insert(
                    key,
                    Provenance::Pool {
                        entry,
                        attribute: attr.clone(),
                    },
                );
            }
            None => {
                if assignment.contains_key(&key) {
                    provenance.insert(key, Provenance::Random);
                }
            }
        }
    }
    CallStep {
        operation: template.operation.clone(),
        assignment,
        provenance,
        status: None,
    }
}

/// Runs the steps in order against a fresh pool, stopping at the first
/// property failure or transport error.
pub fn run_sequence(
    ctx: &CheckContext<'_>,
    templates: &[StepTemplate],
    scfg: &StatefulConfig,
    sequence_index: u64,
) -> SequenceRun {
    if let Some(hook) = &scfg.reset_hook {
        let _ = ctx.client.send(hook);
    }
    let mut pool = ResponsePool::new();
    let mut run = SequenceRun {
        steps: Vec::new(),
        records: Vec::new(),
        failure: None,
        transport_error: false,
    };
    for template in templates {
        let Some(op) = ctx.api.operation(&template.operation) else {
            continue;
        };
        let mut step = materialize(template, op, &pool, &scfg.identity);
        let Ok(request) = build_request(&op.op, &step.assignment, ctx.base_url) else {
            run.steps.push(step);
            continue;
        };
        let record = ctx.client.execute(
            &template.operation,
            &request,
            SeedContext {
                seed: ctx.plan.seed,
                test_index: sequence_index,
            },
        );
        step.status = record.status();
        if let CallOutcome::Response { status, body, .. } = &record.outcome {
            if (200..300).contains(status) {
                if let Some(json) = &body.json {
                    pool.record_response(json);
                }
            }
        } else {
            run.transport_error = true;
        }
        let failed = evaluate_properties(op, &record, &ctx.api.registry, &ctx.plan.enabled_properties)
            .into_iter()
            .find(|r| r.failed());
        run.steps.push(step);
        run.records.push(record);
        if run.transport_error {
            break;
        }
        if let Some(f) = failed {
            if let PropertyVerdict::Fail { message, violations } = f.verdict {
                run.failure = Some(SequenceFailure {
                    property: f.property,
                    message,
                    violations,
                    operation: template.operation.clone(),
                    status: run.steps.last().and_then(|s| s.status).unwrap_or(0),
                });
            }
            break;
        }
    }
    run
}

/// Result of [`shrink_sequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShrunkSequence {
    pub templates: Vec<StepTemplate>,
    pub steps: u32,
    pub executions: u32,
    pub budget_exceeded: bool,
}

/// Greedy step removal, then per-step value shrinking.
///
/// `still_fails` replays a candidate from a reset state. The result is
/// minimal with respect to removing any single step.
pub fn shrink_sequence(
    ctx: &CheckContext<'_>,
    templates: Vec<StepTemplate>,
    budget: u32,
    mut still_fails: impl FnMut(&[StepTemplate]) -> bool,
) -> ShrunkSequence {
    let mut current = ShrunkSequence {
        templates,
        steps: 0,
        executions: 0,
        budget_exceeded: false,
    };
    'removal: loop {
        for i in 0..current.templates.len() {
            if current.templates.len() <= 1 {
                break 'removal;
            }
            if current.executions >= budget {
                current.budget_exceeded = true;
                return current;
            }
            let mut candidate = current.templates.clone();
            candidate.remove(i);
            current.executions += 1;
            if still_fails(&candidate) {
                current.templates = candidate;
                current.steps += 1;
                continue 'removal;
            }
        }
        break;
    }
    for i in 0..current.templates.len() {
        let Some(op) = ctx.api.operation(&current.templates[i].operation) else {
            continue;
        };
        let remaining = budget.saturating_sub(current.executions);
        let start = Value::Object(current.templates[i].values.clone());
        let base = current.templates.clone();
        let result = shrink_value(&ctx.api.registry, Some(&op.request.name), start, remaining, |v| {
            let Some(map) = v.as_object() else {
                return false;
            };
            let mut candidate = base.clone();
            candidate[i].values = map.clone();
            still_fails(&candidate)
        });
        let (best, exceeded) = match result {
            Ok(s) => (s, false),
            Err(e @ ShrinkError::ShrinkBudgetExceeded { .. }) => (e.best().clone(), true),
        };
        current.executions += best.executions;
        current.steps += best.steps;
        if let Value::Object(m) = best.value {
            current.templates[i].values = m;
        }
        if exceeded {
            current.budget_exceeded = true;
            return current;
        }
    }
    current
}

/// Runs up to `scfg.sequences` random sequences over `ops`; on the first
/// failing one, shrinks it and stops.
pub fn check_stateful(
    ctx: &CheckContext<'_>,
    ops: &[&CompiledOperation],
    scfg: &StatefulConfig,
) -> SequenceOutcome {
    let mut outcome = SequenceOutcome {
        verdict: Verdict::Pass,
        sequences_run: 0,
        failure: None,
        failing_sequence: Vec::new(),
        shrunk_sequence: Vec::new(),
        shrink_steps: 0,
        shrink_executions: 0,
        shrink_budget_exceeded: false,
        best_effort: false,
        values_may_differ: false,
        transport_errors: 0,
        records: Vec::new(),
    };
    let mut consecutive = 0;
    for n in 0..scfg.sequences {
        let mut rng = Rng::derive(ctx.plan.seed, &[stable_hash("sequence"), n]);
        let templates = gen_sequence(ctx, ops, scfg, &mut rng, n);
        let run = run_sequence(ctx, &templates, scfg, n);
        outcome.sequences_run += 1;
        outcome.records.extend(run.records);
        if run.transport_error {
            outcome.transport_errors += 1;
            consecutive += 1;
            if consecutive >= ctx.plan.max_transport_errors {
                outcome.verdict = Verdict::Aborted;
                return outcome;
            }
            continue;
        }
        consecutive = 0;
        let Some(failure) = run.failure else {
            continue;
        };
        let records = &mut outcome.records;
        let mut last = None;
        let shrunk = shrink_sequence(ctx, templates, ctx.plan.shrink_budget, |candidate| {
            let replay = run_sequence(ctx, candidate, scfg, n);
            records.extend(replay.records);
            match replay.failure {
                Some(f) if f.property == failure.property && f.operation == failure.operation => {
                    last = Some((replay.steps, f));
                    true
                }
                _ => false,
            }
        });
        // Replay the result once more so the report shows what it did.
        let (shrunk_steps, shrunk_failure) = match last {
            Some(l) if shrunk.steps > 0 => l,
            _ => {
                let replay = run_sequence(ctx, &shrunk.templates, scfg, n);
                outcome.records.extend(replay.records);
                (replay.steps, replay.failure.unwrap_or_else(|| failure.clone()))
            }
        };
        outcome.verdict = Verdict::Fail;
        outcome.failing_sequence = run.steps;
        outcome.shrunk_sequence = shrunk_steps;
        outcome.failure = Some(shrunk_failure);
        outcome.shrink_steps = shrunk.steps;
        outcome.shrink_executions = shrunk.executions;
        outcome.shrink_budget_exceeded = shrunk.budget_exceeded;
        outcome.best_effort = scfg.reset_hook.is_none();
        outcome.values_may_differ = true;
        return outcome;
    }
    outcome
}
