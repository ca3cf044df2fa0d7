use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Property;
use crate::exec::CallRecord;
use crate::spec::{validate, CompiledOperation, SpecRegistry, ValidationViolation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum PropertyVerdict {
    Pass,
    Fail {
        message: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        violations: Vec<ValidationViolation>,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub property: Property,
    #[serde(flatten)]
    pub verdict: PropertyVerdict,
}

impl PropertyResult {
    pub fn failed(&self) -> bool {
        matches!(self.verdict, PropertyVerdict::Fail { .. })
    }
}

/// Verdicts for the enabled properties, in evaluation order.
///
/// Returns nothing for records without an HTTP status.
pub fn evaluate_properties(
    op: &CompiledOperation,
    record: &CallRecord,
    registry: &SpecRegistry,
    enabled: &BTreeSet<Property>,
) -> Vec<PropertyResult> {
    let Some(status) = record.status() else {
        return Vec::new();
    };
    enabled
        .iter()
        .map(|&property| PropertyResult {
            property,
            verdict: evaluate(property, op, record, status, registry),
        })
        .collect()
}

/// Verdict for a single property.
pub fn evaluate_property(
    property: Property,
    op: &CompiledOperation,
    record: &CallRecord,
    registry: &SpecRegistry,
) -> Option<PropertyVerdict> {
    record
        .status()
        .map(|status| evaluate(property, op, record, status, registry))
}

fn evaluate(
    property: Property,
    op: &CompiledOperation,
    record: &CallRecord,
    status: u16,
    registry: &SpecRegistry,
) -> PropertyVerdict {
    let documented = op.op.documents_status(status);
    match property {
        Property::Non500 => {
            if (500..=599).contains(&status) {
                fail(format!("status {status}"))
            } else {
                PropertyVerdict::Pass
            }
        }
        Property::StatusDocumented => {
            if documented {
                PropertyVerdict::Pass
            } else {
                fail(format!("status {status} is not documented"))
            }
        }
        Property::BodyConforms => {
            if !documented {
                return skipped(format!("status {status} is not documented"));
            }
            let json = record.body().and_then(|b| b.json.as_ref());
            match (op.response_spec(status), json) {
                (None, Some(_)) => PropertyVerdict::Pass,
                (None, None) => skipped("body is not JSON and no schema is documented".into()),
                (Some(_), None) => fail(format!("status {status} body is not JSON")),
                (Some(spec), Some(body)) => match validate(registry, spec, body) {
                    Ok(r) if r.conforms => PropertyVerdict::Pass,
                    Ok(r) => PropertyVerdict::Fail {
                        message: format!("status {status} body does not conform to {spec}"),
                        violations: r.violations,
                    },
                    Err(e) => fail(e.to_string()),
                },
            }
        }
    }
}

fn fail(message: String) -> PropertyVerdict {
    PropertyVerdict::Fail {
        message,
        violations: Vec::new(),
    }
}

fn skipped(reason: String) -> PropertyVerdict {
    PropertyVerdict::Skipped { reason }
}
