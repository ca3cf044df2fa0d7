use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CompiledSpec, Format, PrimitiveSpec, SpecError, SpecRef, SpecRegistry};
use crate::oas::PrimitiveType;

const UUID_PATTERN: &str =
    r"^[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}$";

fn uuid_regex() -> &'static regex::Regex {
    static RE: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| regex::Regex::new(UUID_PATTERN).expect("valid uuid regex"))
}

/// Canonical 8-4-4-4-12 hex UUID check.
pub(crate) fn is_uuid(s: &str) -> bool {
    uuid_regex().is_match(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationViolation {
    pub json_path: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationResult {
    pub conforms: bool,
    pub violations: Vec<ValidationViolation>,
}

impl ValidationResult {
    fn from_violations(violations: Vec<ValidationViolation>) -> Self {
        ValidationResult {
            conforms: violations.is_empty(),
            violations,
        }
    }
}

/// Appends an object key to a JSON path, quoting keys that are not plain identifiers.
pub fn json_path_key(path: &str, key: &str) -> String {
    let plain = !key.is_empty()
        && key
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if plain {
        format!("{path}.{key}")
    } else {
        format!("{path}['{}']", key.replace('\\', "\\\\").replace('\'', "\\'"))
    }
}

fn render(value: &Value) -> String {
    let text = value.to_string();
    if text.chars().count() > 80 {
        let cut: String = text.chars().take(77).collect();
        format!("{cut}...")
    } else {
        text
    }
}

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Structural equality that compares numbers by value (`1` equals `1.0`).
pub(crate) fn json_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => match (x.as_i64(), y.as_i64()) {
            (Some(i), Some(j)) => i == j,
            _ => x.as_f64() == y.as_f64(),
        },
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(a, b)| json_equal(a, b))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x
                    .iter()
                    .all(|(k, v)| y.get(k).is_some_and(|w| json_equal(v, w)))
        }
        _ => a == b,
    }
}

/// True when `value` is a JSON number without a fractional part.
pub(crate) fn is_integral(value: &Value) -> bool {
    match value {
        Value::Number(n) => {
            n.is_i64() || n.is_u64() || n.as_f64().is_some_and(|f| f.is_finite() && f.fract() == 0.0)
        }
        _ => false,
    }
}

/// Checks `value` against a registered spec.
///
/// Pure and total: every JSON value yields a result; violations carry JSON
/// paths rooted at `$`.
pub fn validate(
    registry: &SpecRegistry,
    spec: &SpecRef,
    value: &Value,
) -> Result<ValidationResult, SpecError> {
    let mut violations = Vec::new();
    check(registry, &spec.name, value, "$", &mut violations)?;
    Ok(ValidationResult::from_violations(violations))
}

fn check(
    registry: &SpecRegistry,
    name: &str,
    value: &Value,
    path: &str,
    out: &mut Vec<ValidationViolation>,
) -> Result<(), SpecError> {
    let mut violation = |expected: String| {
        out.push(ValidationViolation {
            json_path: path.to_string(),
            expected,
            actual: render(value),
        })
    };
    match registry.get(name)? {
        CompiledSpec::Primitive(prim) => {
            if let Some(expected) = check_primitive(prim, value) {
                violation(expected);
            }
        }
        CompiledSpec::Enum(values) => {
            if !values.iter().any(|v| json_equal(v, value)) {
                let options: Vec<String> = values.iter().map(Value::to_string).collect();
                violation(format!("one of [{}]", options.join(", ")));
            }
        }
        CompiledSpec::Array { items } => match value {
            Value::Array(elements) => {
                for (i, element) in elements.iter().enumerate() {
                    check(registry, items, element, &format!("{path}[{i}]"), out)?;
                }
            }
            _ => violation(format!("expected array, got {}", type_name(value))),
        },
        CompiledSpec::Object {
            properties,
            required,
        } => match value {
            Value::Object(map) => {
                for key in required {
                    if !map.contains_key(key) {
                        out.push(ValidationViolation {
                            json_path: json_path_key(path, key),
                            expected: "required property".into(),
                            actual: "missing".into(),
                        });
                    }
                }
                for (key, prop_spec) in properties {
                    if let Some(v) = map.get(key) {
                        check(registry, prop_spec, v, &json_path_key(path, key), out)?;
                    }
                }
                if registry.options.reject_extra_keys {
                    for (key, v) in map {
                        if !properties.iter().any(|(k, _)| k == key) {
                            out.push(ValidationViolation {
                                json_path: json_path_key(path, key),
                                expected: "no undocumented properties".into(),
                                actual: render(v),
                            });
                        }
                    }
                }
            }
            _ => violation(format!("expected object, got {}", type_name(value))),
        },
        CompiledSpec::Alias(_) => unreachable!("registry.get follows aliases"),
    }
    Ok(())
}

/// Returns the expectation `value` fails, if any.
fn check_primitive(prim: &PrimitiveSpec, value: &Value) -> Option<String> {
    match prim.ty {
        PrimitiveType::String => {
            let Value::String(s) = value else {
                return Some(format!("expected string, got {}", type_name(value)));
            };
            match prim.format {
                Some(Format::Uuid) if !is_uuid(s) => {
                    return Some("does not match uuid pattern".into())
                }
                Some(Format::DateTime) if chrono::DateTime::parse_from_rfc3339(s).is_err() => {
                    return Some("RFC 3339 date-time".into())
                }
                _ => {}
            }
            if let Some(re) = &prim.pattern {
                if !re.is_match(s) {
                    return Some(format!("string matching /{}/", re.as_str()));
                }
            }
            None
        }
        PrimitiveType::Boolean => {
            (!value.is_boolean()).then(|| format!("expected boolean, got {}", type_name(value)))
        }
        PrimitiveType::Integer | PrimitiveType::Number => {
            let Some(n) = value.as_f64() else {
                return Some(format!("expected {}, got {}", prim.ty, type_name(value)));
            };
            if prim.ty == PrimitiveType::Integer && !is_integral(value) {
                return Some("expected integer, got a number with a fractional part".into());
            }
            if let Some(min) = prim.lower() {
                if n < min {
                    return Some(format!("number >= {min}"));
                }
            }
            if let Some(max) = prim.upper() {
                if n > max {
                    return Some(format!("number <= {max}"));
                }
            }
            None
        }
    }
}
