use std::collections::HashSet;

use serde_json::{Map, Number, Value};

use crate::spec::{CompiledSpec, SpecRegistry};

/// Result of a completed shrink.
#[derive(Debug, Clone, PartialEq)]
pub struct Shrunk {
    pub value: Value,
    /// Accepted shrink steps.
    pub steps: u32,
    /// Calls made to the predicate.
    pub executions: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShrinkError {
    #[error("shrink budget of {budget} executions exceeded")]
    ShrinkBudgetExceeded { best: Shrunk, budget: u32 },
}

impl ShrinkError {
    pub fn best(&self) -> &Shrunk {
        match self {
            ShrinkError::ShrinkBudgetExceeded { best, .. } => best,
        }
    }
}

/// Greedy first-improvement shrinking.
///
/// Candidates from [`shrink_candidates`] are tried in order; the first one
/// for which `still_fails` holds becomes the new current value. Stops when
/// no candidate fails, which makes the result a local minimum.
pub fn shrink_value(
    registry: &SpecRegistry,
    spec: Option<&str>,
    failing: Value,
    budget: u32,
    mut still_fails: impl FnMut(&Value) -> bool,
) -> Result<Shrunk, ShrinkError> {
    let mut current = Shrunk {
        value: failing,
        steps: 0,
        executions: 0,
    };
    let mut rejected: HashSet<String> = HashSet::new();
    'outer: loop {
        for candidate in shrink_candidates(registry, spec, &current.value) {
            let key = candidate.to_string();
            if rejected.contains(&key) {
                continue;
            }
            if current.executions >= budget {
                return Err(ShrinkError::ShrinkBudgetExceeded {
                    best: current,
                    budget,
                });
            }
            current.executions += 1;
            if still_fails(&candidate) {
                current.value = candidate;
                current.steps += 1;
                continue 'outer;
            }
            rejected.insert(key);
        }
        return Ok(current);
    }
}

/// Every value one shrink step away from `value`, structurally smaller
/// candidates first.
///
/// `spec` supplies the required keys of objects; without it (or when the
/// value no longer matches its spec) every key may be dropped.
pub fn shrink_candidates(registry: &SpecRegistry, spec: Option<&str>, value: &Value) -> Vec<Value> {
    let compiled = spec.and_then(|s| registry.get(s).ok());
    match value {
        Value::Null => Vec::new(),
        Value::Bool(b) => {
            if *b {
                vec![Value::Bool(false)]
            } else {
                Vec::new()
            }
        }
        Value::Number(n) => number_candidates(n),
        Value::String(s) => string_candidates(s).into_iter().map(Value::String).collect(),
        Value::Array(items) => {
            let child = match compiled {
                Some(CompiledSpec::Array { items }) => Some(items.as_str()),
                _ => None,
            };
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut v = items.clone();
                v.remove(i);
                out.push(Value::Array(v));
            }
            for (i, item) in items.iter().enumerate() {
                for c in shrink_candidates(registry, child, item) {
                    let mut v = items.clone();
                    v[i] = c;
                    out.push(Value::Array(v));
                }
            }
            out
        }
        Value::Object(map) => {
            let (props, required) = match compiled {
                Some(CompiledSpec::Object {
                    properties,
                    required,
                }) => (Some(properties), Some(required)),
                _ => (None, None),
            };
            let child_spec = |key: &str| {
                props.and_then(|p| p.iter().find(|(k, _)| k == key).map(|(_, s)| s.as_str()))
            };
            let mut out = Vec::new();
            for key in map.keys() {
                if required.is_some_and(|r| r.contains(key)) {
                    continue;
                }
                let mut m = map.clone();
                m.remove(key);
                out.push(Value::Object(m));
            }
            for (key, v) in map {
                for c in shrink_candidates(registry, child_spec(key), v) {
                    let mut m: Map<String, Value> = map.clone();
                    m.insert(key.clone(), c);
                    out.push(Value::Object(m));
                }
            }
            out
        }
    }
}

fn string_candidates(s: &str) -> Vec<String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    for i in 0..chars.len() {
        let mut c = chars.clone();
        c.remove(i);
        out.push(c.into_iter().collect());
    }
    // '0' < 'a' < everything else, so replacement always moves down.
    for (i, &ch) in chars.iter().enumerate() {
        for to in ['0', 'a'] {
            if ch == to || ch == '0' || (to == 'a' && ch == 'a') {
                continue;
            }
            let mut c = chars.clone();
            c[i] = to;
            out.push(c.into_iter().collect());
        }
    }
    out
}

fn number_candidates(n: &Number) -> Vec<Value> {
    if let Some(i) = n.as_i64() {
        return int_candidates(i).into_iter().map(Value::from).collect();
    }
    if let Some(u) = n.as_u64() {
        return vec![Value::from(u / 2), Value::from(u - 1)];
    }
    let f = n.as_f64().unwrap_or(0.0);
    if f.fract() != 0.0 && f.is_finite() {
        let t = f.trunc();
        if t.abs() < 9.0e15 {
            return vec![Value::from(t as i64)];
        }
        return vec![Value::from(t)];
    }
    if f.abs() < 9.0e15 {
        int_candidates(f as i64).into_iter().map(Value::from).collect()
    } else {
        vec![Value::from(f / 2.0)]
    }
}

fn int_candidates(i: i64) -> Vec<i64> {
    if i == 0 {
        return Vec::new();
    }
    let mut out = vec![i / 2];
    let dec = i - i.signum();
    if dec != i / 2 {
        out.push(dec);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn reg() -> SpecRegistry {
        SpecRegistry::new()
    }

    fn has_control(v: &Value) -> bool {
        v.as_str().is_some_and(|s| s.chars().any(char::is_control))
    }

    #[test]
    fn control_character_string_shrinks_to_the_character() {
        let out = shrink_value(&reg(), None, json!("abc\u{7}xy"), 1000, has_control).unwrap();
        assert_eq!(out.value, json!("\u{7}"));
        // brute force: every string reachable by one step from the result passes
        for c in shrink_candidates(&reg(), None, &out.value) {
            assert!(!has_control(&c), "{c}");
        }
        // every subsequence of the input, with any char replaced by 'a' or '0':
        // none shorter than the result still fails
        let chars: Vec<char> = "abc\u{7}xy".chars().collect();
        let mut shortest = usize::MAX;
        for mask in 0u32..(1 << chars.len()) {
            let sub: Vec<char> = (0..chars.len()).filter(|i| mask & (1 << i) != 0).map(|i| chars[i]).collect();
            for sub_mask in 0u32..(3u32.pow(sub.len() as u32)) {
                let mut m = sub_mask;
                let s: String = sub
                    .iter()
                    .map(|&c| {
                        let r = m % 3;
                        m /= 3;
                        [c, 'a', '0'][r as usize]
                    })
                    .collect();
                if has_control(&json!(s)) {
                    shortest = shortest.min(s.chars().count());
                }
            }
        }
        assert_eq!(out.value.as_str().unwrap().chars().count(), shortest);
    }

    #[test]
    fn minimal_input_is_a_fixpoint() {
        let out = shrink_value(&reg(), None, json!("!"), 1000, |v| {
            v.as_str().is_some_and(|s| s.contains('!'))
        })
        .unwrap();
        assert_eq!(out.value, json!("!"));
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn integers_shrink_to_boundary() {
        let out = shrink_value(&reg(), None, json!(-97), 1000, |v| v.as_i64().unwrap() <= -5).unwrap();
        assert_eq!(out.value, json!(-5));
        let out = shrink_value(&reg(), None, json!(1234), 1000, |v| v.as_i64().unwrap() >= 0).unwrap();
        assert_eq!(out.value, json!(0));
    }

    #[test]
    fn objects_keep_required_keys() {
        let mut registry = SpecRegistry::new();
        let schema = crate::oas::DataSchema::object(
            [
                ("name", crate::oas::DataSchema::string()),
                ("extra", crate::oas::DataSchema::string()),
            ],
            &["name"],
        );
        registry.register("user/o", &schema).unwrap();
        let start = json!({"name": "hello world!", "extra": "zzz"});
        let out = shrink_value(&registry, Some("user/o"), start, 1000, |v| {
            v["name"].as_str().is_some_and(|s| s.contains('!'))
        })
        .unwrap();
        assert_eq!(out.value, json!({"name": "!"}));
    }

    #[test]
    fn budget_exceeded_returns_best_so_far() {
        let err = shrink_value(&reg(), None, json!("xxxxxxxxxx"), 3, |_| true).unwrap_err();
        let best = err.best();
        assert_eq!(best.executions, 3);
        assert_eq!(best.value.as_str().unwrap().len(), 7);
    }

    #[test]
    fn array_drops_and_shrinks_elements() {
        let out = shrink_value(&reg(), None, json!([5, true, "ab!", 7]), 1000, |v| {
            v.as_array()
                .is_some_and(|a| a.iter().any(|x| x.as_str().is_some_and(|s| s.contains('!'))))
        })
        .unwrap();
        assert_eq!(out.value, json!(["!"]));
    }

    #[test]
    fn replacement_is_well_founded() {
        // predicate accepts any single char: result must not cycle between '0' and 'a'
        let out = shrink_value(&reg(), None, json!("Z"), 1000, |v| {
            v.as_str().is_some_and(|s| s.chars().count() == 1)
        })
        .unwrap();
        assert_eq!(out.value, json!("0"));
    }
}
