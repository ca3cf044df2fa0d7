use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{gen_value, GenError, GeneratorConfig, Rng, Size};
use crate::oas::{ParameterSpec, PrimitiveType};
use crate::spec::{CompiledSpec, SpecRef, SpecRegistry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum MutationKind {
    /// A required parameter was left out.
    OmittedRequired,
    /// A numeric value was moved outside its bounds.
    OutOfRange { original: Value },
    /// The value was replaced by one of another JSON type.
    TypeChanged { original: Value },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mutation {
    /// Parameter key, e.g. `query.q`.
    pub param: String,
    #[serde(flatten)]
    pub kind: MutationKind,
}

/// Parameter values for one request, keyed `location.name`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub values: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mutations: Vec<Mutation>,
}

impl Assignment {
    pub fn new(values: Map<String, Value>) -> Self {
        Assignment {
            values,
            mutations: Vec::new(),
        }
    }

    pub fn to_value(&self) -> Value {
        Value::Object(self.values.clone())
    }
}

/// Generates the request object for an operation and applies mutations.
pub fn gen_assignment(
    registry: &SpecRegistry,
    request: &SpecRef,
    params: &[(ParameterSpec, SpecRef)],
    cfg: &GeneratorConfig,
    rng: &mut Rng,
    size: Size,
) -> Result<Assignment, GenError> {
    let values = match gen_value(registry, request, cfg, rng, size)? {
        Value::Object(map) => map,
        other => unreachable!("request specs are objects, got {other}"),
    };
    Ok(mutate_assignment(registry, params, Assignment::new(values), cfg, rng))
}

/// Leaves out required parameters with probability `omit_required_prob` and
/// pushes values out of range (or retypes them) with probability
/// `out_of_range_prob`. Every change is recorded on the assignment.
pub fn mutate_assignment(
    registry: &SpecRegistry,
    params: &[(ParameterSpec, SpecRef)],
    mut assignment: Assignment,
    cfg: &GeneratorConfig,
    rng: &mut Rng,
) -> Assignment {
    for (param, spec) in params {
        let key = param.key();
        if param.required && rng.chance(cfg.omit_required_prob) {
            if assignment.values.remove(&key).is_some() {
                assignment.mutations.push(Mutation {
                    param: key,
                    kind: MutationKind::OmittedRequired,
                });
            }
            continue;
        }
        if !rng.chance(cfg.out_of_range_prob) {
            continue;
        }
        let Some(original) = assignment.values.get(&key).cloned() else {
            continue;
        };
        let (value, kind) = match out_of_range(registry, spec, rng) {
            Some(v) => (v, MutationKind::OutOfRange { original }),
            None => (retype(&original, rng), MutationKind::TypeChanged { original }),
        };
        assignment.values.insert(key.clone(), value);
        assignment.mutations.push(Mutation { param: key, kind });
    }
    assignment
}

fn out_of_range(registry: &SpecRegistry, spec: &SpecRef, rng: &mut Rng) -> Option<Value> {
    let CompiledSpec::Primitive(prim) = registry.get(&spec.name).ok()? else {
        return None;
    };
    let integral = match prim.ty {
        PrimitiveType::Integer => true,
        PrimitiveType::Number => false,
        _ => return None,
    };
    let distance = rng.int_in(1, 100) as f64;
    let above = match (prim.minimum, prim.maximum) {
        (None, None) => return None,
        (Some(_), Some(_)) => rng.chance(0.5),
        (None, Some(_)) => true,
        (Some(_), None) => false,
    };
    let v = if above {
        prim.maximum.unwrap().floor() + distance
    } else {
        prim.minimum.unwrap().ceil() - distance
    };
    Some(if integral {
        Value::from(v as i64)
    } else {
        Value::from(v)
    })
}

fn retype(original: &Value, rng: &mut Rng) -> Value {
    match original {
        Value::String(_) => Value::from(rng.int_in(-1000, 1000)),
        Value::Number(n) => Value::String(n.to_string()),
        Value::Bool(b) => Value::String(b.to_string()),
        Value::Null => Value::Bool(true),
        Value::Array(_) | Value::Object(_) => Value::String("x".repeat(rng.int_in(0, 5) as usize)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oas::{parse_document, Location};
    use crate::spec::{compile_api, validate, ValidationOptions};

    fn doc() -> crate::spec::CompiledApi {
        let api = parse_document(
            r#"{"swagger":"2.0","info":{"title":"t","version":"1"},"paths":{"/x":{"get":{
              "parameters":[
                {"name":"q","in":"query","required":true,"type":"string"},
                {"name":"n","in":"query","required":true,"type":"integer","maximum":10},
                {"name":"opt","in":"header","required":false,"type":"boolean"}],
              "responses":{"200":{"description":"ok"}}}}}}"#,
        )
        .unwrap();
        compile_api(&api, ValidationOptions::default()).unwrap()
    }

    #[test]
    fn omit_probability_one_drops_all_required() {
        let api = doc();
        let op = &api.operations[0];
        let cfg = GeneratorConfig {
            omit_required_prob: 1.0,
            ..Default::default()
        };
        let mut rng = Rng::new(0);
        for i in 0..50 {
            let a = gen_assignment(&api.registry, &op.request, &op.params, &cfg, &mut rng, Size(i)).unwrap();
            assert!(!a.values.contains_key("query.q"));
            assert!(!a.values.contains_key("query.n"));
            assert!(a
                .mutations
                .iter()
                .all(|m| m.kind == MutationKind::OmittedRequired));
        }
    }

    #[test]
    fn zero_probabilities_leave_assignment_unchanged() {
        let api = doc();
        let op = &api.operations[0];
        let cfg = GeneratorConfig::default();
        let mut rng = Rng::new(1);
        let a = gen_assignment(&api.registry, &op.request, &op.params, &cfg, &mut rng, Size(10)).unwrap();
        let mutated = mutate_assignment(&api.registry, &op.params, a.clone(), &cfg, &mut rng);
        assert_eq!(a, mutated);
        assert!(a.mutations.is_empty());
    }

    #[test]
    fn bounded_integer_goes_out_of_range() {
        let api = doc();
        let op = &api.operations[0];
        let (_, n_spec) = op.param("query.n").unwrap();
        let cfg = GeneratorConfig {
            out_of_range_prob: 1.0,
            ..Default::default()
        };
        let mut rng = Rng::new(2);
        for i in 0..100 {
            let a = gen_assignment(&api.registry, &op.request, &op.params, &cfg, &mut rng, Size(i)).unwrap();
            let n = &a.values["query.n"];
            assert!(n.as_i64().unwrap() > 10);
            assert!(!validate(&api.registry, n_spec, n).unwrap().conforms);
            // q has no bounds and is retyped instead
            assert!(a.values["query.q"].is_number());
            assert!(a.mutations.iter().any(|m| m.param == "query.n"
                && matches!(m.kind, MutationKind::OutOfRange { .. })));
        }
        assert_eq!(op.params[0].0.location, Location::Query);
    }
}
