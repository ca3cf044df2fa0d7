use std::collections::BTreeMap;

use serde_json::Value;

use crate::gen::Rng;

/// Objects harvested from response bodies, indexed by attribute name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResponsePool {
    entries: Vec<Value>,
    index: BTreeMap<String, Vec<(usize, Value)>>,
}

impl ResponsePool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize) -> Option<&Value> {
        self.entries.get(i)
    }

    /// Indexed values for `attribute`, with the entry each came from.
    pub fn values(&self, attribute: &str) -> &[(usize, Value)] {
        self.index.get(attribute).map_or(&[], Vec::as_slice)
    }

    /// Adds every object in `body` (top level, array elements, nested) and
    /// indexes their scalar attributes.
    pub fn record_response(&mut self, body: &Value) {
        match body {
            Value::Array(items) => items.iter().for_each(|v| self.record_response(v)),
            Value::Object(map) => {
                let entry = self.entries.len();
                self.entries.push(body.clone());
                for (key, v) in map {
                    match v {
                        Value::String(_) | Value::Number(_) | Value::Bool(_) => {
                            self.index.entry(key.clone()).or_default().push((entry, v.clone()));
                        }
                        Value::Array(_) | Value::Object(_) => self.record_response(v),
                        Value::Null => {}
                    }
                }
            }
            _ => {}
        }
    }

    /// A uniformly drawn value of `attribute` and the entry it came from.
    pub fn draw_input(&self, attribute: &str, rng: &mut Rng) -> Option<(usize, Value)> {
        let values = self.values(attribute);
        if values.is_empty() {
            None
        } else {
            Some(values[rng.index(values.len())].clone())
        }
    }
}
