use serde_json::Value;

use super::{gen_value, GenError, GeneratorConfig, Rng, Size};
use crate::par::{self, Execution};
use crate::spec::{validate, SpecRef, SpecRegistry, ValidationResult};

/// A generated value that failed validation (or could not be generated).
#[derive(Debug, Clone, PartialEq)]
pub enum SampleFailure {
    Invalid {
        index: u64,
        value: Value,
        result: ValidationResult,
    },
    Generation {
        index: u64,
        error: GenError,
    },
}

/// Generates `samples` values for `spec` and returns those that do not
/// validate. Sample `i` uses its own derived stream and size `i % (max_size + 1)`,
/// so the result does not depend on `exec`.
pub fn conformance_failures(
    registry: &SpecRegistry,
    spec: &SpecRef,
    cfg: &GeneratorConfig,
    seed: u64,
    samples: u64,
    exec: Execution,
) -> Vec<SampleFailure> {
    let cfg = cfg.without_mutations();
    let period = u64::from(cfg.max_size) + 1;
    par::map_indices(exec, samples, |i| {
        let mut rng = Rng::derive(seed, &[i]);
        let size = Size((i % period) as u32);
        match gen_value(registry, spec, &cfg, &mut rng, size) {
            Ok(value) => match validate(registry, spec, &value) {
                Ok(r) if r.conforms => None,
                Ok(result) => Some(SampleFailure::Invalid {
                    index: i,
                    value,
                    result,
                }),
                Err(e) => Some(SampleFailure::Generation {
                    index: i,
                    error: e.into(),
                }),
            },
            Err(error) => Some(SampleFailure::Generation { index: i, error }),
        }
    })
    .into_iter()
    .flatten()
    .collect()
}
