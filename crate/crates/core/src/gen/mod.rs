//! Seeded value generation, mutation and shrinking.

mod config;
mod mutate;
mod rng;
mod sample;
mod shrink;
mod size;
mod value;

pub use config::{ConfigError, GeneratorConfig};
pub use mutate::{gen_assignment, mutate_assignment, Assignment, Mutation, MutationKind};
pub use rng::{stable_hash, Rng};
pub use sample::{conformance_failures, SampleFailure};
pub use shrink::{shrink_candidates, shrink_value, ShrinkError, Shrunk};
pub use size::{size_schedule, Size};
pub use value::{gen_string, gen_uuid, gen_value, GenError};
