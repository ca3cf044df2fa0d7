//! Call sequences whose inputs are drawn from earlier responses.

mod pool;
mod sequence;

pub use pool::ResponsePool;
pub use sequence::{
    check_stateful, gen_sequence, materialize, run_sequence, shrink_sequence, CallStep, Provenance,
    SequenceFailure, SequenceOutcome, SequenceRun, ShrunkSequence, StatefulConfig, StepTemplate,
};
