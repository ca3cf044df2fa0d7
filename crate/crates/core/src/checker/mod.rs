//! Property evaluation and per-operation campaigns.

mod plan;
mod properties;
mod run;

pub use plan::{ParamStrategy, PlanError, Property, RunPlan, TestSlot};
pub use properties::{evaluate_properties, evaluate_property, PropertyResult, PropertyVerdict};
pub use run::{
    check_all, check_operation, curl_command, shell_quote, CheckContext, CheckOutcome, Failure,
    Verdict,
};
