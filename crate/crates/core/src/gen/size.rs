use serde::{Deserialize, Serialize};

use super::GeneratorConfig;
use crate::checker::RunPlan;

/// Generation size: caps string and array lengths and integer magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Size(pub u32);

/// Size for the test at `test_index` of a run.
///
/// Within an iteration the size is the test's offset, capped at
/// `cfg.max_size`. Later tiers run more tests per iteration and so reach
/// larger sizes before the cap.
pub fn size_schedule(test_index: u64, plan: &RunPlan, cfg: &GeneratorConfig) -> Size {
    let offset = plan
        .locate(test_index)
        .map_or(u64::from(cfg.max_size), |slot| slot.offset);
    Size(offset.min(u64::from(cfg.max_size)) as u32)
}
