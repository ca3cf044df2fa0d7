use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The three automatic oracles, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Property {
    /// The response status is not a 5xx.
    Non500,
    /// The response status is documented for the operation (or `default` is).
    StatusDocumented,
    /// A documented response body validates against its schema.
    BodyConforms,
}

impl Property {
    pub const ALL: [Property; 3] = [
        Property::Non500,
        Property::StatusDocumented,
        Property::BodyConforms,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::Non500 => "Non500",
            Property::StatusDocumented => "StatusDocumented",
            Property::BodyConforms => "BodyConforms",
        }
    }

    pub fn from_name(name: &str) -> Option<Property> {
        Property::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamStrategy {
    /// Every test generates all parameters at once.
    #[default]
    AllParams,
    /// One campaign per parameter (others held at minimal values), then all at once.
    PerParamFirst,
}

/// How many tests to run and what to check.
///
/// Tests are grouped into iterations of `tests_per_iteration`; after
/// `iterations` iterations the next tier starts with `tier_growth` times as
/// many tests per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RunPlan {
    pub tests_per_iteration: u32,
    pub iterations: u32,
    pub tier_growth: u32,
    pub tiers: u32,
    pub seed: u64,
    pub enabled_properties: BTreeSet<Property>,
    pub param_strategy: ParamStrategy,
    /// Request executions allowed while shrinking one failure.
    pub shrink_budget: u32,
    /// Consecutive transport errors after which an operation is aborted.
    pub max_transport_errors: u32,
    /// After a failure, keep testing with the offending parameter excluded.
    pub keep_going: bool,
}

impl Default for RunPlan {
    fn default() -> Self {
        RunPlan {
            tests_per_iteration: 10,
            iterations: 30,
            tier_growth: 10,
            tiers: 1,
            seed: 0,
            enabled_properties: Property::ALL.into_iter().collect(),
            param_strategy: ParamStrategy::AllParams,
            shrink_budget: 1000,
            max_transport_errors: 10,
            keep_going: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0} must be at least 1")]
pub struct PlanError(pub &'static str);

/// Where a test index falls in the tier/iteration schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSlot {
    pub tier: u32,
    pub iteration: u32,
    /// Index of the test within its iteration.
    pub offset: u64,
}

impl RunPlan {
    pub fn validate(&self) -> Result<(), PlanError> {
        for (name, value) in [
            ("testsPerIteration", self.tests_per_iteration),
            ("iterations", self.iterations),
            ("tierGrowth", self.tier_growth),
            ("tiers", self.tiers),
        ] {
            if value == 0 {
                return Err(PlanError(name));
            }
        }
        Ok(())
    }

    /// Tests per iteration in tier `tier`.
    pub fn tests_in_tier(&self, tier: u32) -> u64 {
        u64::from(self.tests_per_iteration)
            .saturating_mul(u64::from(self.tier_growth).saturating_pow(tier))
    }

    pub fn total_tests(&self) -> u64 {
        (0..self.tiers)
            .map(|t| self.tests_in_tier(t).saturating_mul(u64::from(self.iterations)))
            .fold(0u64, u64::saturating_add)
    }

    pub fn locate(&self, test_index: u64) -> Option<TestSlot> {
        let mut rest = test_index;
        for tier in 0..self.tiers {
            let per = self.tests_in_tier(tier);
            let in_tier = per.saturating_mul(u64::from(self.iterations));
            if rest < in_tier {
                return Some(TestSlot {
                    tier,
                    iteration: (rest / per) as u32,
                    offset: rest % per,
                });
            }
            rest -= in_tier;
        }
        None
    }
}
