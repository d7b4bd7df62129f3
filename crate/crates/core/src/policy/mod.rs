//! Arm-selection policies.
//!
//! Every policy follows the same protocol: [`Policy::select`] for slot `t`,
//! then exactly one [`Policy::observe`] with the observation of slot `t`.
//! Policies only ever see [`Observation`]s; the counterfactual rewards of
//! the other arms stay with the harness.

mod baselines;
mod conditions;
mod phased;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environment::Observation;
use crate::error::PolicyError;
use crate::estimators::CountTables;
use crate::scenario::Scenario;
use crate::theory::{condition_coefficients, SystemConstants};

pub use baselines::{GeniePolicy, UniformRandomPolicy};
pub use conditions::{check_explore_conditions, check_explore_conditions_ln, PhaseDecision, Trigger};
pub use phased::{PhaseKind, PhasePolicy, PhaseRecord, PhaseStats, PolicyTrace, SlotRecord, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Lemp,
    Dsee,
    AvgBest,
    Genie,
    UniformRandom,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Lemp,
        PolicyKind::Dsee,
        PolicyKind::AvgBest,
        PolicyKind::Genie,
        PolicyKind::UniformRandom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Lemp => "lemp",
            PolicyKind::Dsee => "dsee",
            PolicyKind::AvgBest => "avg-best",
            PolicyKind::Genie => "genie",
            PolicyKind::UniformRandom => "uniform-random",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| PolicyError::UnknownPolicy(s.to_string()))
    }
}

/// Information available when choosing the arm of slot `slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionContext {
    pub slot: u64,
    /// Most recently observed global state. For the first slot this is
    /// the initial global state.
    pub last_global: usize,
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    fn select(&mut self, ctx: DecisionContext) -> Result<usize, PolicyError>;

    fn observe(&mut self, obs: &Observation) -> Result<(), PolicyError>;

    /// Phase counters, for policies built on the phase machine.
    fn phase_stats(&self) -> Option<PhaseStats> {
        None
    }

    fn trace(&self) -> Option<&PolicyTrace> {
        None
    }

    /// Online counters, for policies that keep them.
    fn tables(&self) -> Option<&CountTables> {
        None
    }
}

/// Tuning of the phase machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LempConfig {
    pub epsilon: f64,
    /// Known lower bound on the squared value gap.
    pub delta_floor: f64,
    /// `L` used inside the rate estimate `4L / max{..}`.
    pub l_eff: f64,
    /// Coefficient multiplying `ln t` in the per-arm exploration test.
    pub cond1_coeff: f64,
    /// Coefficient multiplying `ln t` in the global-state exploration test.
    pub cond2_coeff: f64,
    pub growth_base: u64,
    pub exploit_multiplier: u64,
}

/// Calibrated defaults used by the presets.
pub const CALIBRATED_EPSILON: f64 = 0.05;
pub const CALIBRATED_L_EFF: f64 = 1.0;
pub const CALIBRATED_COND_COEFF: f64 = 2.0;

impl LempConfig {
    /// Desk-scale constants: `L = 1`, both condition coefficients 2, and the
    /// scenario's exact squared gap as the floor (1 when no arm is ever
    /// suboptimal).
    pub fn calibrated(constants: &SystemConstants) -> Self {
        Self {
            epsilon: CALIBRATED_EPSILON,
            delta_floor: finite_or_one(constants.delta),
            l_eff: CALIBRATED_L_EFF,
            cond1_coeff: CALIBRATED_COND_COEFF,
            cond2_coeff: CALIBRATED_COND_COEFF,
            growth_base: 4,
            exploit_multiplier: 2,
        }
    }

    /// Constants exactly as the closed-form expressions give them.
    pub fn theoretical(constants: &SystemConstants, epsilon: f64) -> Self {
        let c = condition_coefficients(constants, epsilon);
        Self {
            epsilon,
            delta_floor: finite_or_one(constants.delta),
            l_eff: c.l,
            cond1_coeff: c.cond1_coeff,
            cond2_coeff: c.cond2_coeff,
            growth_base: 4,
            exploit_multiplier: 2,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let positive = [
            ("epsilon", self.epsilon),
            ("delta_floor", self.delta_floor),
            ("l_eff", self.l_eff),
            ("cond1_coeff", self.cond1_coeff),
            ("cond2_coeff", self.cond2_coeff),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(PolicyError::InvalidConfig(format!("{name} must be positive, got {v}")));
        }
        if self.growth_base < 2 {
            return Err(PolicyError::InvalidConfig("growth_base must be at least 2".into()));
        }
        if self.exploit_multiplier < 1 {
            return Err(PolicyError::InvalidConfig("exploit_multiplier must be at least 1".into()));
        }
        Ok(())
    }

    /// The worst-case rate `4L / delta` that the extended DSEE baseline uses.
    pub fn worst_case_rate(&self) -> f64 {
        4.0 * self.l_eff / self.delta_floor
    }
}

fn finite_or_one(delta: f64) -> f64 {
    if delta.is_finite() {
        delta
    } else {
        1.0
    }
}

/// Builds a fresh policy for one run. `seed` feeds the policies that
/// randomize; it never touches the environment stream.
pub fn make_policy(
    kind: PolicyKind,
    scenario: &Scenario,
    config: &LempConfig,
    seed: u64,
    record_slots: bool,
) -> Result<Box<dyn Policy>, PolicyError> {
    let ns = scenario.num_global_states();
    let n = scenario.num_arms();
    Ok(match kind {
        PolicyKind::Lemp => Box::new(PhasePolicy::new(Variant::Lemp, *config, ns, n, record_slots)?),
        PolicyKind::Dsee => Box::new(PhasePolicy::new(Variant::Dsee, *config, ns, n, record_slots)?),
        PolicyKind::AvgBest => {
            Box::new(PhasePolicy::new(Variant::AvgBest, *config, ns, n, record_slots)?)
        }
        PolicyKind::Genie => Box::new(GeniePolicy::new(scenario.true_values().clone())),
        PolicyKind::UniformRandom => Box::new(UniformRandomPolicy::new(n, seed)),
    })
}
