//! The exploration/exploitation phase machine shared by LEMP, the extended
//! DSEE baseline and the best-on-average baseline.
//!
//! Time is split into phases decided at phase boundaries:
//!
//! * an initial round playing every arm once;
//! * exploration of one arm: SB1 plays the arm until its local state id
//!   equals the anchor left by the arm's previous exploration, then SB2
//!   plays it for `b^(n_O - 1)` more slots. The hit slot and every SB2 slot
//!   are recorded as samples, and the last SB2 state becomes the new anchor.
//!   Concatenating SB2 blocks therefore yields one contiguous sample path of
//!   the arm's chain;
//! * exploitation for `m * b^(n_I - 1)` slots, playing the estimated best
//!   arm for the last observed global state.
//!
//! Counters follow the pseudocode conventions: `n_O` starts at 1, is 2 after
//! the initial round and grows by one after every exploration phase; `n_I`
//! is the 1-based index of the current exploitation phase.

use serde::{Deserialize, Serialize};

use super::conditions::{check_explore_conditions, PhaseDecision, Trigger};
use super::{DecisionContext, LempConfig, Policy, PolicyKind};
use crate::environment::{LocalStateId, Observation};
use crate::error::PolicyError;
use crate::estimators::{CountTables, RateParams};
use crate::scenario::argmax_lowest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Estimated per-(state, arm) exploration rates.
    Lemp,
    /// Worst-case rate `4L / delta` for every arm and state.
    Dsee,
    /// LEMP exploration; exploitation plays the best arm on average.
    AvgBest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseKind {
    Init,
    Sb1,
    Sb2,
    Exploit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Init { next: usize },
    Boundary,
    Sb1 { arm: usize },
    Sb2 { arm: usize, remaining: u64 },
    Exploit { remaining: u64 },
}

impl Phase {
    fn kind(self) -> PhaseKind {
        match self {
            Phase::Init { .. } => PhaseKind::Init,
            Phase::Sb1 { .. } => PhaseKind::Sb1,
            Phase::Sb2 { .. } => PhaseKind::Sb2,
            Phase::Exploit { .. } | Phase::Boundary => PhaseKind::Exploit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub phase: PhaseKind,
    pub arm: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase: PhaseKind,
    pub start: u64,
    pub length: u64,
    /// Arm of an exploration phase; `None` for exploitation and init.
    pub arm: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyTrace {
    /// Per-slot records; empty unless slot recording was requested.
    pub slots: Vec<SlotRecord>,
    pub phases: Vec<PhaseRecord>,
}

/// Counters the harness checks against the phase-count laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    /// Exploitation phases started so far.
    pub exploitation_phases: u64,
    /// Exploration phases started per arm, the initial round included.
    pub exploration_phases: Vec<u64>,
    /// Slots spent on each arm in the initial round and in SB1/SB2.
    pub exploration_slots: Vec<u64>,
    /// Longest SB1 block per arm (hit slot included), running block included.
    pub max_sb1_len: Vec<u64>,
    /// Effective coefficient `A_i` of the exploration-count law (see
    /// [`PhasePolicy`] docs).
    pub effective_coeff: Vec<f64>,
    /// Largest finite test coefficient that opened an exploration of arm `i`.
    pub literal_coeff: Vec<f64>,
}

/// LEMP-style phase machine.
///
/// The harness checks the exploration-count law with an effective
/// coefficient: at every exploration entry of arm `i` at time `tau`,
/// triggered in state `s` by a test with finite coefficient `c`, the arm's
/// recorded sample count `S_i` satisfies `S_i <= (c * S_i / T[s][i]) ln tau`
/// because `T[s][i] <= c ln tau`. `effective_coeff[i]` is the maximum of
/// `c * S_i / T[s][i]` over entries, or `S_i / ln tau` for entries opened by
/// an undefined (infinite) rate, an empty cell or the global-state test.
#[derive(Debug, Clone)]
pub struct PhasePolicy {
    variant: Variant,
    config: LempConfig,
    tables: CountTables,
    phase: Phase,
    /// Pseudocode `n_O` per arm.
    n_o: Vec<u32>,
    /// Index of the most recent exploitation phase.
    n_i: u32,
    gamma: Vec<Option<LocalStateId>>,
    exploit_map: Vec<usize>,
    pending: Option<usize>,
    next_slot: u64,
    last_trigger: Option<Trigger>,
    record_slots: bool,
    trace: PolicyTrace,
    stats: PhaseStats,
    sb1_len: u64,
    forced: Option<usize>,
}

impl PhasePolicy {
    pub fn new(
        variant: Variant,
        config: LempConfig,
        num_global_states: usize,
        num_arms: usize,
        record_slots: bool,
    ) -> Result<Self, PolicyError> {
        config.validate()?;
        if num_arms == 0 || num_global_states == 0 {
            return Err(PolicyError::InvalidConfig("empty scenario".into()));
        }
        Ok(Self {
            variant,
            config,
            tables: CountTables::new(num_global_states, num_arms),
            phase: Phase::Init { next: 0 },
            n_o: vec![1; num_arms],
            n_i: 0,
            gamma: vec![None; num_arms],
            exploit_map: vec![0; num_global_states],
            pending: None,
            next_slot: 1,
            last_trigger: None,
            record_slots,
            trace: PolicyTrace::default(),
            stats: PhaseStats {
                exploitation_phases: 0,
                exploration_phases: vec![0; num_arms],
                exploration_slots: vec![0; num_arms],
                max_sb1_len: vec![0; num_arms],
                effective_coeff: vec![0.0; num_arms],
                literal_coeff: vec![0.0; num_arms],
            },
            sb1_len: 0,
            forced: None,
        })
    }

    /// Keeps every recorded sample's local state index.
    pub fn with_sample_log(mut self) -> Self {
        self.tables = self.tables.with_sample_log();
        self
    }

    pub fn counts(&self) -> &CountTables {
        &self.tables
    }

    pub fn config(&self) -> &LempConfig {
        &self.config
    }

    /// Pseudocode `n_O` per arm.
    pub fn n_o(&self) -> &[u32] {
        &self.n_o
    }

    pub fn n_i(&self) -> u32 {
        self.n_i
    }

    pub fn anchors(&self) -> &[Option<LocalStateId>] {
        &self.gamma
    }

    /// Estimated best arm per global state as of the last exploitation entry.
    pub fn exploit_map(&self) -> &[usize] {
        &self.exploit_map
    }

    /// The test outcome at the most recent phase boundary.
    pub fn last_trigger(&self) -> Option<Trigger> {
        self.last_trigger
    }

    /// Makes the next phase boundary open an exploration phase of `arm`
    /// regardless of the tests. Meant for experiments on the estimators.
    pub fn force_exploration(&mut self, arm: usize) {
        self.forced = Some(arm.min(self.n_o.len() - 1));
    }

    fn rate_params(&self) -> RateParams {
        RateParams {
            l_eff: self.config.l_eff,
            delta_floor: self.config.delta_floor,
            epsilon: self.config.epsilon,
        }
    }

    fn rates(&self) -> Vec<Vec<f64>> {
        match self.variant {
            Variant::Lemp | Variant::AvgBest => self.tables.estimates(self.rate_params()).d_hat,
            Variant::Dsee => {
                let r = self.config.worst_case_rate();
                vec![vec![r; self.tables.num_arms()]; self.tables.num_global_states()]
            }
        }
    }

    fn sb2_length(&self, arm: usize) -> u64 {
        self.config.growth_base.saturating_pow(self.n_o[arm] - 1)
    }

    fn exploit_length(&self) -> u64 {
        self.config
            .exploit_multiplier
            .saturating_mul(self.config.growth_base.saturating_pow(self.n_i - 1))
    }

    fn start_phase(&mut self, phase: Phase, arm: Option<usize>) {
        self.phase = phase;
        self.trace.phases.push(PhaseRecord {
            phase: phase.kind(),
            start: self.next_slot,
            length: 0,
            arm,
        });
    }

    fn decide(&mut self) {
        let t = self.next_slot - 1;
        if let Some(arm) = self.forced.take() {
            let trigger = Trigger {
                decision: PhaseDecision::ExploreGlobal(arm),
                state: 0,
                coefficient: f64::INFINITY,
            };
            self.last_trigger = Some(trigger);
            self.enter_exploration(arm, trigger, t);
            return;
        }
        let rates = self.rates();
        let trigger = check_explore_conditions(
            &self.tables,
            &rates,
            self.config.cond1_coeff,
            self.config.cond2_coeff,
            t,
        );
        self.last_trigger = Some(trigger);
        match trigger.decision {
            PhaseDecision::Explore(arm) | PhaseDecision::ExploreGlobal(arm) => {
                self.enter_exploration(arm, trigger, t);
            }
            PhaseDecision::Exploit => self.enter_exploitation(),
        }
    }

    fn enter_exploration(&mut self, arm: usize, trigger: Trigger, t: u64) {
        let samples: u64 = (0..self.tables.num_global_states()).map(|s| self.tables.t[s][arm]).sum();
        let in_state = self.tables.t[trigger.state][arm];
        let ln_t = (t as f64).ln();
        let c = trigger.coefficient;
        let per_arm_test = matches!(trigger.decision, PhaseDecision::Explore(_));
        let effective = if per_arm_test && c.is_finite() && in_state > 0 {
            c * samples as f64 / in_state as f64
        } else if ln_t > 0.0 {
            samples as f64 / ln_t
        } else {
            f64::INFINITY
        };
        let stats = &mut self.stats;
        stats.effective_coeff[arm] = stats.effective_coeff[arm].max(effective);
        if per_arm_test && c.is_finite() {
            stats.literal_coeff[arm] = stats.literal_coeff[arm].max(c);
        }
        stats.exploration_phases[arm] += 1;
        self.sb1_len = 0;
        self.start_phase(Phase::Sb1 { arm }, Some(arm));
    }

    fn enter_exploitation(&mut self) {
        let ns = self.tables.num_global_states();
        let arms = self.tables.num_arms();
        match self.variant {
            Variant::Lemp | Variant::Dsee => {
                for s in 0..ns {
                    let v = (0..arms).map(|i| self.tables.v_hat(s, i).unwrap_or(f64::NEG_INFINITY));
                    self.exploit_map[s] = argmax_lowest(v).unwrap_or(0);
                }
            }
            Variant::AvgBest => {
                let total = self.tables.slots().max(1) as f64;
                let avg = (0..arms).map(|i| {
                    (0..ns)
                        .map(|s| {
                            let w = self.tables.n[s] as f64 / total;
                            w * self.tables.mu_hat(s, i).unwrap_or(0.0)
                        })
                        .sum::<f64>()
                });
                let best = argmax_lowest(avg).unwrap_or(0);
                self.exploit_map.iter_mut().for_each(|a| *a = best);
            }
        }
        self.n_i += 1;
        self.stats.exploitation_phases += 1;
        let remaining = self.exploit_length();
        self.start_phase(Phase::Exploit { remaining }, None);
    }
}

impl Policy for PhasePolicy {
    fn kind(&self) -> PolicyKind {
        match self.variant {
            Variant::Lemp => PolicyKind::Lemp,
            Variant::Dsee => PolicyKind::Dsee,
            Variant::AvgBest => PolicyKind::AvgBest,
        }
    }

    fn select(&mut self, ctx: DecisionContext) -> Result<usize, PolicyError> {
        if self.pending.is_some() {
            return Err(PolicyError::ProtocolViolation(format!(
                "slot {} selected again before its observation",
                self.next_slot
            )));
        }
        if ctx.slot != self.next_slot {
            return Err(PolicyError::ProtocolViolation(format!(
                "asked for slot {}, expected slot {}",
                ctx.slot, self.next_slot
            )));
        }
        if self.phase == (Phase::Init { next: 0 }) && self.trace.phases.is_empty() {
            self.start_phase(Phase::Init { next: 0 }, None);
        }
        if self.phase == Phase::Boundary {
            self.decide();
        }
        let arm = match self.phase {
            Phase::Init { next } => next,
            Phase::Sb1 { arm } | Phase::Sb2 { arm, .. } => arm,
            Phase::Exploit { .. } => {
                let s = self.tables.last_global().unwrap_or(ctx.last_global);
                self.exploit_map[s]
            }
            Phase::Boundary => unreachable!("decide() always leaves the boundary"),
        };
        if self.record_slots {
            self.trace.slots.push(SlotRecord {
                slot: self.next_slot,
                phase: self.phase.kind(),
                arm,
            });
        }
        self.pending = Some(arm);
        Ok(arm)
    }

    fn observe(&mut self, obs: &Observation) -> Result<(), PolicyError> {
        let Some(arm) = self.pending else {
            return Err(PolicyError::ProtocolViolation(format!(
                "observation for slot {} without a pending selection",
                obs.slot
            )));
        };
        if obs.slot != self.next_slot || obs.arm != arm {
            return Err(PolicyError::ProtocolViolation(format!(
                "stale observation: slot {} arm {}, expected slot {} arm {}",
                obs.slot, obs.arm, self.next_slot, arm
            )));
        }
        self.tables.observe_global(obs.global);
        if let Some(rec) = self.trace.phases.last_mut() {
            rec.length += 1;
        }

        match self.phase {
            Phase::Init { next } => {
                self.tables.record_sb2_sample(obs.global, arm, obs.reward, obs.local.index);
                self.gamma[arm] = Some(obs.local);
                self.n_o[arm] += 1;
                self.stats.exploration_phases[arm] += 1;
                self.stats.exploration_slots[arm] += 1;
                self.phase = if next + 1 == self.n_o.len() {
                    Phase::Boundary
                } else {
                    Phase::Init { next: next + 1 }
                };
            }
            Phase::Sb1 { arm } => {
                self.stats.exploration_slots[arm] += 1;
                self.sb1_len += 1;
                self.stats.max_sb1_len[arm] = self.stats.max_sb1_len[arm].max(self.sb1_len);
                if self.gamma[arm] == Some(obs.local) {
                    self.tables.record_sb2_sample(obs.global, arm, obs.reward, obs.local.index);
                    let remaining = self.sb2_length(arm);
                    self.next_slot += 1;
                    self.pending = None;
                    self.start_phase(Phase::Sb2 { arm, remaining }, Some(arm));
                    return Ok(());
                }
            }
            Phase::Sb2 { arm, remaining } => {
                self.stats.exploration_slots[arm] += 1;
                self.tables.record_sb2_sample(obs.global, arm, obs.reward, obs.local.index);
                if remaining == 1 {
                    self.gamma[arm] = Some(obs.local);
                    self.n_o[arm] += 1;
                    self.phase = Phase::Boundary;
                } else {
                    self.phase = Phase::Sb2 { arm, remaining: remaining - 1 };
                }
            }
            Phase::Exploit { remaining } => {
                self.phase = if remaining == 1 {
                    Phase::Boundary
                } else {
                    Phase::Exploit { remaining: remaining - 1 }
                };
            }
            Phase::Boundary => unreachable!("a slot is never played at a boundary"),
        }
        self.next_slot += 1;
        self.pending = None;
        Ok(())
    }

    fn phase_stats(&self) -> Option<PhaseStats> {
        Some(self.stats.clone())
    }

    fn trace(&self) -> Option<&PolicyTrace> {
        Some(&self.trace)
    }

    fn tables(&self) -> Option<&CountTables> {
        Some(&self.tables)
    }
}
