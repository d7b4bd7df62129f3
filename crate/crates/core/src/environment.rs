//! Slot-by-slot simulation of a scenario.
//!
//! At slot `t` the player picks an arm without knowing the current global
//! state `s_t`. The step reveals the chosen arm's reward and local state,
//! hence `s_t`. Afterwards the global chain moves first and every arm's
//! local chain moves next, whether played or not.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::EnvError;
use crate::markov::sample_index;
use crate::scenario::{Scenario, SwitchMode};

/// Identity of a local state: local chains of one arm under different
/// global states are disjoint, so the global state is part of the id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalStateId {
    pub global: usize,
    pub arm: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum InitMode {
    /// Global state from the global stationary law, local states from the
    /// stationary law of their chain under that global state.
    #[default]
    Stationary,
    Fixed { global: usize, local: usize },
}

/// What the player sees after playing a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub slot: u64,
    pub arm: usize,
    pub reward: f64,
    pub local: LocalStateId,
    pub global: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    slot: u64,
    global: usize,
    locals: Vec<usize>,
    rng: ChaCha8Rng,
    all_rewards: Vec<f64>,
}

impl EnvState {
    pub fn reset(scenario: &Scenario, seed: u64, init: InitMode) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = scenario.num_arms();
        let (global, locals) = match init {
            InitMode::Stationary => {
                let g = sample_index(&scenario.global_analysis().stationary, rng.random());
                let locals = (0..n)
                    .map(|i| sample_index(&scenario.local_analysis(i, g).stationary, rng.random()))
                    .collect();
                (g, locals)
            }
            InitMode::Fixed { global, local } => {
                let g = global.min(scenario.num_global_states() - 1);
                let locals = (0..n)
                    .map(|i| local.min(scenario.local(i, g).rewards.len() - 1))
                    .collect();
                (g, locals)
            }
        };
        Self {
            slot: 1,
            global,
            locals,
            rng,
            all_rewards: vec![0.0; n],
        }
    }

    /// Index of the slot about to be played.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Global state of the slot about to be played. Hidden from policies.
    pub fn global(&self) -> usize {
        self.global
    }

    pub fn locals(&self) -> &[usize] {
        &self.locals
    }

    /// Every arm's reward in the most recently played slot. Harness-only.
    pub fn all_rewards(&self) -> &[f64] {
        &self.all_rewards
    }

    /// Plays `arm` in the current slot and advances all chains.
    pub fn step(&mut self, scenario: &Scenario, arm: usize) -> Result<Observation, EnvError> {
        let n = scenario.num_arms();
        if arm >= n {
            return Err(EnvError::InvalidArm { arm, arms: n });
        }
        let s = self.global;
        for (i, r) in self.all_rewards.iter_mut().enumerate() {
            *r = scenario.local(i, s).rewards[self.locals[i]];
        }
        let obs = Observation {
            slot: self.slot,
            arm,
            reward: self.all_rewards[arm],
            local: LocalStateId {
                global: s,
                arm,
                index: self.locals[arm],
            },
            global: s,
        };

        let next = scenario.model().global.sample_next(s, &mut self.rng);
        let mode = scenario.model().switch_mode;
        for (i, x) in self.locals.iter_mut().enumerate() {
            let u: f64 = self.rng.random();
            *x = if next == s {
                sample_index(scenario.local(i, s).transitions.row(*x), u)
            } else {
                match mode {
                    SwitchMode::StationaryRedraw => {
                        sample_index(&scenario.local_analysis(i, next).stationary, u)
                    }
                    SwitchMode::IndexCarryover => *x,
                }
            };
        }
        self.global = next;
        self.slot += 1;
        Ok(obs)
    }
}
