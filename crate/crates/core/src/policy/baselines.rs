use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DecisionContext, Policy, PolicyKind};
use crate::environment::Observation;
use crate::error::PolicyError;
use crate::scenario::TrueValues;

/// Knows every parameter and plays the arm of largest one-step value given
/// the last observed global state.
#[derive(Debug, Clone)]
pub struct GeniePolicy {
    values: TrueValues,
}

impl GeniePolicy {
    pub fn new(values: TrueValues) -> Self {
        Self { values }
    }
}

impl Policy for GeniePolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Genie
    }

    fn select(&mut self, ctx: DecisionContext) -> Result<usize, PolicyError> {
        self.values
            .best_arm
            .get(ctx.last_global)
            .copied()
            .ok_or_else(|| PolicyError::ProtocolViolation(format!("unknown global state {}", ctx.last_global)))
    }

    fn observe(&mut self, _obs: &Observation) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Mixes the policy seed so its stream differs from an environment stream
/// built from the same integer.
const STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Control baseline: uniformly random arm every slot.
#[derive(Debug, Clone)]
pub struct UniformRandomPolicy {
    arms: usize,
    rng: ChaCha8Rng,
}

impl UniformRandomPolicy {
    pub fn new(arms: usize, seed: u64) -> Self {
        Self {
            arms,
            rng: ChaCha8Rng::seed_from_u64(seed ^ STREAM_SALT),
        }
    }
}

impl Policy for UniformRandomPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::UniformRandom
    }

    fn select(&mut self, _ctx: DecisionContext) -> Result<usize, PolicyError> {
        Ok(self.rng.random_range(0..self.arms))
    }

    fn observe(&mut self, _obs: &Observation) -> Result<(), PolicyError> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::scenario::Scenario;

    #[test]
    fn genie_tracks_state() {
        let sc = Scenario::new(presets::s1_base()).unwrap();
        let mut g = GeniePolicy::new(sc.true_values().clone());
        assert_eq!(g.select(DecisionContext { slot: 1, last_global: 0 }).unwrap(), 0);
        assert_eq!(g.select(DecisionContext { slot: 2, last_global: 1 }).unwrap(), 1);
    }

    #[test]
    fn uniform_covers_all_arms() {
        let mut p = UniformRandomPolicy::new(4, 3);
        let mut seen = [0u32; 4];
        for slot in 1..=4000 {
            seen[p.select(DecisionContext { slot, last_global: 0 }).unwrap()] += 1;
        }
        assert!(seen.iter().all(|&c| c > 900 && c < 1100), "{seen:?}");
    }
}
