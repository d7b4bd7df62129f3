//! Scenario models: a global chain modulating per-arm local reward chains.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ModelError};
use crate::markov::{ChainAnalysis, StochasticMatrix};

/// What a local chain does when the global state changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchMode {
    /// Draw a fresh local state from the stationary law of the new chain.
    #[default]
    StationaryRedraw,
    /// Keep the local index and continue under the new chain.
    IndexCarryover,
}

impl std::str::FromStr for SwitchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stationary-redraw" => Ok(Self::StationaryRedraw),
            "index-carryover" => Ok(Self::IndexCarryover),
            other => Err(format!("unknown switch mode {other:?}")),
        }
    }
}

/// One arm under one global state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalChain {
    pub transitions: StochasticMatrix,
    /// Reward attached to each local state.
    pub rewards: Vec<f64>,
}

impl LocalChain {
    /// Two-state local chain in the `p11` / `p21` parameterization.
    pub fn two_state(p11: f64, p21: f64, r1: f64, r2: f64) -> Self {
        Self {
            transitions: StochasticMatrix::two_state(p11, p21),
            rewards: vec![r1, r2],
        }
    }
}

/// Ground-truth description of a restless bandit instance.
///
/// `arms[i][s]` is arm `i`'s local chain while the global state is `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioModel {
    pub name: String,
    pub global: StochasticMatrix,
    pub arms: Vec<Vec<LocalChain>>,
    #[serde(default)]
    pub switch_mode: SwitchMode,
}

impl ScenarioModel {
    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn num_global_states(&self) -> usize {
        self.global.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.global.validate().map_err(ModelError::Global)?;
        if self.arms.is_empty() {
            return Err(ModelError::NoArms);
        }
        let ns = self.num_global_states();
        for (arm, per_state) in self.arms.iter().enumerate() {
            if per_state.len() != ns {
                return Err(ModelError::StateCount {
                    arm,
                    got: per_state.len(),
                    expected: ns,
                });
            }
            for (state, local) in per_state.iter().enumerate() {
                local
                    .transitions
                    .validate()
                    .map_err(|source| ModelError::Local { arm, state, source })?;
                if local.rewards.len() != local.transitions.len() {
                    return Err(ModelError::RewardCount {
                        arm,
                        state,
                        got: local.rewards.len(),
                        expected: local.transitions.len(),
                    });
                }
                if let Some(&value) = local.rewards.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
                    return Err(ModelError::NonPositiveReward { arm, state, value });
                }
            }
            if self.switch_mode == SwitchMode::IndexCarryover
                && per_state.iter().any(|l| l.transitions.len() != per_state[0].transitions.len())
            {
                return Err(ModelError::CarryoverCardinality { arm });
            }
        }
        Ok(())
    }

    /// Multiplies every reward by `factor`.
    pub fn scaled_rewards(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for local in out.arms.iter_mut().flatten() {
            for r in &mut local.rewards {
                *r *= factor;
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Parse(format!("{}: {e}", path.display())))?;
        Ok(Self::from_json(&text)?)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }
}

/// Exact stationary means and one-step values.
///
/// `mu[s][i]` is arm `i`'s stationary mean reward under global state `s`;
/// `v[s][i] = sum_k P_S[s][k] * mu[k][i]` is its expected reward in the
/// slot after global state `s` was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueValues {
    pub mu: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub best_arm: Vec<usize>,
    /// Arms ordered by decreasing value per global state.
    pub sigma: Vec<Vec<usize>>,
}

impl TrueValues {
    pub fn best_value(&self, s: usize) -> f64 {
        self.v[s][self.best_arm[s]]
    }

    /// True when arm `i` is strictly worse than the best arm in state `s`.
    pub fn is_suboptimal(&self, s: usize, i: usize) -> bool {
        self.v[s][i] < self.best_value(s)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax_lowest(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((k, v)),
        }
    }
    best.map(|(k, _)| k)
}

/// Arm indices sorted by decreasing value, lower index first on ties.
pub fn order_by_value(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// A validated scenario with every chain analysed.
#[derive(Debug, Clone)]
pub struct Scenario {
    model: ScenarioModel,
    global: ChainAnalysis,
    /// `locals[i][s]`
    locals: Vec<Vec<ChainAnalysis>>,
    values: TrueValues,
}

impl Scenario {
    pub fn new(model: ScenarioModel) -> Result<Self, ModelError> {
        model.validate()?;
        let global = ChainAnalysis::of(&model.global).map_err(ModelError::Global)?;
        let mut locals = Vec::with_capacity(model.num_arms());
        for (arm, per_state) in model.arms.iter().enumerate() {
            let mut row = Vec::with_capacity(per_state.len());
            for (state, local) in per_state.iter().enumerate() {
                row.push(
                    ChainAnalysis::of(&local.transitions)
                        .map_err(|source| ModelError::Local { arm, state, source })?,
                );
            }
            locals.push(row);
        }
        let values = compute_true_values(&model, &locals);
        Ok(Self {
            model,
            global,
            locals,
            values,
        })
    }

    pub fn model(&self) -> &ScenarioModel {
        &self.model
    }

    pub fn name(&self) -> &str {
        &self.model.name
    }

    pub fn num_arms(&self) -> usize {
        self.model.num_arms()
    }

    pub fn num_global_states(&self) -> usize {
        self.model.num_global_states()
    }

    pub fn global_analysis(&self) -> &ChainAnalysis {
        &self.global
    }

    pub fn local_analysis(&self, arm: usize, state: usize) -> &ChainAnalysis {
        &self.locals[arm][state]
    }

    pub fn local(&self, arm: usize, state: usize) -> &LocalChain {
        &self.model.arms[arm][state]
    }

    pub fn true_values(&self) -> &TrueValues {
        &self.values
    }

    pub fn max_reward(&self) -> f64 {
        self.model
            .arms
            .iter()
            .flatten()
            .flat_map(|l| l.rewards.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Stationary means and one-step values of every arm.
pub fn true_values(model: &ScenarioModel) -> Result<TrueValues, ModelError> {
    Ok(Scenario::new(model.clone())?.values)
}

fn compute_true_values(model: &ScenarioModel, locals: &[Vec<ChainAnalysis>]) -> TrueValues {
    let ns = model.num_global_states();
    let n = model.num_arms();
    let mu: Vec<Vec<f64>> = (0..ns)
        .map(|s| {
            (0..n)
                .map(|i| {
                    let rewards = &model.arms[i][s].rewards;
                    let pi = &locals[i][s].stationary;
                    rewards.iter().zip(pi).map(|(r, p)| r * p).sum()
                })
                .collect()
        })
        .collect();
    let v: Vec<Vec<f64>> = (0..ns)
        .map(|s| {
            (0..n)
                .map(|i| (0..ns).map(|k| model.global.get(s, k) * mu[k][i]).sum())
                .collect()
        })
        .collect();
    let best_arm = v.iter().map(|row| argmax_lowest(row.iter().copied()).unwrap_or(0)).collect();
    let sigma = v.iter().map(|row| order_by_value(row)).collect();
    TrueValues { mu, v, best_arm, sigma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn s1_true_values() {
        let tv = true_values(&presets::s1_base()).unwrap();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(&tv.mu[0], &[5.0, 7.0, 1.5]));
        assert!(close(&tv.v[0], &[9.2, 8.8, 2.25]));
        assert!(close(&tv.v[1], &[6.75, 7.75, 1.8125]));
        assert_eq!(tv.best_arm, vec![0, 1]);
        assert_eq!(tv.sigma[1], vec![1, 0, 2]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        assert_eq!(argmax_lowest([1.0, 3.0, 3.0]), Some(1));
        assert_eq!(order_by_value(&[2.0, 5.0, 5.0, 1.0]), vec![1, 2, 0, 3]);
        assert_eq!(argmax_lowest(std::iter::empty()), None);
    }

    #[test]
    fn rejects_non_positive_reward() {
        let mut m = presets::s1_base();
        m.arms[2][1].rewards[0] = 0.0;
        assert!(matches!(m.validate(), Err(ModelError::NonPositiveReward { arm: 2, state: 1, .. })));
    }

    #[test]
    fn rejects_reducible_local_chain() {
        let mut m = presets::s1_base();
        m.arms[1][0].transitions = StochasticMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let err = m.validate().unwrap_err();
        assert!(err.to_string().contains("Reducible"), "{err}");
    }

    #[test]
    fn rejects_row_sum_in_file() {
        let mut m = presets::s1_base();
        m.global = StochasticMatrix::new(vec![vec![0.4, 0.5], vec![0.75, 0.25]]).unwrap();
        let m = ScenarioModel::from_json(&m.to_json()).unwrap();
        assert!(m.validate().unwrap_err().to_string().contains("RowNotStochastic"));
    }

    #[test]
    fn json_layout() {
        let json: serde_json::Value = serde_json::from_str(&presets::s1_base().to_json()).unwrap();
        assert_eq!(json["global"][0][0], 0.4);
        assert_eq!(json["arms"][1][0]["rewards"][1], 8.2);
        assert_eq!(json["arms"][0][1]["transitions"][1][0], 0.45);
        assert_eq!(json["switch_mode"], "stationary-redraw");
    }
}
