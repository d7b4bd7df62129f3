//! Online counters and the plug-in estimators built on them.
//!
//! `T[s][i]` and `reward_sum[s][i]` only see samples attributed to
//! exploration sampling blocks (plus the initial round and the
//! regeneration-hit sample). `N[s]` and the transition counts see every
//! slot.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTables {
    /// `t[s][i]`: samples of arm `i` taken in global state `s`.
    pub t: Vec<Vec<u64>>,
    pub reward_sum: Vec<Vec<f64>>,
    /// `n[s]`: occurrences of global state `s`.
    pub n: Vec<u64>,
    /// `n_trans[s][k]`: observed transitions `s -> k`.
    pub n_trans: Vec<Vec<u64>>,
    last_global: Option<usize>,
    /// Local state indices of recorded samples per `(s, i)`, when enabled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sb2_log: Option<Vec<Vec<Vec<usize>>>>,
}

impl CountTables {
    pub fn new(num_global_states: usize, num_arms: usize) -> Self {
        Self {
            t: vec![vec![0; num_arms]; num_global_states],
            reward_sum: vec![vec![0.0; num_arms]; num_global_states],
            n: vec![0; num_global_states],
            n_trans: vec![vec![0; num_global_states]; num_global_states],
            last_global: None,
            sb2_log: None,
        }
    }

    pub fn with_sample_log(mut self) -> Self {
        let ns = self.n.len();
        let arms = self.num_arms();
        self.sb2_log = Some(vec![vec![Vec::new(); arms]; ns]);
        self
    }

    pub fn num_global_states(&self) -> usize {
        self.n.len()
    }

    pub fn num_arms(&self) -> usize {
        self.t.first().map_or(0, Vec::len)
    }

    pub fn last_global(&self) -> Option<usize> {
        self.last_global
    }

    /// Total number of global-state observations, i.e. slots seen.
    pub fn slots(&self) -> u64 {
        self.n.iter().sum()
    }

    /// Counts an observed global state: the first call seeds `N[s]`, later
    /// calls record the transition from the previously observed state.
    pub fn observe_global(&mut self, s: usize) {
        match self.last_global {
            None => {
                self.n[s] += 1;
                self.last_global = Some(s);
            }
            Some(prev) => self.record_global_transition(prev, s),
        }
    }

    pub fn record_global_transition(&mut self, s_prev: usize, s_next: usize) {
        self.n_trans[s_prev][s_next] += 1;
        self.n[s_next] += 1;
        self.last_global = Some(s_next);
    }

    pub fn record_sb2_sample(&mut self, s: usize, i: usize, reward: f64, local_index: usize) {
        self.t[s][i] += 1;
        self.reward_sum[s][i] += reward;
        if let Some(log) = self.sb2_log.as_mut() {
            log[s][i].push(local_index);
        }
    }

    pub fn mu_hat(&self, s: usize, i: usize) -> Option<f64> {
        let t = self.t[s][i];
        (t > 0).then(|| self.reward_sum[s][i] / t as f64)
    }

    pub fn p_hat(&self, s: usize, k: usize) -> Option<f64> {
        let n = self.n[s];
        (n > 0).then(|| self.n_trans[s][k] as f64 / n as f64)
    }

    pub fn v_hat(&self, s: usize, i: usize) -> Option<f64> {
        let ns = self.num_global_states();
        let mut v = 0.0;
        for k in 0..ns {
            v += self.p_hat(s, k)? * self.mu_hat(k, i)?;
        }
        Some(v)
    }

    /// Snapshot of every estimate.
    pub fn estimates(&self, rate: RateParams) -> EstimateView {
        let ns = self.num_global_states();
        let arms = self.num_arms();
        let mu_hat = (0..ns).map(|s| (0..arms).map(|i| self.mu_hat(s, i)).collect()).collect();
        let p_hat = (0..ns).map(|s| (0..ns).map(|k| self.p_hat(s, k)).collect()).collect();
        let v_hat: Vec<Vec<Option<f64>>> =
            (0..ns).map(|s| (0..arms).map(|i| self.v_hat(s, i)).collect()).collect();
        let d_hat = v_hat.iter().map(|row| rate_row(row, rate)).collect();
        EstimateView { mu_hat, p_hat, v_hat, d_hat }
    }

    /// Estimated local exploration rate of arm `i` in state `s`.
    pub fn d_hat(&self, s: usize, i: usize, rate: RateParams) -> f64 {
        let row: Vec<Option<f64>> = (0..self.num_arms()).map(|j| self.v_hat(s, j)).collect();
        rate_row(&row, rate)[i]
    }
}

/// Constants of the exploration-rate estimate `4L / max{delta, gap^2 - eps}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub l_eff: f64,
    pub delta_floor: f64,
    pub epsilon: f64,
}

/// Rates for one global state given the value estimates of all arms. Any
/// undefined value makes the whole row infinite.
fn rate_row(v_hat: &[Option<f64>], rate: RateParams) -> Vec<f64> {
    let defined: Option<Vec<f64>> = v_hat.iter().copied().collect();
    match defined {
        None => vec![f64::INFINITY; v_hat.len()],
        Some(v) => {
            let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            v.iter()
                .map(|&vi| {
                    let gap = best - vi;
                    4.0 * rate.l_eff / rate.delta_floor.max(gap * gap - rate.epsilon)
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateView {
    pub mu_hat: Vec<Vec<Option<f64>>>,
    pub p_hat: Vec<Vec<Option<f64>>>,
    pub v_hat: Vec<Vec<Option<f64>>>,
    /// `+inf` where some needed value estimate is undefined.
    pub d_hat: Vec<Vec<f64>>,
}

impl EstimateView {
    pub fn v_hat_star(&self, s: usize) -> Option<f64> {
        self.v_hat[s].iter().try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RATE: RateParams = RateParams {
        l_eff: 1.0,
        delta_floor: 0.16,
        epsilon: 0.05,
    };

    #[test]
    fn single_sample() {
        let mut t = CountTables::new(2, 3);
        t.record_sb2_sample(0, 1, 4.0, 0);
        assert_eq!(t.t[0][1], 1);
        assert_eq!(t.reward_sum[0][1], 4.0);
        assert_eq!(t.n, vec![0, 0]);
        t.record_sb2_sample(0, 1, 6.0, 1);
        assert_eq!(t.mu_hat(0, 1), Some(5.0));
    }

    #[test]
    fn mean_of_four() {
        let mut t = CountTables::new(1, 1);
        for r in [4.0, 6.0, 6.0, 4.0] {
            t.record_sb2_sample(0, 0, r, 0);
        }
        assert_eq!(t.mu_hat(0, 0), Some(5.0));
        assert_eq!(CountTables::new(1, 1).mu_hat(0, 0), None);
    }

    #[test]
    fn transitions() {
        let mut t = CountTables::new(3, 1);
        for s in [0, 1, 0, 1] {
            t.observe_global(s);
        }
        assert_eq!(t.p_hat(0, 1), Some(1.0));
        // the last visit to 1 has no outgoing transition yet
        assert_eq!(t.p_hat(1, 0), Some(0.5));
        assert_eq!(t.p_hat(2, 0), None);
        assert_eq!(t.slots(), 4);
    }

    #[test]
    fn explicit_transitions_example() {
        let mut t = CountTables::new(2, 1);
        t.observe_global(0);
        t.record_global_transition(0, 1);
        t.record_global_transition(1, 0);
        t.record_global_transition(0, 1);
        assert_eq!(t.p_hat(0, 1), Some(1.0));
        assert_eq!(t.p_hat(1, 0), Some(0.5));
    }

    fn seeded(v_gap: f64) -> CountTables {
        // one global state, p_hat = 1 once it was observed twice
        let mut t = CountTables::new(1, 2);
        t.observe_global(0);
        t.observe_global(0);
        t.record_sb2_sample(0, 0, 10.0, 0);
        t.record_sb2_sample(0, 1, 10.0 - v_gap, 0);
        t
    }

    #[test]
    fn d_hat_floor_on_best_arm() {
        let t = seeded(0.4);
        // p_hat(0,0) = 1/2 because the last visit has no transition yet
        assert!((t.d_hat(0, 0, RATE) - 4.0 / 0.16).abs() < 1e-12);
    }

    #[test]
    fn d_hat_direct_evaluation() {
        let mut t = CountTables::new(1, 2);
        t.observe_global(0);
        t.observe_global(0);
        t.observe_global(0);
        // p_hat = 2/3; choose samples so that the value gap is exactly 0.4
        t.record_sb2_sample(0, 0, 0.6, 0);
        t.record_sb2_sample(0, 1, 0.0, 0);
        let gap = t.v_hat(0, 0).unwrap() - t.v_hat(0, 1).unwrap();
        assert!((gap - 0.4).abs() < 1e-12);
        // max{0.16, 0.16 - 0.05} = 0.16 -> 25
        assert!((t.d_hat(0, 1, RATE) - 25.0).abs() < 1e-9);
    }

    #[test]
    fn d_hat_infinite_when_undefined() {
        let mut t = CountTables::new(2, 2);
        t.observe_global(0);
        t.observe_global(1);
        t.record_sb2_sample(0, 0, 1.0, 0);
        t.record_sb2_sample(1, 0, 1.0, 0);
        t.record_sb2_sample(0, 1, 1.0, 0);
        assert_eq!(t.d_hat(0, 0, RATE), f64::INFINITY);
        assert!(t.estimates(RATE).d_hat.iter().flatten().all(|d| d.is_infinite()));
    }

    #[test]
    fn view_is_consistent() {
        let mut t = CountTables::new(2, 2);
        for (k, s) in [0, 1, 1, 0, 1, 0, 0].into_iter().enumerate() {
            t.observe_global(s);
            t.record_sb2_sample(s, k % 2, 1.0 + k as f64, 0);
        }
        let view = t.estimates(RATE);
        for s in 0..2 {
            for i in 0..2 {
                let v: f64 = (0..2).map(|k| view.p_hat[s][k].unwrap() * view.mu_hat[k][i].unwrap()).sum();
                assert_eq!(view.v_hat[s][i], Some(v));
            }
        }
        assert!(view.v_hat_star(0).is_some());
    }
}
