//! Closed-form constants, hardness parameters and the explicit part of the
//! regret upper bound.
//!
//! Everything here is computed from exact chain analyses and true values,
//! never from estimates.

use serde::{Deserialize, Serialize};

use crate::error::TheoryError;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConstants {
    pub x_max: f64,
    /// Largest local state space.
    pub x_card_max: usize,
    pub pi_min: f64,
    /// `max {pi(x), 1 - pi(x)}` over every local chain and state.
    pub pi_hat_max: f64,
    /// Largest second-eigenvalue modulus over local chains.
    pub lambda_max: f64,
    pub lambda_bar_min: f64,
    /// `m_max_per_state[i][s]`: largest off-diagonal mean hitting time.
    pub m_max_per_state: Vec<Vec<f64>>,
    pub m_max: Vec<f64>,
    pub v_star_max: f64,
    /// `delta_s_i[s][i] = (V*_s - V_s^i)^2`.
    pub delta_s_i: Vec<Vec<f64>>,
    /// Smallest squared gap of a suboptimal arm per state (`inf` if none).
    pub delta_s: Vec<f64>,
    pub delta: f64,
    pub global_pi: Vec<f64>,
    pub sigma: Vec<Vec<usize>>,
    pub num_arms: usize,
    pub num_global_states: usize,
}

pub fn compute_constants(scenario: &Scenario) -> Result<SystemConstants, TheoryError> {
    let ns = scenario.num_global_states();
    let n = scenario.num_arms();
    let tv = scenario.true_values();

    for s in 0..ns {
        let order = &tv.sigma[s];
        if n >= 2 && tv.v[s][order[0]] == tv.v[s][order[1]] {
            let (first, second) = (order[0].min(order[1]), order[0].max(order[1]));
            return Err(TheoryError::DegenerateGap { state: s, first, second });
        }
    }

    let mut x_card_max = 0;
    let mut pi_min = f64::INFINITY;
    let mut pi_hat_max: f64 = 0.0;
    let mut lambda_max: f64 = 0.0;
    let mut m_max_per_state = vec![vec![0.0; ns]; n];
    for i in 0..n {
        for s in 0..ns {
            let a = scenario.local_analysis(i, s);
            x_card_max = x_card_max.max(a.stationary.len());
            for &p in &a.stationary {
                pi_min = pi_min.min(p);
                pi_hat_max = pi_hat_max.max(p.max(1.0 - p));
            }
            lambda_max = lambda_max.max(a.second_eigenvalue_modulus);
            m_max_per_state[i][s] = a.max_hitting_time();
        }
    }
    let m_max = m_max_per_state
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .collect();

    let delta_s_i: Vec<Vec<f64>> = (0..ns)
        .map(|s| {
            let best = tv.best_value(s);
            (0..n).map(|i| (best - tv.v[s][i]).powi(2)).collect()
        })
        .collect();
    let delta_s: Vec<f64> = (0..ns)
        .map(|s| {
            (0..n)
                .filter(|&i| tv.is_suboptimal(s, i))
                .map(|i| delta_s_i[s][i])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let delta = delta_s.iter().copied().fold(f64::INFINITY, f64::min);

    Ok(SystemConstants {
        x_max: scenario.max_reward(),
        x_card_max,
        pi_min,
        pi_hat_max,
        lambda_max,
        lambda_bar_min: 1.0 - lambda_max,
        m_max_per_state,
        m_max,
        v_star_max: (0..ns).map(|s| tv.best_value(s)).fold(f64::NEG_INFINITY, f64::max),
        delta_s_i,
        delta_s,
        delta,
        global_pi: scenario.global_analysis().stationary.clone(),
        sigma: tv.sigma.clone(),
        num_arms: n,
        num_global_states: ns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCoefficients {
    pub i_l: f64,
    pub i_g: f64,
    pub l: f64,
    /// `2 / (eps^2 I_L)`.
    pub cond1_coeff: f64,
    /// `2 / (eps^2 I_G)`.
    pub cond2_coeff: f64,
}

pub fn condition_coefficients(c: &SystemConstants, epsilon: f64) -> ConditionCoefficients {
    let s = c.num_global_states as f64;
    let v2 = c.v_star_max + 2.0;
    let x2 = c.x_max + 2.0;
    let i_l = c.lambda_bar_min
        / (3072.0 * (x2 * x2 * c.x_card_max as f64 * c.pi_hat_max * s * v2).powi(2));
    let i_g = 1.0 / (128.0 * (x2 * s * v2).powi(2));
    let l = (1.0 / i_l).max(1.0 / i_g) / (16.0 * v2 * v2);
    ConditionCoefficients {
        i_l,
        i_g,
        l,
        cond1_coeff: 2.0 / (epsilon * epsilon * i_l),
        cond2_coeff: 2.0 / (epsilon * epsilon * i_g),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hardness {
    /// `4L / (V*_s - V_s^i)^2`; `None` for arms that are best in `s`.
    pub d_bar: Vec<Vec<Option<f64>>>,
    /// `4L / ((V*_s - V_s^i)^2 - 2 eps)` where the denominator is positive.
    pub d_bar_max: Vec<Vec<Option<f64>>>,
    /// Arms (not ranks) of each `K_s`, in decreasing value order.
    pub k_sets: Vec<Vec<usize>>,
    /// Coefficient `A_i` per arm.
    pub a: Vec<f64>,
    /// Arms that belong to every `K_s` but whose `max_s D_max` skipped
    /// states where it is undefined.
    pub partial_max_arms: Vec<usize>,
}

pub fn hardness(
    c: &SystemConstants,
    coeffs: &ConditionCoefficients,
    epsilon: f64,
) -> Result<Hardness, TheoryError> {
    if !(epsilon > 0.0) {
        return Err(TheoryError::NonPositiveEpsilon(epsilon));
    }
    let ns = c.num_global_states;
    let n = c.num_arms;
    let l4 = 4.0 * coeffs.l;
    let mut d_bar = vec![vec![None; n]; ns];
    let mut d_bar_max = vec![vec![None; n]; ns];
    let mut k_sets = vec![Vec::new(); ns];
    for s in 0..ns {
        for i in 0..n {
            let gap2 = c.delta_s_i[s][i];
            if gap2 > 0.0 {
                d_bar[s][i] = Some(l4 / gap2);
            }
            if gap2 - 2.0 * epsilon > 0.0 {
                d_bar_max[s][i] = Some(l4 / (gap2 - 2.0 * epsilon));
            }
        }
        for &i in c.sigma[s].iter().skip(1) {
            if c.delta_s_i[s][i] - 2.0 * epsilon > c.delta_s[s] {
                k_sets[s].push(i);
            }
        }
    }
    let base = coeffs.cond1_coeff.max(coeffs.cond2_coeff);
    let mut partial_max_arms = Vec::new();
    let a = (0..n)
        .map(|i| {
            if (0..ns).all(|s| k_sets[s].contains(&i)) {
                let defined: Vec<f64> = (0..ns).filter_map(|s| d_bar_max[s][i]).collect();
                if defined.len() < ns {
                    partial_max_arms.push(i);
                }
                base.max(defined.into_iter().fold(0.0, f64::max))
            } else {
                base.max(l4 / c.delta)
            }
        })
        .collect();
    Ok(Hardness { d_bar, d_bar_max, k_sets, a, partial_max_arms })
}

/// `ceil(log_4(3t/2 + 1))` in exact integer arithmetic: the smallest `k`
/// with `2 * 4^k >= 3t + 2`.
pub fn ceil_log4_exploit(t: u64) -> u32 {
    let target = 3u128 * t as u128 + 2;
    let mut k = 0;
    let mut p = 2u128;
    while p < target {
        p *= 4;
        k += 1;
    }
    k
}

/// Explicit part of the regret upper bound at time `t` for the coefficient
/// vector `a`. The additive constant term is not included.
pub fn regret_bound(c: &SystemConstants, a: &[f64], t: u64) -> f64 {
    let ln_t = (t.max(1) as f64).ln();
    let explore: f64 = a
        .iter()
        .zip(&c.m_max)
        .map(|(&ai, &m)| {
            let inner = 3.0 * ai * ln_t + 1.0;
            (4.0 * inner - 1.0) / 3.0 + m * inner.ln() / 4f64.ln()
        })
        .sum();
    let n = c.num_arms as f64;
    let s = c.num_global_states as f64;
    let pi_s_max = c.global_pi.iter().copied().fold(0.0, f64::max);
    let exploit = 6.0
        * n
        * s
        * (s * c.x_card_max as f64 / c.pi_min + 2.0 * s)
        * pi_s_max
        * ceil_log4_exploit(t) as f64;
    c.x_max * (explore + exploit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub t: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub i_l: f64,
    pub i_g: f64,
    pub l: f64,
    pub cond1_coeff: f64,
    pub cond2_coeff: f64,
    pub d_bar: Vec<Vec<Option<f64>>>,
    pub d_bar_max: Vec<Vec<Option<f64>>>,
    pub k_sets: Vec<Vec<usize>>,
    pub a: Vec<f64>,
    pub partial_max_arms: Vec<usize>,
    pub bound: Vec<BoundPoint>,
    /// Always true: the bound omits its additive constant.
    pub excludes_constant_term: bool,
    pub note: String,
}

impl BoundReport {
    pub fn new(c: &SystemConstants, epsilon: f64, ts: &[u64]) -> Result<Self, TheoryError> {
        if !(epsilon > 0.0) {
            return Err(TheoryError::NonPositiveEpsilon(epsilon));
        }
        let coeffs = condition_coefficients(c, epsilon);
        let h = hardness(c, &coeffs, epsilon)?;
        let bound = ts
            .iter()
            .map(|&t| BoundPoint { t, value: regret_bound(c, &h.a, t) })
            .collect();
        Ok(Self {
            epsilon,
            i_l: coeffs.i_l,
            i_g: coeffs.i_g,
            l: coeffs.l,
            cond1_coeff: coeffs.cond1_coeff,
            cond2_coeff: coeffs.cond2_coeff,
            d_bar: h.d_bar,
            d_bar_max: h.d_bar_max,
            k_sets: h.k_sets,
            a: h.a,
            partial_max_arms: h.partial_max_arms,
            bound,
            excludes_constant_term: true,
            note: "explicit terms only; the additive O(1) term is not computable and is excluded"
                .into(),
        })
    }
}
