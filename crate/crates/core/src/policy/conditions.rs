use serde::{Deserialize, Serialize};

use crate::estimators::CountTables;
use crate::scenario::argmax_lowest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseDecision {
    /// Some arm is under-sampled in some global state.
    Explore(usize),
    /// Some global state is under-visited; explore the arm with the
    /// smallest estimated rate.
    ExploreGlobal(usize),
    Exploit,
}

/// A decision together with the test that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trigger {
    pub decision: PhaseDecision,
    /// Global state whose test fired (meaningless for `Exploit`).
    pub state: usize,
    /// Coefficient of `ln t` in the test that fired; `+inf` when a rate
    /// estimate was undefined.
    pub coefficient: f64,
}

fn below(count: u64, coefficient: f64, ln_t: f64) -> bool {
    // an infinite coefficient always fires, even at ln t = 0
    coefficient == f64::INFINITY || count as f64 <= coefficient * ln_t
}

/// Phase-boundary test at time `t` (slots elapsed) with natural logarithm.
///
/// Per-arm test: `T[s][i] <= max{rate[s][i], cond1} * ln t`. Among the arms
/// for which some state fires, arms that have no sample at all in an
/// already visited state go first; otherwise the lowest arm index wins.
/// Global test: `N[s] <= cond2 * ln t`, exploring
/// `argmin_i min_s rate[s][i]`.
pub fn check_explore_conditions(
    tables: &CountTables,
    rates: &[Vec<f64>],
    cond1_coeff: f64,
    cond2_coeff: f64,
    t: u64,
) -> Trigger {
    check_explore_conditions_ln(tables, rates, cond1_coeff, cond2_coeff, (t.max(1) as f64).ln())
}

/// [`check_explore_conditions`] with `ln t` supplied directly.
pub fn check_explore_conditions_ln(
    tables: &CountTables,
    rates: &[Vec<f64>],
    cond1_coeff: f64,
    cond2_coeff: f64,
    ln_t: f64,
) -> Trigger {
    let ns = tables.num_global_states();
    let arms = tables.num_arms();
    let coefficient = |s: usize, i: usize| rates[s][i].max(cond1_coeff);

    for i in 0..arms {
        if let Some(s) = (0..ns).find(|&s| tables.n[s] > 0 && tables.t[s][i] == 0) {
            return Trigger {
                decision: PhaseDecision::Explore(i),
                state: s,
                coefficient: coefficient(s, i),
            };
        }
    }
    for i in 0..arms {
        if let Some(s) = (0..ns).find(|&s| below(tables.t[s][i], coefficient(s, i), ln_t)) {
            return Trigger {
                decision: PhaseDecision::Explore(i),
                state: s,
                coefficient: coefficient(s, i),
            };
        }
    }
    if let Some(s) = (0..ns).find(|&s| below(tables.n[s], cond2_coeff, ln_t)) {
        let min_rate = (0..arms).map(|i| (0..ns).map(|s| rates[s][i]).fold(f64::INFINITY, f64::min));
        // argmin == argmax of the negation; lowest index on ties
        let i_m = argmax_lowest(min_rate.map(|r| -r)).unwrap_or(0);
        return Trigger {
            decision: PhaseDecision::ExploreGlobal(i_m),
            state: s,
            coefficient: cond2_coeff,
        };
    }
    Trigger {
        decision: PhaseDecision::Exploit,
        state: 0,
        coefficient: 0.0,
    }
}
