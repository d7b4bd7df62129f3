//! The four built-in scenarios.
//!
//! Global state labels 1, 2, 3 of the published parameter tables map to
//! indices 0, 1, 2; local states 1, 2 map to 0, 1. Each arm's parameters
//! are given as `p11` (stay in local state 1) and `p21` (move from local
//! state 2 to 1) together with the rewards of local states 1 and 2.

use crate::markov::StochasticMatrix;
use crate::scenario::{LocalChain, ScenarioModel, SwitchMode};

struct StateTable<'a> {
    p11: &'a [f64],
    p21: &'a [f64],
    r1: &'a [f64],
    r2: &'a [f64],
}

fn build(name: &str, global: Vec<Vec<f64>>, tables: &[StateTable<'_>]) -> ScenarioModel {
    let arms = tables[0].p11.len();
    let arms = (0..arms)
        .map(|i| {
            tables
                .iter()
                .map(|t| LocalChain::two_state(t.p11[i], t.p21[i], t.r1[i], t.r2[i]))
                .collect()
        })
        .collect();
    ScenarioModel {
        name: name.to_string(),
        global: StochasticMatrix::new(global).expect("square preset"),
        arms,
        switch_mode: SwitchMode::StationaryRedraw,
    }
}

fn two_state_global() -> Vec<Vec<f64>> {
    // p00 = 0.4, p10 = 0.75
    vec![vec![0.4, 0.6], vec![0.75, 0.25]]
}

const P11_A: [f64; 3] = [0.5, 0.6, 0.7];
const P21_A: [f64; 3] = [0.5, 0.4, 0.3];
const P11_B: [f64; 3] = [0.55, 0.65, 0.75];
const P21_B: [f64; 3] = [0.45, 0.35, 0.25];

pub fn s1_base() -> ScenarioModel {
    build(
        "s1-base",
        two_state_global(),
        &[
            StateTable { p11: &P11_A, p21: &P21_A, r1: &[4.0, 5.8, 1.0], r2: &[6.0, 8.2, 2.0] },
            StateTable { p11: &P11_B, p21: &P21_B, r1: &[10.0, 9.0, 2.5], r2: &[14.0, 11.0, 3.0] },
        ],
    )
}

pub fn s2_sixarms() -> ScenarioModel {
    build(
        "s2-sixarms",
        two_state_global(),
        &[
            StateTable {
                p11: &[0.5, 0.6, 0.7, 0.7, 0.6, 0.5],
                p21: &[0.5, 0.4, 0.3, 0.3, 0.4, 0.5],
                r1: &[4.0, 5.8, 1.0, 1.1, 0.6, 1.2],
                r2: &[6.0, 8.2, 2.0, 1.9, 0.9, 2.2],
            },
            StateTable {
                p11: &[0.55, 0.65, 0.75, 0.75, 0.65, 0.55],
                p21: &[0.45, 0.35, 0.25, 0.25, 0.35, 0.45],
                r1: &[10.0, 9.0, 2.5, 3.0, 2.56, 2.7],
                r2: &[14.0, 11.0, 3.0, 2.8, 3.1, 3.3],
            },
        ],
    )
}

pub fn s3_threestates() -> ScenarioModel {
    build(
        "s3-threestates",
        vec![
            vec![0.85, 0.1, 0.05],
            vec![0.08, 0.85, 0.07],
            vec![0.06, 0.09, 0.85],
        ],
        &[
            StateTable { p11: &P11_A, p21: &P21_A, r1: &[4.0, 1.0, 1.2], r2: &[6.0, 3.0, 1.8] },
            StateTable { p11: &P11_B, p21: &P21_B, r1: &[5.0, 9.0, 4.5], r2: &[7.0, 11.0, 8.5] },
            StateTable {
                p11: &[0.52, 0.62, 0.72],
                p21: &[0.48, 0.38, 0.28],
                r1: &[9.9, 9.5, 14.0],
                r2: &[10.3, 11.5, 16.0],
            },
        ],
    )
}

/// Same as `s1-base` except arm 2's second reward in global state 1 is 9.2.
pub fn s4_smallgap() -> ScenarioModel {
    build(
        "s4-smallgap",
        two_state_global(),
        &[
            StateTable { p11: &P11_A, p21: &P21_A, r1: &[4.0, 5.8, 1.0], r2: &[6.0, 9.2, 2.0] },
            StateTable { p11: &P11_B, p21: &P21_B, r1: &[10.0, 9.0, 2.5], r2: &[14.0, 11.0, 3.0] },
        ],
    )
}

pub fn builtin_scenarios() -> Vec<ScenarioModel> {
    vec![s1_base(), s2_sixarms(), s3_threestates(), s4_smallgap()]
}

pub fn builtin(name: &str) -> Option<ScenarioModel> {
    builtin_scenarios().into_iter().find(|m| m.name == name)
}
