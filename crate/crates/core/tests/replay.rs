//! Regret accounting checked against an independent replay of each run.

use lemp_core::environment::{EnvState, InitMode};
use lemp_core::harness::{run_single, Experiment, ExperimentSpec};
use lemp_core::presets::builtin_scenarios;
use lemp_core::{PolicyKind, Scenario};

/// Replays the recorded arm sequence on a fresh environment with the same
/// seed and recomputes the regret curve from the value table.
fn replay(sc: &Scenario, seed: u64, arms: &[usize], grid: &[u64]) -> Vec<f64> {
    let v = &sc.true_values().v;
    let mut env = EnvState::reset(sc, seed, InitMode::Stationary);
    let mut context = env.global();
    let mut total = 0.0;
    let mut curve = Vec::new();
    for (k, &arm) in arms.iter().enumerate() {
        let obs = env.step(sc, arm).unwrap();
        let row = &v[context];
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if row[arm] < best {
            let genie = row.iter().position(|&x| x == best).unwrap();
            total += env.all_rewards()[genie] - obs.reward;
        }
        context = obs.global;
        if grid.contains(&(k as u64 + 1)) {
            curve.push(total);
        }
    }
    curve
}

#[test]
fn regret_matches_independent_replay() {
    for model in builtin_scenarios() {
        for kind in [PolicyKind::Lemp, PolicyKind::Dsee, PolicyKind::AvgBest] {
            let mut spec = ExperimentSpec::new(model.name.clone(), vec![kind], 20_000, 1, 5);
            spec.record_slots = true;
            let exp = Experiment::new(spec).unwrap();
            for seed in [1, 2] {
                let run = run_single(&exp, kind, seed).unwrap();
                let arms: Vec<usize> = run.trace.unwrap().slots.iter().map(|s| s.arm).collect();
                assert_eq!(arms.len(), 20_000);
                let curve = replay(&exp.scenario, seed, &arms, &exp.grid);
                assert_eq!(curve, run.regret, "{} {kind} seed {seed}", model.name);
            }
        }
    }
}

#[test]
fn uniform_random_regret_is_linear_and_far_above_lemp() {
    let exp = Experiment::new(ExperimentSpec::new(
        "s1-base",
        vec![PolicyKind::Lemp, PolicyKind::UniformRandom],
        10_000,
        1,
        0,
    ))
    .unwrap();
    let mean_final = |kind| {
        (0..20)
            .map(|seed| *run_single(&exp, kind, seed).unwrap().regret.last().unwrap())
            .sum::<f64>()
            / 20.0
    };
    let lemp = mean_final(PolicyKind::Lemp) / 10_000.0;
    let unif = mean_final(PolicyKind::UniformRandom) / 10_000.0;
    assert!(unif > 0.5, "uniform per-slot regret {unif}");
    assert!(unif >= 5.0 * lemp, "uniform {unif} vs lemp {lemp}");
}

#[test]
fn genie_regret_is_zero_on_every_preset() {
    for model in builtin_scenarios() {
        let exp = Experiment::new(ExperimentSpec::new(model.name.clone(), vec![PolicyKind::Genie], 10_000, 1, 0)).unwrap();
        let r = run_single(&exp, PolicyKind::Genie, 4).unwrap();
        assert!(r.regret.iter().all(|&x| x == 0.0), "{}", model.name);
    }
}

#[test]
fn fixed_start_and_carryover_runs_complete() {
    let mut spec = ExperimentSpec::new("s3-threestates", vec![PolicyKind::Lemp], 20_000, 1, 0);
    spec.init = InitMode::Fixed { global: 2, local: 1 };
    spec.switch_mode = Some(lemp_core::SwitchMode::IndexCarryover);
    let exp = Experiment::new(spec).unwrap();
    let r = run_single(&exp, PolicyKind::Lemp, 9).unwrap();
    assert_eq!(r.regret.len(), exp.grid.len());
    assert!(r.assertions_checked > 0);
}
