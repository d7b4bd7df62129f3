//! Seeded Monte Carlo experiments.
//!
//! Every run drives one environment trajectory with one fresh policy. The
//! regret of slot `n` compares the realized reward of the genie's arm with
//! the learner's arm on the same sample path, and counts only when the
//! learner's arm is strictly value-suboptimal for the last observed global
//! state. Run `k` of every policy uses seed `base_seed + k`, so policies are
//! compared on common random numbers.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{EnvState, InitMode};
use crate::error::{Error, Result};
use crate::estimators::CountTables;
use crate::policy::{make_policy, DecisionContext, LempConfig, PhaseStats, PolicyKind, PolicyTrace};
use crate::presets;
use crate::scenario::{Scenario, ScenarioModel, SwitchMode};
use crate::theory::{ceil_log4_exploit, compute_constants, SystemConstants};

/// Number of points of the default logging grid.
pub const DEFAULT_GRID_POINTS: usize = 64;

/// Relative slack for floating-point comparisons in the assertions.
const ASSERT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConfigOverrides {
    pub epsilon: Option<f64>,
    pub delta_floor: Option<f64>,
    pub l_eff: Option<f64>,
    pub cond1_coeff: Option<f64>,
    pub cond2_coeff: Option<f64>,
    pub growth_base: Option<u64>,
    pub exploit_multiplier: Option<u64>,
    /// Start from the closed-form constants instead of the calibrated ones.
    pub theoretical: bool,
}

impl ConfigOverrides {
    pub fn apply(&self, constants: &SystemConstants) -> LempConfig {
        let mut c = if self.theoretical {
            LempConfig::theoretical(constants, self.epsilon.unwrap_or(crate::policy::CALIBRATED_EPSILON))
        } else {
            LempConfig::calibrated(constants)
        };
        if let Some(v) = self.epsilon {
            c.epsilon = v;
        }
        if let Some(v) = self.delta_floor {
            c.delta_floor = v;
        }
        if let Some(v) = self.l_eff {
            c.l_eff = v;
        }
        if let Some(v) = self.cond1_coeff {
            c.cond1_coeff = v;
        }
        if let Some(v) = self.cond2_coeff {
            c.cond2_coeff = v;
        }
        if let Some(v) = self.growth_base {
            c.growth_base = v;
        }
        if let Some(v) = self.exploit_multiplier {
            c.exploit_multiplier = v;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssertionToggles {
    /// `n_I(t) <= ceil(log_4(3t/2 + 1))`.
    pub exploitation_count: bool,
    /// Exploration-slot and exploration-count bounds per arm.
    pub exploration_slots: bool,
    /// `|r(t)| <= x_max * t`.
    pub regret_range: bool,
}

impl Default for AssertionToggles {
    fn default() -> Self {
        Self {
            exploitation_count: true,
            exploration_slots: true,
            regret_range: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Preset name or path of a scenario JSON file.
    pub scenario: String,
    pub policies: Vec<PolicyKind>,
    pub horizon: u64,
    pub runs: usize,
    pub base_seed: u64,
    /// Slots after which regret is logged; default geometric grid if absent.
    #[serde(default)]
    pub log_grid: Option<Vec<u64>>,
    #[serde(default)]
    pub switch_mode: Option<SwitchMode>,
    #[serde(default)]
    pub init: InitMode,
    #[serde(default)]
    pub config: ConfigOverrides,
    #[serde(default)]
    pub assertions: AssertionToggles,
    /// Keep per-slot arm records in each run's trace.
    #[serde(default)]
    pub record_slots: bool,
}

impl ExperimentSpec {
    pub fn new(scenario: impl Into<String>, policies: Vec<PolicyKind>, horizon: u64, runs: usize, base_seed: u64) -> Self {
        Self {
            scenario: scenario.into(),
            policies,
            horizon,
            runs,
            base_seed,
            log_grid: None,
            switch_mode: None,
            init: InitMode::Stationary,
            config: ConfigOverrides::default(),
            assertions: AssertionToggles::default(),
            record_slots: false,
        }
    }
}

/// Preset name first, then a file path.
pub fn resolve_scenario(name: &str) -> Result<ScenarioModel> {
    if let Some(m) = presets::builtin(name) {
        return Ok(m);
    }
    let path = PathBuf::from(name);
    if path.is_file() {
        return ScenarioModel::load(&path);
    }
    Err(Error::UnknownScenario(name.to_string()))
}

/// Geometric grid of `points` distinct slot indices from 2 to `horizon`
/// (fewer when the range is too short). Rounded points that collide are
/// pushed up by one slot, and `horizon` is always the last point.
pub fn geometric_grid(horizon: u64, points: usize) -> Vec<u64> {
    if horizon <= 2 || points < 2 {
        return vec![horizon.max(1)];
    }
    let points = points.min((horizon - 1) as usize);
    let ratio = horizon as f64 / 2.0;
    let last = points - 1;
    let mut grid = Vec::with_capacity(points);
    let mut prev = 1;
    for k in 0..last {
        let x = (2.0 * ratio.powf(k as f64 / last as f64)).round() as u64;
        // leave room for the remaining points below the horizon
        let v = x.max(prev + 1).min(horizon - (last - k) as u64);
        grid.push(v);
        prev = v;
    }
    grid.push(horizon);
    grid
}

/// A validated experiment ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub scenario: Scenario,
    pub constants: SystemConstants,
    pub config: LempConfig,
    pub grid: Vec<u64>,
}

impl Experiment {
    pub fn new(spec: ExperimentSpec) -> Result<Self> {
        let mut model = resolve_scenario(&spec.scenario)?;
        if let Some(mode) = spec.switch_mode {
            model.switch_mode = mode;
        }
        Self::with_model(spec, model)
    }

    /// Uses `model` instead of resolving `spec.scenario`.
    pub fn with_model(spec: ExperimentSpec, model: ScenarioModel) -> Result<Self> {
        let scenario = Scenario::new(model)?;
        let n = scenario.num_arms() as u64;
        if spec.horizon < n + 1 {
            return Err(Error::InvalidSpec(format!(
                "horizon {} must be at least arms + 1 = {}",
                spec.horizon,
                n + 1
            )));
        }
        if spec.runs == 0 {
            return Err(Error::InvalidSpec("runs must be at least 1".into()));
        }
        if spec.policies.is_empty() {
            return Err(Error::InvalidSpec("no policy selected".into()));
        }
        let grid = match &spec.log_grid {
            Some(g) => {
                let ok = !g.is_empty()
                    && g.windows(2).all(|w| w[0] < w[1])
                    && g[0] >= 1
                    && *g.last().unwrap() <= spec.horizon;
                if !ok {
                    return Err(Error::InvalidSpec(
                        "log grid must be strictly increasing within [1, horizon]".into(),
                    ));
                }
                g.clone()
            }
            None => geometric_grid(spec.horizon, DEFAULT_GRID_POINTS),
        };
        let constants = compute_constants(&scenario)?;
        let config = spec.config.apply(&constants);
        config.validate()?;
        Ok(Self {
            spec,
            scenario,
            constants,
            config,
            grid,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub policy: PolicyKind,
    pub seed: u64,
    /// Cumulative regret after each grid slot.
    pub regret: Vec<f64>,
    pub trace: Option<PolicyTrace>,
    pub stats: Option<PhaseStats>,
    /// Final counters, for policies that keep them.
    pub tables: Option<CountTables>,
    /// Number of assertion checks performed (all passed).
    pub assertions_checked: u64,
}

/// Runs one trajectory of `kind` with environment seed `seed`.
pub fn run_single(exp: &Experiment, kind: PolicyKind, seed: u64) -> Result<RunResult> {
    let sc = &exp.scenario;
    let tv = sc.true_values();
    let mut policy = make_policy(kind, sc, &exp.config, seed, exp.spec.record_slots)?;
    let mut env = EnvState::reset(sc, seed, exp.spec.init);

    let mut last_global = env.global();
    let mut regret = 0.0;
    let mut curve = Vec::with_capacity(exp.grid.len());
    let mut next_grid = exp.grid.iter().copied().peekable();
    let mut checked = 0;

    for t in 1..=exp.spec.horizon {
        let ctx = DecisionContext { slot: t, last_global };
        let arm = policy.select(ctx)?;
        let obs = env.step(sc, arm)?;
        policy.observe(&obs)?;

        let s = ctx.last_global;
        if tv.is_suboptimal(s, arm) {
            let rewards = env.all_rewards();
            regret += rewards[tv.best_arm[s]] - rewards[arm];
        }
        last_global = obs.global;

        if next_grid.peek() == Some(&t) {
            next_grid.next();
            curve.push(regret);
            checked += check_invariants(exp, kind, t, regret, policy.phase_stats().as_ref())?;
        }
    }

    Ok(RunResult {
        policy: kind,
        seed,
        regret: curve,
        trace: policy.trace().cloned(),
        stats: policy.phase_stats(),
        tables: policy.tables().cloned(),
        assertions_checked: checked,
    })
}

fn fail(kind: PolicyKind, t: u64, invariant: String) -> Error {
    Error::AssertionFailure {
        policy: kind.to_string(),
        t,
        invariant,
    }
}

fn check_invariants(
    exp: &Experiment,
    kind: PolicyKind,
    t: u64,
    regret: f64,
    stats: Option<&PhaseStats>,
) -> Result<u64> {
    let toggles = exp.spec.assertions;
    let mut checked = 0;
    if toggles.regret_range {
        let cap = exp.constants.x_max * t as f64;
        if !(regret.abs() <= cap * (1.0 + ASSERT_REL_TOL)) {
            return Err(fail(kind, t, format!("regret range: |r(t)| = {} > x_max * t = {cap}", regret.abs())));
        }
        checked += 1;
    }
    let Some(stats) = stats else {
        return Ok(checked);
    };
    // both phase laws are stated for base 4 and multiplier 2
    let standard = exp.config.growth_base == 4 && exp.config.exploit_multiplier == 2;
    if toggles.exploitation_count && standard {
        let limit = ceil_log4_exploit(t) as u64;
        if stats.exploitation_phases > limit {
            return Err(fail(
                kind,
                t,
                format!(
                    "exploitation count: n_I = {} > ceil(log4(3t/2+1)) = {limit}",
                    stats.exploitation_phases
                ),
            ));
        }
        checked += 1;
    }
    if toggles.exploration_slots && standard {
        let ln_t = (t as f64).ln();
        for arm in 0..stats.exploration_slots.len() {
            let a = stats.effective_coeff[arm];
            let budget = 3.0 * a * ln_t + 1.0;
            let phases = stats.exploration_phases[arm];
            // phases after the initial round
            let k = phases.saturating_sub(1);
            let count_ok = phases == 0 || 4f64.powi(k as i32) <= budget * (1.0 + ASSERT_REL_TOL);
            if !count_ok {
                return Err(fail(
                    kind,
                    t,
                    format!("exploration count (arm {arm}): 4^{k} > 3 A ln t + 1 = {budget}, A = {a}"),
                ));
            }
            let slot_bound = (4.0 * budget - 1.0) / 3.0 + stats.max_sb1_len[arm] as f64 * phases as f64;
            let slots = stats.exploration_slots[arm] as f64;
            if !(slots <= slot_bound * (1.0 + ASSERT_REL_TOL)) {
                return Err(fail(
                    kind,
                    t,
                    format!(
                        "exploration slots (arm {arm}): {slots} > (4(3 A ln t + 1) - 1)/3 + maxSB1 * n_O = {slot_bound}, A = {a}"
                    ),
                ));
            }
            checked += 2;
        }
    }
    Ok(checked)
}

/// Aggregate curves of one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAggregate {
    pub policy: PolicyKind,
    pub t: Vec<u64>,
    pub mean: Vec<f64>,
    /// Sample standard deviation over runs (`n - 1` denominator; 0 for one run).
    pub std: Vec<f64>,
    /// Half-width of the normal 95% confidence interval of the mean.
    pub ci95: Vec<f64>,
    pub mean_over_ln_t: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Final regret of every run, in run order.
    pub final_regret: Vec<f64>,
    pub assertions_checked: u64,
}

impl PolicyAggregate {
    pub fn final_mean(&self) -> f64 {
        *self.mean.last().unwrap_or(&0.0)
    }

    pub fn final_ci95(&self) -> f64 {
        *self.ci95.last().unwrap_or(&0.0)
    }

    /// Index of grid point `t`, if present.
    pub fn index_of(&self, t: u64) -> Option<usize> {
        self.t.iter().position(|&x| x == t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicyAggregate>,
}

impl AggregateResult {
    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicyAggregate> {
        self.policies.iter().find(|p| p.policy == kind)
    }
}

/// Summary statistics over runs, accumulated in run order.
pub fn aggregate(kind: PolicyKind, grid: &[u64], runs: &[RunResult]) -> PolicyAggregate {
    let r = runs.len() as f64;
    let points = grid.len();
    let mut mean = vec![0.0; points];
    let mut std = vec![0.0; points];
    let mut min = vec![f64::INFINITY; points];
    let mut max = vec![f64::NEG_INFINITY; points];
    for run in runs {
        for (k, &v) in run.regret.iter().enumerate() {
            mean[k] += v;
            min[k] = min[k].min(v);
            max[k] = max[k].max(v);
        }
    }
    mean.iter_mut().for_each(|m| *m /= r);
    if runs.len() > 1 {
        for run in runs {
            for (k, &v) in run.regret.iter().enumerate() {
                std[k] += (v - mean[k]).powi(2);
            }
        }
        std.iter_mut().for_each(|s| *s = (*s / (r - 1.0)).sqrt());
    }
    let ci95 = std.iter().map(|s| 1.96 * s / r.sqrt()).collect();
    let mean_over_ln_t = grid
        .iter()
        .zip(&mean)
        .map(|(&t, &m)| if t >= 2 { m / (t as f64).ln() } else { f64::NAN })
        .collect();
    PolicyAggregate {
        policy: kind,
        t: grid.to_vec(),
        mean,
        std,
        ci95,
        mean_over_ln_t,
        min,
        max,
        final_regret: runs.iter().map(|r| *r.regret.last().unwrap_or(&0.0)).collect(),
        assertions_checked: runs.iter().map(|r| r.assertions_checked).sum(),
    }
}

/// Runs every policy `runs` times. Runs execute on the current rayon pool;
/// results are reduced in run order, so the outcome does not depend on the
/// degree of parallelism.
pub fn run_monte_carlo(exp: &Experiment) -> Result<AggregateResult> {
    let seeds: Vec<u64> = (0..exp.spec.runs as u64).map(|k| exp.spec.base_seed.wrapping_add(k)).collect();
    let mut policies = Vec::with_capacity(exp.spec.policies.len());
    for &kind in &exp.spec.policies {
        let results: Vec<Result<RunResult>> =
            seeds.par_iter().map(|&seed| run_single(exp, kind, seed)).collect();
        let mut runs = Vec::with_capacity(results.len());
        for (run, res) in results.into_iter().enumerate() {
            runs.push(res.map_err(|e| Error::Run { run, source: Box::new(e) })?);
        }
        policies.push(aggregate(kind, &exp.grid, &runs));
    }
    Ok(AggregateResult { seeds, policies })
}

/// CSV with header `policy,t,mean_regret,std_regret,ci95,mean_regret_over_lnt`.
/// Floats use the shortest representation that round-trips.
pub fn to_csv(result: &AggregateResult) -> String {
    let mut out = String::from("policy,t,mean_regret,std_regret,ci95,mean_regret_over_lnt\n");
    for p in &result.policies {
        for k in 0..p.t.len() {
            let _ = writeln!(
                out,
                "{},{},{:?},{:?},{:?},{:?}",
                p.policy, p.t[k], p.mean[k], p.std[k], p.ci95[k], p.mean_over_ln_t[k]
            );
        }
    }
    out
}

/// Everything needed to reproduce and read a Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub scenario: ScenarioModel,
    pub config: LempConfig,
    pub grid: Vec<u64>,
    pub seeds: Vec<u64>,
    pub aggregates: Vec<PolicyAggregate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<crate::theory::BoundReport>,
}

impl ExperimentReport {
    pub fn new(exp: &Experiment, result: &AggregateResult) -> Self {
        Self {
            spec: exp.spec.clone(),
            scenario: exp.scenario.model().clone(),
            config: exp.config,
            grid: exp.grid.clone(),
            seeds: result.seeds.clone(),
            aggregates: result.policies.clone(),
            bound: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(policies: Vec<PolicyKind>, horizon: u64, runs: usize) -> ExperimentSpec {
        ExperimentSpec::new("s1-base", policies, horizon, runs, 7)
    }

    #[test]
    fn grid_shape() {
        let g = geometric_grid(200_000, 64);
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], 2);
        assert_eq!(*g.last().unwrap(), 200_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let small = geometric_grid(10, 64);
        assert!(small.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*small.last().unwrap(), 10);
    }

    #[test]
    fn genie_has_zero_regret() {
        let exp = Experiment::new(spec(vec![PolicyKind::Genie], 5_000, 1)).unwrap();
        let r = run_single(&exp, PolicyKind::Genie, 3).unwrap();
        assert!(r.regret.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_arm_has_zero_regret() {
        let mut m = presets::s1_base();
        m.arms.truncate(1);
        m.name = "one".into();
        let exp = Experiment::with_model(spec(PolicyKind::ALL.to_vec(), 3_000, 1), m).unwrap();
        for kind in PolicyKind::ALL {
            let r = run_single(&exp, kind, 1).unwrap();
            assert!(r.regret.iter().all(|&x| x == 0.0), "{kind}");
        }
    }

    #[test]
    fn one_run_aggregate_equals_run() {
        let exp = Experiment::new(spec(vec![PolicyKind::Lemp], 3_000, 1)).unwrap();
        let agg = run_monte_carlo(&exp).unwrap();
        let run = run_single(&exp, PolicyKind::Lemp, 7).unwrap();
        let p = agg.policy(PolicyKind::Lemp).unwrap();
        assert_eq!(p.mean, run.regret);
        assert!(p.std.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let exp = Experiment::new(spec(vec![PolicyKind::Lemp, PolicyKind::UniformRandom], 2_000, 6)).unwrap();
        let a = run_monte_carlo(&exp).unwrap();
        let b = run_monte_carlo(&exp).unwrap();
        assert_eq!(to_csv(&a), to_csv(&b));
        assert_eq!(a, b);
    }

    #[test]
    fn mean_within_run_range() {
        let exp = Experiment::new(spec(vec![PolicyKind::Dsee], 2_000, 5)).unwrap();
        let agg = run_monte_carlo(&exp).unwrap();
        let p = &agg.policies[0];
        for k in 0..p.t.len() {
            assert!(p.min[k] <= p.mean[k] + 1e-9 && p.mean[k] <= p.max[k] + 1e-9);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            Experiment::new(spec(vec![PolicyKind::Lemp], 3, 1)),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            Experiment::new(spec(vec![PolicyKind::Lemp], 100, 0)),
            Err(Error::InvalidSpec(_))
        ));
        let mut s = spec(vec![PolicyKind::Lemp], 100, 1);
        s.log_grid = Some(vec![5, 3]);
        assert!(matches!(Experiment::new(s), Err(Error::InvalidSpec(_))));
        let s = ExperimentSpec::new("nope", vec![PolicyKind::Lemp], 100, 1, 0);
        assert!(matches!(Experiment::new(s), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn csv_layout() {
        let exp = Experiment::new(spec(vec![PolicyKind::Genie, PolicyKind::Lemp], 1_000, 2)).unwrap();
        let csv = to_csv(&run_monte_carlo(&exp).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "policy,t,mean_regret,std_regret,ci95,mean_regret_over_lnt");
        assert_eq!(lines.len(), 1 + 2 * exp.grid.len());
        assert!(lines[1].starts_with("genie,2,"));
        assert!(!csv.contains('\r'));
    }

    fn stats(slots: u64, phases: u64, sb1: u64, a: f64) -> PhaseStats {
        PhaseStats {
            exploitation_phases: 1,
            exploration_phases: vec![phases],
            exploration_slots: vec![slots],
            max_sb1_len: vec![sb1],
            effective_coeff: vec![a],
            literal_coeff: vec![a],
        }
    }

    #[test]
    fn invariant_checks_fire() {
        let exp = Experiment::new(spec(vec![PolicyKind::Lemp], 1_000, 1)).unwrap();
        let t = 100;
        let ln_t = (t as f64).ln();
        // A = 1: budget 3 ln t + 1 = 14.8, slot bound (4 * 14.8 - 1)/3 + 2 * 2
        let budget = 3.0 * ln_t + 1.0;
        let bound = (4.0 * budget - 1.0) / 3.0 + 4.0;
        let ok = stats(bound.floor() as u64, 2, 2, 1.0);
        check_invariants(&exp, PolicyKind::Lemp, t, 0.0, Some(&ok)).unwrap();
        let too_many_slots = stats(bound.floor() as u64 + 1, 2, 2, 1.0);
        let err = check_invariants(&exp, PolicyKind::Lemp, t, 0.0, Some(&too_many_slots)).unwrap_err();
        assert!(err.to_string().contains("exploration slots"), "{err}");
        // 4^2 = 16 > 14.8
        let too_many_phases = stats(10, 3, 100, 1.0);
        let err = check_invariants(&exp, PolicyKind::Lemp, t, 0.0, Some(&too_many_phases)).unwrap_err();
        assert!(err.to_string().contains("exploration count"), "{err}");
        let mut many_exploits = ok.clone();
        // ceil(log4(151)) = 4
        many_exploits.exploitation_phases = 5;
        let err = check_invariants(&exp, PolicyKind::Lemp, t, 0.0, Some(&many_exploits)).unwrap_err();
        assert!(matches!(err, Error::AssertionFailure { t: 100, .. }));
        let err = check_invariants(&exp, PolicyKind::Genie, t, 14.0 * 100.0 + 1.0, None).unwrap_err();
        assert!(err.to_string().contains("regret range"));
    }
}
