use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lemp_core::harness::{resolve_scenario, to_csv, ConfigOverrides};
use lemp_core::presets::builtin_scenarios;
use lemp_core::theory::SystemConstants;
use lemp_core::{
    compute_constants, run_monte_carlo, BoundReport, Error, Experiment, ExperimentReport, ExperimentSpec, InitMode,
    PolicyKind, Scenario, ScenarioModel, SwitchMode,
};
use serde_json::json;

/// Restless bandits under an exogenous global Markov chain.
#[derive(Debug, Parser)]
#[command(name = "lemp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo experiment and write regret curves.
    Run(RunArgs),
    /// Evaluate the closed-form constants and regret bound.
    Bound(BoundArgs),
    /// Validate a scenario and print its chain analyses.
    Validate(ValidateArgs),
    /// List or print the built-in scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Debug, Subcommand)]
enum ScenarioAction {
    List,
    /// Print a scenario as JSON.
    Show { name: String },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Preset name or scenario JSON file.
    #[arg(long)]
    scenario: String,
    /// Comma-separated: lemp, dsee, avg-best, genie, uniform-random.
    #[arg(long, value_delimiter = ',', default_value = "lemp,dsee,avg-best,genie")]
    policies: Vec<String>,
    #[arg(long, default_value_t = 100_000)]
    horizon: u64,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV output path. Defaults to `regret.csv` in $LEMP_OUT_DIR or the
    /// current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the full JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Include the closed-form bound report in the JSON output.
    #[arg(long)]
    bound: bool,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta_floor: Option<f64>,
    #[arg(long)]
    l_eff: Option<f64>,
    #[arg(long)]
    cond1: Option<f64>,
    #[arg(long)]
    cond2: Option<f64>,
    /// Use the closed-form condition constants instead of the calibrated ones.
    #[arg(long)]
    theoretical: bool,
    /// stationary-redraw or index-carryover.
    #[arg(long)]
    switch_mode: Option<String>,
    /// Start every run in global state G with every arm in local state X
    /// (`G:X`); stationary start by default.
    #[arg(long)]
    fixed_start: Option<String>,
    /// Disable the phase-count and regret-range assertions.
    #[arg(long)]
    no_assert: bool,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Times at which to evaluate the bound (repeat or comma-separate).
    #[arg(long = "t", value_delimiter = ',', default_value = "1000")]
    t: Vec<u64>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Scenario JSON file or preset name.
    scenario: String,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if is_assertion(&e) { 3 } else { 2 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn is_assertion(e: &Error) -> bool {
    match e {
        Error::AssertionFailure { .. } => true,
        Error::Run { source, .. } => is_assertion(source),
        _ => false,
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 1,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Scenarios { action } => cmd_scenarios(action),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn default_out() -> PathBuf {
    let dir = std::env::var_os("LEMP_OUT_DIR").map(PathBuf::from).unwrap_or_default();
    dir.join("regret.csv")
}

fn parse_fixed_start(text: &str) -> Result<InitMode, Failure> {
    let (g, x) = text
        .split_once(':')
        .ok_or_else(|| config_error(format!("--fixed-start expects G:X, got {text:?}")))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| config_error(format!("bad state index {v:?}")));
    Ok(InitMode::Fixed {
        global: parse(g)?,
        local: parse(x)?,
    })
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let policies = args
        .policies
        .iter()
        .map(|p| p.trim().parse::<PolicyKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| config_error(e.to_string()))?;
    let mut spec = ExperimentSpec::new(args.scenario, policies, args.horizon, args.runs, args.seed);
    spec.config = ConfigOverrides {
        epsilon: args.epsilon,
        delta_floor: args.delta_floor,
        l_eff: args.l_eff,
        cond1_coeff: args.cond1,
        cond2_coeff: args.cond2,
        theoretical: args.theoretical,
        ..ConfigOverrides::default()
    };
    if let Some(mode) = &args.switch_mode {
        spec.switch_mode = Some(mode.parse::<SwitchMode>().map_err(|e| config_error(e.to_string()))?);
    }
    if let Some(fixed) = &args.fixed_start {
        spec.init = parse_fixed_start(fixed)?;
    }
    if args.no_assert {
        spec.assertions.exploitation_count = false;
        spec.assertions.exploration_slots = false;
        spec.assertions.regret_range = false;
    }

    let exp = Experiment::new(spec)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(config_error("--jobs must be at least 1"));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| config_error(e.to_string()))?;
    let result = pool.install(|| run_monte_carlo(&exp))?;

    let out = args.out.unwrap_or_else(default_out);
    fs::write(&out, to_csv(&result)).map_err(|e| io_error(&out, e))?;
    if let Some(path) = &args.json {
        let mut report = ExperimentReport::new(&exp, &result);
        if args.bound {
            let eps = exp.config.epsilon;
            report.bound = Some(BoundReport::new(&exp.constants, eps, &exp.grid).map_err(Error::from)?);
        }
        fs::write(path, report.to_json()).map_err(|e| io_error(path, e))?;
    }
    let horizon = exp.spec.horizon;
    for p in &result.policies {
        println!(
            "{:<15} r(T) = {:>12.4} +/- {:<10.4} r(T)/ln T = {:.4}  (T = {horizon}, {} runs)",
            p.policy.as_str(),
            p.final_mean(),
            p.final_ci95(),
            p.final_mean() / (horizon as f64).ln(),
            exp.spec.runs,
        );
    }
    Ok(())
}

fn load_scenario(name: &str) -> Result<Scenario, Failure> {
    let model = resolve_scenario(name)?;
    Ok(Scenario::new(model).map_err(Error::from)?)
}

fn cmd_bound(args: BoundArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let constants: SystemConstants = compute_constants(&scenario).map_err(Error::from)?;
    let report = BoundReport::new(&constants, args.epsilon, &args.t).map_err(Error::from)?;
    let doc = json!({
        "scenario": scenario.name(),
        "x_max": constants.x_max,
        "delta": constants.delta,
        "constants": constants,
        "report": report,
    });
    let text = serde_json::to_string_pretty(&doc).expect("bound report serializes");
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", parts.join(", "))
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let model: ScenarioModel = resolve_scenario(&args.scenario)?;
    let scenario = Scenario::new(model).map_err(Error::from)?;
    let g = scenario.global_analysis();
    println!("scenario {}: ok", scenario.name());
    println!(
        "global: pi_global = {}  lambda = {:.6}  max hitting time = {:.4}",
        fmt_vec(&g.stationary),
        g.second_eigenvalue_modulus,
        g.max_hitting_time()
    );
    for arm in 0..scenario.num_arms() {
        for s in 0..scenario.num_global_states() {
            let a = scenario.local_analysis(arm, s);
            println!(
                "arm {arm} state {s}: pi = {}  lambda = {:.6}  max hitting time = {:.4}",
                fmt_vec(&a.stationary),
                a.second_eigenvalue_modulus,
                a.max_hitting_time()
            );
        }
    }
    let tv = scenario.true_values();
    for s in 0..scenario.num_global_states() {
        println!("state {s}: V = {}  best arm = {}", fmt_vec(&tv.v[s]), tv.best_arm[s]);
    }
    Ok(())
}

fn cmd_scenarios(action: ScenarioAction) -> Result<(), Failure> {
    match action {
        ScenarioAction::List => {
            for m in builtin_scenarios() {
                println!("{:<16} states = {}  arms = {}", m.name, m.num_global_states(), m.num_arms());
            }
        }
        ScenarioAction::Show { name } => {
            let model = resolve_scenario(&name)?;
            println!("{}", model.to_json());
        }
    }
    Ok(())
}
