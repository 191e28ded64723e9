//! Command-line interface: argument definitions and subcommand drivers.

use std::path::{Path, PathBuf};

use battbank_core::{
    coupled_rollout, generate_trajectory, greedy_action, train, validate_config, BankConfig,
    ComparisonSpec, ExactModel, Policy, SolverOptions, State,
};
use clap::{Args, Parser, Subcommand};

use crate::config_file::{load_experiment, Experiment};
use crate::error::CliError;
use crate::parallel::compare_policies_parallel;
use crate::reports::{
    comparison_csv, comparison_text, format_tuple, solution_csv, train_log_csv, write_text,
};
use crate::trajectory_file::format_trajectory;
use crate::weights_file::{load_weights, save_weights};

/// State-wise gap below which the greedy policy is declared optimal.
pub const OPTIMALITY_GAP_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "battbank",
    version,
    about = "Battery-bank control: validate configs, train, compare policies, solve exactly"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a configuration file against the model invariants.
    Validate { config: PathBuf },
    /// Learn Q-function weights online and save them with the training log.
    Train {
        config: PathBuf,
        /// Weights file to write.
        #[arg(long)]
        out: PathBuf,
        /// Training-log CSV; defaults to `<out stem>_log.csv` beside `--out`.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Compare greedy, naive and learned policies on coupled trajectories.
    Compare {
        config: PathBuf,
        /// Capacity tuples such as `2,3 3,5`; defaults to the config's bank.
        #[arg(long, num_args = 1..)]
        sizes: Vec<Tuple>,
        /// Evaluation seeds, e.g. `1,2,3,4,5`.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        /// Ramp limits: one value for every battery or one per battery.
        #[arg(long)]
        ramp: Option<Tuple>,
        /// Evaluation horizon.
        #[arg(long, default_value_t = 100_000)]
        horizon: usize,
        /// Evaluate these weights instead of training (requires one size).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Comparison CSV to write.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Solve the MDP exactly by Q-value iteration and export the solution.
    SolveExact {
        config: PathBuf,
        /// Stop when the sup-norm change of one sweep falls below this.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Solution CSV to write.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Refuse instances with more states than this.
        #[arg(long, default_value_t = 1_000_000)]
        state_cap: u64,
    },
    /// Export a seeded background-chain trajectory.
    Trajectory {
        config: PathBuf,
        /// Sampling seed.
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate saved weights against greedy and naive on one trajectory.
    Evaluate {
        config: PathBuf,
        /// Weights file written by `train`.
        #[arg(long)]
        weights: PathBuf,
        /// Trajectory seed.
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        horizon: usize,
    },
}

/// Overrides of the config's training schedule and discount.
#[derive(Debug, Clone, Default, Args)]
pub struct ScheduleArgs {
    /// Training steps.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial step size, in (0, 1).
    #[arg(long)]
    pub beta0: Option<f64>,
    /// Step-size decay scale: beta_k = beta0 * tau / (tau + k).
    #[arg(long)]
    pub beta_tau: Option<f64>,
    /// Initial exploration rate.
    #[arg(long)]
    pub eps0: Option<f64>,
    /// Exploration floor.
    #[arg(long)]
    pub eps_min: Option<f64>,
    /// Exploration decay scale: eps_k = max(eps_min, eps0 * exp(-k / decay)).
    #[arg(long)]
    pub eps_decay: Option<f64>,
    /// Discount factor.
    #[arg(long)]
    pub gamma: Option<f64>,
}

impl ScheduleArgs {
    fn apply(&self, exp: &mut Experiment) {
        let s = &mut exp.schedule;
        let overrides: [(&mut f64, Option<f64>); 5] = [
            (&mut s.beta0, self.beta0),
            (&mut s.beta_tau, self.beta_tau),
            (&mut s.eps0, self.eps0),
            (&mut s.eps_min, self.eps_min),
            (&mut s.eps_decay, self.eps_decay),
        ];
        for (field, value) in overrides {
            if let Some(v) = value {
                *field = v;
            }
        }
        if let Some(v) = self.steps {
            s.steps = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.gamma {
            exp.bank.gamma = v;
        }
    }
}

/// Comma-separated non-negative integers such as `2,3` or `(2,3)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tuple(pub Vec<u32>);

impl std::str::FromStr for Tuple {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_tuple(text).map(Tuple)
    }
}

/// Parse `a,b,...` into non-negative integers.
pub fn parse_tuple(text: &str) -> Result<Vec<u32>, String> {
    text.trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<u32>()
                .map_err(|e| format!("{v:?} in {text:?}: {e}"))
        })
        .collect()
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Train {
            config,
            out,
            log,
            schedule,
        } => cmd_train(&config, &schedule, &out, log.as_deref()),
        Command::Compare {
            config,
            sizes,
            seeds,
            ramp,
            horizon,
            weights,
            csv,
            schedule,
        } => cmd_compare(
            &config,
            CompareOptions {
                sizes: sizes.into_iter().map(|t| t.0).collect(),
                seeds,
                ramp: ramp.map(|t| t.0),
                horizon,
                weights,
                csv,
                schedule,
            },
        ),
        Command::SolveExact {
            config,
            tol,
            out,
            state_cap,
        } => cmd_solve_exact(&config, tol, state_cap, out.as_deref()),
        Command::Trajectory {
            config,
            seed,
            steps,
            out,
        } => cmd_trajectory(&config, seed, steps, out.as_deref()),
        Command::Evaluate {
            config,
            weights,
            seed,
            horizon,
        } => cmd_evaluate(&config, &weights, seed, horizon),
    }
}

/// Every problem with `exp`: model invariants, the initial background state
/// and the training schedule.
fn problems(exp: &Experiment) -> Vec<String> {
    let mut out: Vec<String> = validate_config(&exp.bank, &exp.chain)
        .violations
        .iter()
        .map(|v| v.to_string())
        .collect();
    if exp.x0 >= exp.chain.len() {
        out.push(format!(
            "initial_background: {} is not a background state (0..{})",
            exp.x0,
            exp.chain.len()
        ));
    }
    if let Err(e) = exp.schedule.validate() {
        out.push(format!("schedule: {e}"));
    }
    out
}

fn ensure_valid(exp: &Experiment) -> Result<(), CliError> {
    let found = problems(exp);
    if found.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(found.join("\n")))
    }
}

pub fn cmd_validate(config: &Path) -> Result<(), CliError> {
    let exp = load_experiment(config)?;
    let found = problems(&exp);
    if found.is_empty() {
        println!("PASS");
        return Ok(());
    }
    println!("FAIL: {} problem(s)", found.len());
    for p in &found {
        println!("  {p}");
    }
    Err(CliError::Validation(format!(
        "{} has {} problem(s)",
        config.display(),
        found.len()
    )))
}

fn default_log_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "weights".into());
    out.with_file_name(format!("{stem}_log.csv"))
}

pub fn cmd_train(
    config: &Path,
    overrides: &ScheduleArgs,
    out: &Path,
    log_path: Option<&Path>,
) -> Result<(), CliError> {
    let mut exp = load_experiment(config)?;
    overrides.apply(&mut exp);
    ensure_valid(&exp)?;
    let b0 = exp.bank.initial_occupancy_vec();
    let (w, log) = train(&exp.bank, &exp.chain, &exp.schedule, exp.x0, &b0)
        .map_err(|e| CliError::Runtime(format!("training aborted: {e}")))?;
    save_weights(out, &exp.bank, &exp.chain, &w)?;
    let log_path = log_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_log_path(out));
    write_text(&log_path, &train_log_csv(&log))?;

    println!("steps: {}", exp.schedule.steps);
    println!(
        "final cumulative training reward: {}",
        log.final_cum_reward().unwrap_or(0.0)
    );
    let tail_windows = (10_000 / log.interval.max(1)) as usize;
    match log.tail_mean_abs_td(tail_windows) {
        Some(td) => println!("mean |td error| over the last {tail_windows} windows: {td}"),
        None => println!("mean |td error|: no completed windows"),
    }
    println!("weights: {}", out.display());
    println!("log: {}", log_path.display());
    Ok(())
}

pub struct CompareOptions {
    pub sizes: Vec<Vec<u32>>,
    pub seeds: Vec<u64>,
    pub ramp: Option<Vec<u32>>,
    pub horizon: usize,
    pub weights: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub schedule: ScheduleArgs,
}

fn with_ramp(bank: &BankConfig, ramp: &[u32]) -> Result<BankConfig, CliError> {
    match ramp.len() {
        1 => Ok(bank.with_ramps(&vec![ramp[0]; bank.len()])),
        n if n == bank.len() => Ok(bank.with_ramps(ramp)),
        n => Err(CliError::Validation(format!(
            "--ramp has {n} values for {} batteries",
            bank.len()
        ))),
    }
}

pub fn cmd_compare(config: &Path, opts: CompareOptions) -> Result<(), CliError> {
    let mut exp = load_experiment(config)?;
    opts.schedule.apply(&mut exp);
    if let Some(ramp) = &opts.ramp {
        exp.bank = with_ramp(&exp.bank, ramp)?;
    }
    ensure_valid(&exp)?;
    if opts.seeds.is_empty() {
        return Err(CliError::Validation("--seeds is empty".into()));
    }
    let sizes = if opts.sizes.is_empty() {
        vec![exp.bank.capacities()]
    } else {
        opts.sizes
    };
    if let Some(bad) = sizes.iter().find(|s| s.len() != exp.bank.len()) {
        return Err(CliError::Validation(format!(
            "size {} does not match the {} batteries of the config",
            format_tuple(bad),
            exp.bank.len()
        )));
    }
    let spec = ComparisonSpec {
        template: exp.bank.clone(),
        chain: exp.chain.clone(),
        sizes,
        seeds: opts.seeds,
        steps: opts.horizon,
        schedule: exp.schedule.clone(),
        x0: exp.x0,
    };
    let weights = match &opts.weights {
        Some(path) => {
            if spec.sizes.len() != 1 {
                return Err(CliError::Validation(
                    "--weights applies to a single size".into(),
                ));
            }
            Some(load_weights(
                path,
                &spec.bank_for(&spec.sizes[0]),
                &spec.chain,
            )?)
        }
        None => None,
    };

    let table = compare_policies_parallel(&spec, weights.as_ref());
    print!("{}", comparison_text(&table));
    if let Some(path) = &opts.csv {
        write_text(path, &comparison_csv(&table))?;
    }
    if table.has_failures() {
        return Err(CliError::Runtime(format!(
            "{} of {} jobs failed",
            table.failures.len(),
            spec.jobs().len()
        )));
    }
    Ok(())
}

pub fn cmd_solve_exact(
    config: &Path,
    tol: f64,
    state_cap: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let exp = load_experiment(config)?;
    ensure_valid(&exp)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Validation(format!(
            "--tol must be positive, got {tol}"
        )));
    }
    let opts = SolverOptions {
        tol,
        state_cap,
        ..SolverOptions::default()
    };
    let runtime = |e: battbank_core::OracleError| CliError::Runtime(e.to_string());
    let model = ExactModel::build(&exp.bank, &exp.chain, state_cap).map_err(runtime)?;
    let solution = model.solve(&opts).map_err(runtime)?;
    let values = solution.values();
    println!("states: {}", model.space().len());
    println!("state-action pairs: {}", model.num_pairs());
    println!(
        "sweeps: {} (final residual {:e})",
        solution.iterations, solution.residual
    );
    println!("suboptimality bound: {:e}", solution.suboptimality_bound());
    println!(
        "mean optimal value: {}",
        values.iter().sum::<f64>() / values.len() as f64
    );
    if let Some(path) = out {
        write_text(path, &solution_csv(&model.solution_rows(&solution)))?;
        println!("solution: {}", path.display());
    }

    let greedy = model
        .evaluate_policy(|s: &State| greedy_action(&exp.bank, &exp.chain, s), &opts)
        .map_err(runtime)?;
    let gap = values
        .iter()
        .zip(&greedy)
        .map(|(v, g)| (v - g).abs())
        .fold(0.0, f64::max);
    if exp.bank.ramps_never_bind_and_lossless() {
        let pass = gap <= OPTIMALITY_GAP_TOL;
        println!(
            "greedy optimality check: max |V_greedy - V*| = {gap:e} ({}, tolerance {OPTIMALITY_GAP_TOL:e})",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            return Err(CliError::Runtime(
                "greedy policy is not optimal on a lossless bank with non-binding ramps".into(),
            ));
        }
    } else {
        println!(
            "max |V_greedy - V*| = {gap:e} (no optimality claim: ramps may bind or batteries dissipate)"
        );
    }
    Ok(())
}

pub fn cmd_trajectory(
    config: &Path,
    seed: u64,
    steps: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let exp = load_experiment(config)?;
    ensure_valid(&exp)?;
    let text = format_trajectory(&generate_trajectory(&exp.chain, exp.x0, steps, seed));
    match out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_evaluate(
    config: &Path,
    weights: &Path,
    seed: u64,
    horizon: usize,
) -> Result<(), CliError> {
    let exp = load_experiment(config)?;
    ensure_valid(&exp)?;
    let w = load_weights(weights, &exp.bank, &exp.chain)?;
    let learned = Policy::learned(&exp.bank, &exp.chain, w)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let traj = generate_trajectory(&exp.chain, exp.x0, horizon, seed);
    let report = coupled_rollout(
        &exp.bank,
        &exp.chain,
        &[Policy::Greedy, Policy::Naive, learned],
        &traj,
        &exp.bank.initial_occupancy_vec(),
    );
    println!(
        "config {} trajectory seed {} horizon {}",
        report.fingerprint, report.trajectory_seed, report.steps
    );
    for t in &report.totals {
        println!(
            "{:>6}  total {:>14.4}  per step {:>10.6}  penalty steps {}",
            t.policy, t.total, t.mean_per_step, t.penalty_events
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn tuples() {
        assert_eq!(parse_tuple("2,3").unwrap(), vec![2, 3]);
        assert_eq!(parse_tuple("(10, 10)").unwrap(), vec![10, 10]);
        assert!(parse_tuple("2.5,3").is_err());
        assert!(parse_tuple("-1,3").is_err());
    }

    #[test]
    fn sizes_and_seeds_parse() {
        let cli = Cli::try_parse_from([
            "battbank", "compare", "c.json", "--sizes", "2,3", "3,5", "--seeds", "1,2", "--ramp",
            "2,2", "--beta0", "0.05",
        ])
        .unwrap();
        let Command::Compare {
            sizes,
            seeds,
            ramp,
            schedule,
            ..
        } = cli.command
        else {
            panic!("expected compare");
        };
        assert_eq!(sizes, vec![Tuple(vec![2, 3]), Tuple(vec![3, 5])]);
        assert_eq!(seeds, vec![1, 2]);
        assert_eq!(ramp, Some(Tuple(vec![2, 2])));
        assert_eq!(schedule.beta0, Some(0.05));
    }

    #[test]
    fn log_path_sits_beside_weights() {
        assert_eq!(
            default_log_path(Path::new("/tmp/run/w.json")),
            PathBuf::from("/tmp/run/w_log.csv")
        );
    }
}
