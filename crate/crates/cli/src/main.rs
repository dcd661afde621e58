//! Command-line driver: validate scenario files, run simulations (optionally
//! replicated across derived seeds), and search for zero-wait staffing.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error,
//! 4 optimizer ran out of budget before converging.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use waterfall_sim::metrics::summarize;
use waterfall_sim::optimizer::{find_zero_wait, IncrementMode, OptimizerConfig};
use waterfall_sim::report::{aggregate_csv, write_reports, ReplicationRow};
use waterfall_sim::scenario::{load_scenario, save_scenario, to_toml_string};
use waterfall_sim::{run_scenario, Role, RoleMap, RunSummary, ScenarioConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NO_CONVERGENCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "waterfall",
    version,
    about = "Discrete-event simulator of a waterfall software house",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and echo the fully resolved configuration
    Validate(CommonArgs),
    /// Simulate a scenario and write CSV and text reports
    Run(RunArgs),
    /// Step up staffing levels until no acquisition waits
    Optimize(OptimizeArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (TOML); all keys optional, defaults documented in the
    /// bundled scenario1.toml
    #[arg(long)]
    config: PathBuf,
    /// Replace the scenario seed (full 64-bit range)
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the number of projects
    #[arg(long)]
    projects: Option<u32>,
    /// Override any scenario key, e.g. --set capacities.programmers=12
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl CommonArgs {
    fn load(&self) -> Result<ScenarioConfig, Failure> {
        let mut overrides = self.set.clone();
        if let Some(projects) = self.projects {
            overrides.push(format!("projects={projects}"));
        }
        let mut config =
            load_scenario(&self.config, &overrides).map_err(|e| Failure::config(e.to_string()))?;
        // The seed flag bypasses TOML, whose integers stop at 2^63 - 1.
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Independent replications at seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    replications: u32,
    /// Directory for reports (rep_NNN/ per replication plus aggregate.csv)
    #[arg(long, default_value = "waterfall-out")]
    out: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Units added to a delayed pool per iteration
    #[arg(long, default_value_t = 1)]
    step: u32,
    /// Consecutive delay-free runs required to stop
    #[arg(long, default_value_t = 3)]
    clean_threshold: u32,
    /// Simulation run budget
    #[arg(long, default_value_t = 200)]
    max_runs: u32,
    /// Level bounds per role, e.g. --bounds programmers=10:60 (repeatable)
    #[arg(long, value_name = "ROLE=MIN:MAX")]
    bounds: Vec<String>,
    /// Raise every delayed role per run, or only the first in phase order
    #[arg(long, value_enum, default_value_t = Mode::Simultaneous)]
    mode: Mode,
    /// Directory for trace.csv, optimized.toml, and comparison.txt
    #[arg(long, default_value = "waterfall-out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Simultaneous,
    Sequential,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: String) -> Failure {
        Failure { code: EXIT_CONFIG, message }
    }

    fn io(message: String) -> Failure {
        Failure { code: EXIT_IO, message }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(args) => cmd_validate(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Optimize(args) => cmd_optimize(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn cmd_validate(args: &CommonArgs) -> Result<(), Failure> {
    let config = args.load()?;
    print!("{}", to_toml_string(&config));
    Ok(())
}

fn write_file(path: &Path, content: &str) -> Result<(), Failure> {
    std::fs::write(path, content)
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

fn run_once(config: &ScenarioConfig) -> Result<RunSummary, Failure> {
    let record = run_scenario(config).map_err(|e| Failure::config(e.to_string()))?;
    Ok(summarize(&record))
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let config = args.common.load()?;
    if args.replications == 0 {
        return Err(Failure::config("replications: must be at least 1".into()));
    }
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::io(format!("cannot create {}: {e}", args.out.display())))?;
    let mut rows = Vec::with_capacity(args.replications as usize);
    for replication in 0..args.replications {
        let seed = config.seed.wrapping_add(u64::from(replication));
        let summary = run_once(&config.clone().with_seed(seed))?;
        let dir = args.out.join(format!("rep_{replication:03}"));
        write_reports(&summary, &dir).map_err(|e| Failure::io(e.to_string()))?;
        println!(
            "replication {replication} (seed {seed}): makespan {:.3}, mean completion {:.3}, delays {}",
            summary.makespan,
            summary.completion_stats.get(None).mean,
            summary.delay_counts.get(None, None)
        );
        rows.push(ReplicationRow::from_summary(replication, &summary));
    }
    write_file(&args.out.join("aggregate.csv"), &aggregate_csv(&rows))?;
    Ok(())
}

fn parse_bounds(spec: &str) -> Result<(Role, (u32, u32)), Failure> {
    let err = || Failure::config(format!("--bounds '{spec}': expected role=min:max"));
    let (role_name, range) = spec.split_once('=').ok_or_else(err)?;
    let role = Role::ALL
        .into_iter()
        .find(|r| r.label() == role_name.trim())
        .ok_or_else(|| Failure::config(format!("--bounds '{spec}': unknown role '{role_name}'")))?;
    let (min, max) = range.split_once(':').ok_or_else(err)?;
    let min: u32 = min.trim().parse().map_err(|_| err())?;
    let max: u32 = max.trim().parse().map_err(|_| err())?;
    Ok((role, (min, max)))
}

fn comparison_report(
    seed: u64,
    before_levels: &RoleMap<u32>,
    after_levels: &RoleMap<u32>,
    before: &RunSummary,
    after: &RunSummary,
) -> String {
    let mut out = String::new();
    writeln!(out, "Staffing comparison at seed {seed}").unwrap();
    writeln!(out, "{:=<38}", "").unwrap();
    writeln!(out, "{:<16} {:>10} {:>10}", "", "before", "after").unwrap();
    for role in Role::ALL {
        writeln!(
            out,
            "{:<16} {:>10} {:>10}",
            role.label(),
            before_levels[role],
            after_levels[role]
        )
        .unwrap();
    }
    let rows = [
        ("makespan", before.makespan, after.makespan),
        (
            "mean completion",
            before.completion_stats.get(None).mean,
            after.completion_stats.get(None).mean,
        ),
        (
            "max completion",
            before.completion_stats.get(None).max,
            after.completion_stats.get(None).max,
        ),
        (
            "total delays",
            *before.delay_counts.get(None, None) as f64,
            *after.delay_counts.get(None, None) as f64,
        ),
    ];
    for (label, b, a) in rows {
        writeln!(out, "{label:<16} {b:>10.3} {a:>10.3}").unwrap();
    }
    out
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<(), Failure> {
    let config = args.common.load()?;
    let mut opt = OptimizerConfig::for_scenario(&config, config.seed);
    opt.step = args.step;
    opt.clean_threshold = args.clean_threshold;
    opt.max_runs = args.max_runs;
    opt.mode = match args.mode {
        Mode::Simultaneous => IncrementMode::Simultaneous,
        Mode::Sequential => IncrementMode::Sequential,
    };
    for spec in &args.bounds {
        let (role, range) = parse_bounds(spec)?;
        opt.bounds[role] = range;
    }
    let result = find_zero_wait(&config, &opt).map_err(|e| Failure::config(e.to_string()))?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::io(format!("cannot create {}: {e}", args.out.display())))?;
    write_file(&args.out.join("trace.csv"), &result.trace_csv())?;
    let optimized = config.clone().with_capacities(result.levels);
    save_scenario(&optimized, &args.out.join("optimized.toml"))
        .map_err(|e| Failure::io(e.to_string()))?;

    // Matched-seed before/after comparison, mirroring the two bundled
    // scenarios.
    let before = run_once(&config)?;
    let after = run_once(&optimized)?;
    let report = comparison_report(
        config.seed,
        &config.capacities,
        &result.levels,
        &before,
        &after,
    );
    write_file(&args.out.join("comparison.txt"), &report)?;

    for role in Role::ALL {
        println!(
            "{}: {} -> {}",
            role.label(),
            config.capacities[role],
            result.levels[role]
        );
    }
    if result.converged {
        println!("converged in {} runs", result.runs_used);
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_NO_CONVERGENCE,
            message: format!(
                "no zero-wait staffing found within {} runs; partial trace written to {}",
                result.runs_used,
                args.out.join("trace.csv").display()
            ),
        })
    }
}
