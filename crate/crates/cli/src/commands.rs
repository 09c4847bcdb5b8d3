use std::ffi::OsString;
use std::io::{Read, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use explicit_rate::rate::parse_rational;
use explicit_rate::simulator::{inject_initial_conditions, run_from, InitialWorld};
use explicit_rate::{
    compute_maxmin, validate_scenario, verify_maxmin, ActualRatePolicy, Scenario, SimOptions, Time,
};
use rayon::prelude::*;

use crate::output::{parse_rates, render_rates, render_report, render_series};
use crate::scenario_file::{load_scenario, parse_scenario, Monitors, ScenarioFileError};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Success = 0,
    Usage = 1,
    /// A run-time monitor fired, or `verify` rejected the rates.
    Violation = 2,
    NotConverged = 3,
}

#[derive(Debug, Parser)]
#[command(
    name = "erc",
    version,
    about = "Maxmin-fair explicit-rate oracle and protocol simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the maxmin-fair rates and bottleneck levels of the flows active at a time.
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "0", value_parser = time_arg)]
        at: Time,
    },
    /// Run the distributed protocol and report convergence against the oracle.
    Simulate(SimulateArgs),
    /// Check a rates file (as printed by `oracle`) for maxmin fairness.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "0", value_parser = time_arg)]
        at: Time,
        /// Rates file, or `-` for standard input.
        rates: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Seed for jitter and perturbation; overrides the scenario's seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Run every seed in an inclusive range `a..b`, in parallel.
    #[arg(long, value_parser = seed_range)]
    pub seeds: Option<RangeInclusive<u64>>,
    /// Start from random link tables, source estimates and in-flight packets.
    #[arg(long)]
    pub perturb: bool,
    /// Delay rate increases by twice the round-trip bound (keeps load feasible).
    #[arg(long = "policy-4-1", value_enum, default_value = "on")]
    pub policy: OnOff,
    /// Write trace.txt, report.txt and series.tsv here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = time_arg)]
    pub duration: Option<Time>,
}

fn time_arg(s: &str) -> Result<Time, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn seed_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a..b, got {s:?}"))?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a > b {
        return Err(format!("empty seed range {s}"));
    }
    Ok(a..=b)
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    Exit::Success
                }
                _ => {
                    let _ = write!(err, "{text}");
                    Exit::Usage
                }
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            Exit::Usage
        }
    }
}

type Failure = Box<dyn std::error::Error>;

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<Exit, Failure> {
    match command {
        Command::Oracle { scenario, at } => {
            let (scenario, _) = load_scenario(&scenario)?;
            let solution = compute_maxmin(&scenario, &scenario.active_at(&at));
            write!(out, "{}", render_rates(&solution, &at))?;
            Ok(Exit::Success)
        }
        Command::Verify {
            scenario,
            at,
            rates,
        } => {
            let (scenario, _) = load_scenario(&scenario)?;
            let text = read_input(&rates)?;
            let rates = parse_rates(&text)?;
            let flows = scenario.active_at(&at);
            match verify_maxmin(&scenario, &flows, &rates) {
                Ok(()) => {
                    writeln!(out, "pass")?;
                    Ok(Exit::Success)
                }
                Err(ce) => {
                    writeln!(out, "fail: {ce}")?;
                    Ok(Exit::Violation)
                }
            }
        }
        Command::Simulate(args) => simulate(&args, out, err),
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
    }
}

/// Files and status of one simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOutcome {
    pub seed: u64,
    pub exit: Exit,
    pub trace: String,
    pub report: String,
    pub series: String,
    /// Monitor violation record, if the run aborted.
    pub violation: Option<String>,
}

fn sim_options(monitors: Monitors, policy: OnOff) -> SimOptions {
    SimOptions {
        rate_policy: match policy {
            OnOff::On => ActualRatePolicy::Delayed,
            OnOff::Off => ActualRatePolicy::Immediate,
        },
        check_m_consistency: monitors.m_consistency,
        check_lower_bound: monitors.lower_bound,
        check_feasibility: monitors.feasibility,
        ..SimOptions::default()
    }
}

/// Run one scenario once and render every output.
pub fn simulate_scenario(scenario: &Scenario, options: &SimOptions, perturb: bool) -> SimOutcome {
    let seed = scenario.seed();
    let world = if perturb {
        inject_initial_conditions(scenario, seed)
    } else {
        InitialWorld::clean()
    };
    match run_from(scenario, options, world) {
        Ok((trace, report)) => SimOutcome {
            seed,
            exit: if report.all_converged() {
                Exit::Success
            } else {
                Exit::NotConverged
            },
            trace: trace.to_text(),
            report: render_report(&report, seed),
            series: render_series(&trace),
            violation: None,
        },
        Err(v) => SimOutcome {
            seed,
            exit: Exit::Violation,
            trace: String::new(),
            report: String::new(),
            series: String::new(),
            violation: Some(v.to_string()),
        },
    }
}

fn prepare(
    args: &SimulateArgs,
    seed: Option<u64>,
) -> Result<(Scenario, Monitors), ScenarioFileError> {
    let mut file = parse_scenario(&args.scenario)?;
    if let Some(seed) = seed {
        file.config.seed = seed;
    }
    if let Some(d) = &args.duration {
        file.config.duration = d.clone();
    }
    let scenario = validate_scenario(file.config).map_err(ScenarioFileError::Invalid)?;
    Ok((scenario, file.monitors))
}

fn write_outputs(dir: &Path, outcome: &SimOutcome) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(v) = &outcome.violation {
        std::fs::write(dir.join("violation.txt"), format!("{v}\n"))?;
        return Ok(());
    }
    std::fs::write(dir.join("trace.txt"), &outcome.trace)?;
    std::fs::write(dir.join("report.txt"), &outcome.report)?;
    std::fs::write(dir.join("series.tsv"), &outcome.series)
}

fn simulate(
    args: &SimulateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Exit, Failure> {
    let Some(range) = args.seeds.clone() else {
        let (scenario, monitors) = prepare(args, args.seed)?;
        let outcome =
            simulate_scenario(&scenario, &sim_options(monitors, args.policy), args.perturb);
        if let Some(dir) = &args.out {
            write_outputs(dir, &outcome)?;
        }
        match &outcome.violation {
            Some(v) => writeln!(err, "monitor violation: {v}")?,
            None => write!(out, "{}", outcome.report)?,
        }
        return Ok(outcome.exit);
    };

    let prepared: Vec<(Scenario, Monitors)> = range
        .map(|seed| prepare(args, Some(seed)))
        .collect::<Result<_, _>>()?;
    let outcomes: Vec<SimOutcome> = prepared
        .par_iter()
        .map(|(s, m)| simulate_scenario(s, &sim_options(*m, args.policy), args.perturb))
        .collect();
    let mut worst = Exit::Success;
    for o in &outcomes {
        if let Some(dir) = &args.out {
            write_outputs(&dir.join(format!("seed-{}", o.seed)), o)?;
        }
        let status = match (&o.violation, o.exit) {
            (Some(v), _) => format!("monitor violation: {v}"),
            (None, Exit::NotConverged) => "not converged".to_string(),
            (None, _) => "converged".to_string(),
        };
        writeln!(out, "seed {}: {status}", o.seed)?;
        worst = worst.max(o.exit);
    }
    Ok(worst)
}
