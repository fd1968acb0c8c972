//! The `canteen` command line: strategy analysis, knowledge tables,
//! Monte Carlo simulation, the live session server and log replay.
//!
//! [`parse`] and [`execute`] are split from `main` so tests can drive them
//! with in-memory output.

mod table;

use std::error::Error;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use canteen_core::epistemic::{knowledge_table, message_chain_model};
use canteen_core::session::{parse_jsonl, replay};
use canteen_core::sim::{run_monte_carlo, Policy, SessionConfig};
use canteen_core::strategy::{
    cutoff_table, expected_utility, pareto_front, StrategyProfile, UtilityModel,
};
use canteen_core::strategy::{Classification, ParetoReport};
use canteen_core::{ArrivalTime, TimeRange};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

pub use table::{emit, Table};

/// Environment variable that replaces `--seed` when set.
pub const SEED_ENV: &str = "CANTEEN_SEED";

/// Message counts covered by the message-chain table.
pub const MESSAGE_CHAIN_MAX: u32 = 10;

pub type CliResult<T> = Result<T, Box<dyn Error + Send + Sync>>;

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(
    name = "canteen",
    version,
    about = "Canteen coordination game workbench"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct Output {
    /// Write one CSV file per table into DIR instead of printing CSV
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Print aligned human-readable tables instead of CSV
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Exhaustive Pareto analysis with the expected-utility table and lemma checks
    Analyze {
        #[arg(long, default_value = "8:10")]
        tmin: ArrivalTime,
        #[arg(long, default_value = "9:10")]
        tmax: ArrivalTime,
        #[command(flatten)]
        output: Output,
    },
    /// Knowledge label per arrival time and message-chain depths
    Epistemic {
        #[arg(long, default_value = "8:10")]
        tmin: ArrivalTime,
        #[arg(long, default_value = "9:10")]
        tmax: ArrivalTime,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo sessions between two policies
    Simulate {
        #[arg(long, default_value = "8:00")]
        tmin: ArrivalTime,
        #[arg(long, default_value = "9:10")]
        tmax: ArrivalTime,
        /// Rounds per session
        #[arg(long, default_value_t = 10)]
        rounds: u32,
        /// Starting bonus per player
        #[arg(long, default_value_t = 10.0)]
        endowment: f64,
        /// Master seed; CANTEEN_SEED overrides it
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// all_office | before9 | cutoff:H:MM | mixed:H:MM:q | logistic:a:b
        #[arg(long, default_value = "before9")]
        policy1: Policy,
        #[arg(long, default_value = "before9")]
        policy2: Policy,
        /// Number of sessions
        #[arg(long, default_value_t = 1000)]
        sessions: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Run the session server: TCP on PORT, HTTP on PORT+1
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
    },
    /// Recompute every penalty in a JSONL session log and print mismatches
    Replay {
        /// Log file, or - for standard input
        file: PathBuf,
        /// Starting bonus the sessions were played with
        #[arg(long, default_value_t = 10.0)]
        endowment: f64,
    },
}

/// Parses arguments (without the program name), reading `CANTEEN_SEED`.
pub fn parse<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let env = std::env::var(SEED_ENV).ok();
    parse_with_seed_env(argv, env.as_deref())
}

/// [`parse`] with the seed override passed in explicitly.
pub fn parse_with_seed_env<I, T>(argv: I, seed_env: Option<&str>) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let args = std::iter::once("canteen".to_string()).chain(argv.into_iter().map(Into::into));
    let mut cli = Cli::try_parse_from(args)?;
    if let (Some(raw), Command::Simulate { seed, .. }) = (seed_env, &mut cli.command) {
        *seed = raw.trim().parse().map_err(|_| {
            Cli::command().error(
                ErrorKind::ValueValidation,
                format!("{SEED_ENV}={raw:?} is not an unsigned integer"),
            )
        })?;
    }
    Ok(cli)
}

/// Runs a command. Returns the process exit code; errors are I/O or model
/// failures that should also exit nonzero.
pub fn execute(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    match cmd {
        Command::Analyze { tmin, tmax, output } => {
            let tables = analyze_tables(&TimeRange::new(*tmin, *tmax)?)?;
            emit(&tables, output.out.as_deref(), output.pretty, stdout)?;
        }
        Command::Epistemic { tmin, tmax, output } => {
            let tables = epistemic_tables(&TimeRange::new(*tmin, *tmax)?)?;
            emit(&tables, output.out.as_deref(), output.pretty, stdout)?;
        }
        Command::Simulate {
            tmin,
            tmax,
            rounds,
            endowment,
            seed,
            policy1,
            policy2,
            sessions,
            output,
        } => {
            let cfg = SessionConfig {
                range: TimeRange::new(*tmin, *tmax)?,
                max_rounds: *rounds,
                endowment: *endowment,
                seed: *seed,
            };
            let tables = simulate_tables(&cfg, policy1, policy2, *sessions)?;
            emit(&tables, output.out.as_deref(), output.pretty, stdout)?;
        }
        Command::Serve { port } => serve(*port, stderr)?,
        Command::Replay { file, endowment } => return replay_log(file, *endowment, stdout, stderr),
    }
    Ok(0)
}

fn eu(x: f64) -> String {
    format!("{x:.6}")
}

/// Short name for symmetric cut-off profiles; the raw strategies otherwise.
fn describe(p: &StrategyProfile, range: &TimeRange) -> String {
    if p.s1 != p.s2 {
        return "asymmetric".into();
    }
    match p.s1.classify() {
        c if c.is_all_office(range) => "all_office".into(),
        c @ Classification::Cutoff(_) => c.to_string(),
        Classification::NonCutoff => "non_cutoff".into(),
    }
}

/// Front, expected-utility and lemma tables under log scoring at the
/// highest certainty.
pub fn analyze_tables(range: &TimeRange) -> CliResult<Vec<Table>> {
    let model = UtilityModel::default();
    let report = pareto_front(range, &model)?;

    let mut front = Table::new(
        "analyze_front",
        &["component", "profile", "strategies", "eu"],
    );
    for (i, c) in report.components.iter().enumerate() {
        for r in &c.front {
            let p = r.to_profile(range);
            front.push([
                (i + 1).to_string(),
                describe(&p, range),
                p.to_string(),
                eu(c.eu),
            ]);
        }
    }
    for p in &report.front {
        front.push([
            "all".to_string(),
            describe(p, range),
            p.to_string(),
            eu(report.eu),
        ]);
    }

    let mut table = Table::new("analyze_eu", &["profile", "eu_per_round"]);
    table.push([
        "all_office".to_string(),
        eu(expected_utility(
            &StrategyProfile::all_office(range),
            range,
            &model,
        )),
    ]);
    for (class, value) in cutoff_table(range, &model) {
        table.push([class.to_string(), eu(value)]);
    }

    Ok(vec![front, table, checks_table(&report)])
}

fn checks_table(report: &ParetoReport) -> Table {
    let mut t = Table::new("analyze_checks", &["scope", "check", "value"]);
    for (i, c) in report.components.iter().enumerate() {
        let scope = format!("component{}", i + 1);
        t.push([
            scope.as_str(),
            "no_late_canteen",
            &c.no_late_canteen.to_string(),
        ]);
        t.push([
            scope.as_str(),
            "no_office_then_canteen",
            &c.no_office_then_canteen.to_string(),
        ]);
        t.push([
            scope.as_str(),
            "office_or_855",
            &c.office_or_855.to_string(),
        ]);
    }
    t.push([
        "all",
        "no_late_canteen",
        &report.no_late_canteen.to_string(),
    ]);
    t.push([
        "all",
        "no_office_then_canteen",
        &report.no_office_then_canteen.to_string(),
    ]);
    t.push(["all", "office_or_855", &report.office_or_855.to_string()]);
    t.push([
        "all",
        "front_is_all_office",
        &report.front_is_all_office().to_string(),
    ]);
    t.push([
        "all",
        "front_is_cutoff_8:55",
        &report.front_is_cutoff_855().to_string(),
    ]);
    t.push(["all", "profiles_enumerated", &report.enumerated.to_string()]);
    t
}

/// Knowledge label per arrival time, then message-chain depths.
pub fn epistemic_tables(range: &TimeRange) -> CliResult<Vec<Table>> {
    let mut labels = Table::new("epistemic_labels", &["arrival_time", "label"]);
    for (t, label) in knowledge_table(range)? {
        labels.push([t.to_string(), label.to_string()]);
    }
    let mut chain = Table::new("message_chain", &["delivered", "depth"]);
    for k in 0..=MESSAGE_CHAIN_MAX {
        chain.push([k.to_string(), message_chain_model(k)?.depth.to_string()]);
    }
    Ok(vec![labels, chain])
}

pub fn simulate_tables(
    cfg: &SessionConfig,
    p1: &Policy,
    p2: &Policy,
    sessions: u64,
) -> CliResult<Vec<Table>> {
    let stats = run_monte_carlo(cfg, p1, p2, sessions)?;
    Ok(vec![
        Table::from_csv("simulate_summary", &stats.summary_csv())?,
        Table::from_csv("simulate_outcomes", &stats.outcomes_csv())?,
    ])
}

fn replay_log(
    file: &PathBuf,
    endowment: f64,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<i32> {
    let text = if file.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?
    };
    let records = parse_jsonl(&text)?;
    let issues = replay(&records, endowment);
    for issue in &issues {
        writeln!(stdout, "{issue}")?;
    }
    let sessions: std::collections::BTreeSet<&str> =
        records.iter().map(|r| r.session.as_str()).collect();
    writeln!(
        stderr,
        "{} records in {} sessions, {} mismatches",
        records.len(),
        sessions.len(),
        issues.len()
    )?;
    Ok(if issues.is_empty() { 0 } else { 1 })
}

fn serve(port: u16, stderr: &mut dyn Write) -> CliResult<()> {
    use canteen_server::{run, AppState, Clock, ServerConfig};

    let _ = tracing_subscriber::fmt().with_writer(io::stderr).try_init();
    let cfg = ServerConfig::localhost(port);
    writeln!(stderr, "tcp {} http {}; ctrl-c to stop", cfg.tcp, cfg.http)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        tokio::select! {
            r = run(cfg, AppState::new(Clock::system())) => r,
            r = tokio::signal::ctrl_c() => r,
        }
    })?;
    Ok(())
}
