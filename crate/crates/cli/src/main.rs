use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qgame_cli::commands;
use qgame_cli::output::Summary;
use qgame_cli::{exit, CliError, ExperimentConfig};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  at least one sweep run failed (the sweep CSV is still written)
  2  invalid configuration or arguments
  3  instability (a cycle exceeded the safety limit without truncation)
  4  I/O error
  5  verification ran but epsilon_hi exceeds the target
  6  oracle queried outside its domain

Output directory: --out, else [output] directory, else $QGAME_OUT_DIR, else \".\".";

#[derive(Parser)]
#[command(name = "qgame", version, about = "Equilibrium search for queueing games by stochastic approximation")]
#[command(after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment description (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `verify.target_eps`.
    #[arg(long)]
    target_eps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the iteration and write the trajectory and a summary.
    #[command(after_help = EXIT_CODES)]
    Solve {
        #[command(flatten)]
        common: Common,
        /// Verify the final strategy afterwards.
        #[arg(long)]
        certify: bool,
    },
    /// Estimate the epsilon-gap of a given strategy.
    #[command(after_help = EXIT_CODES)]
    Verify {
        #[command(flatten)]
        common: Common,
        /// `0.4,0.6`, `[0.4,0.6]` or `[[1,0],[0.3,0.7],...]`.
        #[arg(long, conflicts_with = "from_summary", required_unless_present = "from_summary")]
        strategy: Option<String>,
        /// Take the final strategy from a solve summary.
        #[arg(long)]
        from_summary: Option<PathBuf>,
    },
    /// Run the seed x gamma0 grid from `[sweep]`.
    #[command(after_help = EXIT_CODES)]
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form M/M/1 equilibrium and threshold.
    #[command(after_help = EXIT_CODES, allow_negative_numbers = true)]
    Oracle {
        /// Arrival rate; omit for the workload threshold only.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        reward: f64,
        #[arg(long)]
        cost: f64,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.output.directory.clone())
        .or_else(|| std::env::var_os("QGAME_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, dir))
}

fn print_certificate(v: &qgame_cli::output::Verification) {
    let c = &v.certificate;
    println!(
        "epsilon_hat {}  epsilon_hi {}  confidence {}  certified {}",
        c.epsilon_hat,
        c.epsilon_hi,
        c.confidence,
        c.certified.map_or("n/a".into(), |b| b.to_string())
    );
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { common, certify } => {
            let (cfg, dir) = load(&common)?;
            let out = commands::solve(&cfg, &dir, certify, common.target_eps)?;
            let t = &out.trajectory.totals;
            println!("final strategy {}", out.trajectory.final_strategy);
            println!(
                "iterations {}  arrivals {}  cap hits {}  {:.2}s",
                t.iterations, t.arrivals, t.cap_hits, t.wall_clock_secs
            );
            wrote(&out.csv);
            wrote(&out.summary);
            if let Some(v) = &out.verification {
                print_certificate(v);
                commands::require_certified(v)?;
            }
        }
        Command::Verify { common, strategy, from_summary } => {
            let (cfg, dir) = load(&common)?;
            let strategy = match (strategy, from_summary) {
                (Some(s), _) => commands::parse_strategy(&s, cfg.build_model()?.as_ref())?,
                (None, Some(p)) => Summary::load(&p)?.final_strategy,
                (None, None) => unreachable!("clap requires one of the two"),
            };
            let (v, path) = commands::verify(&cfg, &strategy, &dir, common.target_eps)?;
            for (s, row) in v.estimate.values.iter().enumerate() {
                println!("signal {s}: values {row:?}  half-widths {:?}", v.estimate.half_widths[s]);
            }
            print_certificate(&v);
            wrote(&path);
            commands::require_certified(&v)?;
        }
        Command::Sweep { common } => {
            let (cfg, dir) = load(&common)?;
            let out = commands::sweep(&cfg, &dir, common.target_eps)?;
            for row in &out.rows {
                match &row.result {
                    Ok((traj, _)) => println!("seed {} gamma0 {}: {}", row.seed, row.gamma0, traj.final_strategy),
                    Err(e) => eprintln!("seed {} gamma0 {}: {e}", row.seed, row.gamma0),
                }
            }
            wrote(&out.csv);
            let failed = out.failures();
            if failed > 0 {
                return Err(CliError::SweepFailures { failed, total: out.rows.len() });
            }
        }
        Command::Oracle { lambda, mu, reward, cost } => {
            let o = commands::oracle(lambda, mu, reward, cost)?;
            println!("{}", serde_json::to_string_pretty(&o)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
