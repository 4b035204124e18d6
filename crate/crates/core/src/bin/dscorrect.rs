use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dscorrect::gateway::{self, CliError};

#[derive(Parser)]
#[command(name = "dscorrect", version, about = "Physically correctable LLM-planned robot simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClientArg {
    Mock,
    Live,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, headless or as an interactive session.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        headless: bool,
        /// Event log output (JSON lines).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Listen address for interactive sessions.
        #[arg(long, default_value = "127.0.0.1:8765")]
        bind: String,
    },
    /// Re-broadcast a recorded log over the wire protocol.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Playback speed multiplier; 0 sends as fast as possible.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long, default_value = "127.0.0.1:8765")]
        bind: String,
        /// Write frames as JSON lines to this file instead of serving them.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correction-recall experiment; prints `n,success_rate` CSV.
    RecallExp {
        #[arg(long, value_delimiter = ',', default_value = "0,5,10,15")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, value_enum, default_value = "mock")]
        client: ClientArg,
        /// Mock policy file; defaults to perfect recall.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Recall scenario file; defaults to the built-in kitchen.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV output file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract confidence, resample-rate and estimate time series.
    Plot {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { scenario, seed, headless, log, bind } => {
            gateway::cli_run(&scenario, seed, headless, log.as_deref(), &bind)
        }
        Command::Replay { log, speed, bind, out } => gateway::cli_replay(&log, speed, &bind, out.as_deref()),
        Command::RecallExp { n, trials, client, policy, scenario, seed, out } => gateway::cli_recall(
            &n,
            trials,
            matches!(client, ClientArg::Live),
            policy.as_deref(),
            scenario.as_deref(),
            seed,
            out.as_deref(),
        ),
        Command::Plot { log, out } => gateway::cli_plot(&log, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Invalid(_) => 2,
                CliError::Scenario(_) => 3,
                CliError::Runtime(_) => 4,
            })
        }
    }
}
