//! Entry points behind the `dscorrect` subcommands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::llm::{
    recall_experiment, write_recall_csv, LiveClient, LiveConfig, MockClient, ModelClient, Policy, RecallScenario,
};
use crate::sim::{run_scenario, EventLog, Scenario, ScenarioError, SimError};

use super::plot::write_plot_csvs;
use super::session::{replay_frames, serve_replay, serve_session, SessionError, SessionOptions};

/// Built-in kitchen used by `recall-exp` when no scenario is given.
pub const KITCHEN_RECALL: &str = include_str!("../../scenarios/recall_kitchen.toml");

/// Success rates (percent) a strong chat model reaches at n = 0, 5, 10, 15.
const REFERENCE_RECALL: [(usize, f64); 4] = [(0, 100.0), (5, 85.0), (10, 85.0), (15, 80.0)];

/// Failure classes; the binary maps them to exit codes 2, 3 and 4.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Scenario(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Scenario(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Scenario(e) => e.into(),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Sim(e) => e.into(),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write_log(log: &EventLog, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(io_err(p))?);
            log.write_jsonl(&mut w).and_then(|_| w.flush()).map_err(io_err(p))
        }
        None => log.write_jsonl(std::io::stdout().lock()).map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn read_log(path: &Path) -> Result<EventLog, CliError> {
    let f = File::open(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    EventLog::read_jsonl(BufReader::new(f)).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// `run`: headless writes the event log (stdout without `--log`);
/// otherwise serves an interactive session on `bind` and writes the log
/// when the scenario ends.
pub fn cli_run(
    scenario: &Path,
    seed: Option<u64>,
    headless: bool,
    log: Option<&Path>,
    bind: &str,
) -> Result<(), CliError> {
    let mut sc = Scenario::load(scenario)?;
    if let Some(s) = seed {
        sc.run.seed = s;
    }
    let events = if headless {
        run_scenario(&sc)?
    } else {
        eprintln!("waiting for a client on ws://{bind}");
        serve_session(&sc, bind, SessionOptions::default())?
    };
    if headless || log.is_some() {
        write_log(&events, log)?;
    }
    Ok(())
}

/// `replay`: streams a log over the wire protocol, or writes the frames
/// as JSON lines to `out`.
pub fn cli_replay(log: &Path, speed: f64, bind: &str, out: Option<&Path>) -> Result<(), CliError> {
    if !(speed.is_finite() && speed >= 0.0) {
        return Err(CliError::Invalid(format!("speed must be a non-negative number, got {speed}")));
    }
    let events = read_log(log)?;
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(io_err(p))?);
            for f in replay_frames(&events) {
                writeln!(w, "{}", f.to_json()).map_err(io_err(p))?;
            }
            w.flush().map_err(io_err(p))
        }
        None => Ok(serve_replay(&events, bind, speed, None)?),
    }
}

/// `recall-exp`: runs the correction-recall experiment and writes the
/// `n,success_rate` table.
pub fn cli_recall(
    n_values: &[usize],
    trials: usize,
    live: bool,
    policy: Option<&Path>,
    scenario: Option<&Path>,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if trials == 0 || n_values.is_empty() {
        return Err(CliError::Invalid("need at least one trial and one n value".into()));
    }
    let text = match scenario {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Scenario(format!("{}: {e}", p.display())))?,
        None => KITCHEN_RECALL.to_string(),
    };
    let sc: RecallScenario = toml::from_str(&text).map_err(|e| CliError::Scenario(e.to_string()))?;
    let mut make: Box<dyn FnMut() -> Box<dyn ModelClient>> = if live {
        LiveClient::from_env(LiveConfig::default()).map_err(|e| CliError::Runtime(e.to_string()))?;
        Box::new(|| match LiveClient::from_env(LiveConfig::default()) {
            Ok(c) => Box::new(c) as Box<dyn ModelClient>,
            Err(_) => Box::new(MockClient::new(Policy::default())),
        })
    } else {
        let policy = match policy {
            Some(p) => Policy::load(p).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?,
            None => Policy::perfect_recall(),
        };
        Box::new(move || Box::new(MockClient::new(policy.clone())) as Box<dyn ModelClient>)
    };
    let rows =
        recall_experiment(&mut *make, &sc, n_values, trials, seed).map_err(|e| CliError::Scenario(e.to_string()))?;
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(io_err(p))?);
            write_recall_csv(&rows, &mut w).and_then(|_| w.flush()).map_err(io_err(p))?;
        }
        None => write_recall_csv(&rows, std::io::stdout().lock()).map_err(|e| CliError::Runtime(e.to_string()))?,
    }
    for r in rows.iter().filter(|r| r.errored > 0) {
        eprintln!("n={}: {} of {} final queries failed", r.n, r.errored, r.trials);
    }
    if live {
        eprintln!("n   measured  reference");
        for r in &rows {
            let reference =
                REFERENCE_RECALL.iter().find(|(n, _)| *n == r.n).map_or("-".to_string(), |(_, v)| format!("{v:.0}%"));
            eprintln!("{:<3} {:>7.0}%  {reference:>9}", r.n, r.success_rate * 100.0);
        }
    }
    Ok(())
}

/// `plot`: writes the CSV time series of a log into `out`.
pub fn cli_plot(log: &Path, out: &Path) -> Result<(), CliError> {
    let events = read_log(log)?;
    write_plot_csvs(&events, out).map_err(io_err(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_recall_scenario_is_valid() {
        let sc: RecallScenario = toml::from_str(KITCHEN_RECALL).unwrap();
        sc.validate().unwrap();
    }

    #[test]
    fn bad_speed_is_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.jsonl");
        std::fs::write(&p, "").unwrap();
        assert!(matches!(cli_replay(&p, -1.0, "127.0.0.1:0", None), Err(CliError::Invalid(_))));
        cli_replay(&p, 1.0, "127.0.0.1:0", None).unwrap();
    }
}
