//! Runs the scripted cooking task headless and prints the task timeline:
//! model queries, executed actions, the physical correction and pick/place
//! effects.
//!
//! ```text
//! cargo run --example cooking_scenario [-- path/to/scenario.toml]
//! ```

use std::path::PathBuf;

use dscorrect::sim::{run_scenario, Event, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/cooking.toml")));
    let scenario = Scenario::load(&path)?;
    let log = run_scenario(&scenario)?;

    for r in &log.records {
        let t = r.tick as f64 / 200.0;
        match &r.event {
            Event::LlmAction { step, action: Some(a), .. } => println!("{t:6.2}s  step {step}: model says {a}"),
            Event::LlmAction { step, failure: Some(f), .. } => println!("{t:6.2}s  step {step}: model failed ({f})"),
            Event::CorrectionStart { c_lin, c_rot } => {
                println!("{t:6.2}s  correction starts (c_lin {c_lin:.2}, c_rot {c_rot:.2})")
            }
            Event::CorrectionEnd { .. } => println!("{t:6.2}s  correction ends"),
            Event::SemanticCorrection { action, .. } => println!("{t:6.2}s  human corrected to {action}"),
            Event::Pick { object } => println!("{t:6.2}s  picked {object}"),
            Event::Place { object, location } => println!("{t:6.2}s  placed {object} at {location}"),
            _ => {}
        }
    }
    let samples = log.of_kind("confidence_sample").count();
    println!("{} events, {samples} estimator ticks", log.len());
    Ok(())
}
