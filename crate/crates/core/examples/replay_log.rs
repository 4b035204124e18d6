//! Records the correction scenario, writes it as JSON lines, reads it back
//! and turns it into the wire frames a replay client would receive.
//!
//! ```text
//! cargo run --example replay_log
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use dscorrect::gateway::replay_frames;
use dscorrect::sim::{run_scenario, EventLog, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/correction_push.toml"))?;
    let log = run_scenario(&scenario)?;
    let path = std::env::temp_dir().join("correction_push.jsonl");
    log.write_jsonl(std::fs::File::create(&path)?)?;
    println!("wrote {} records to {}", log.len(), path.display());

    let back = EventLog::read_jsonl(std::io::BufReader::new(std::fs::File::open(&path)?))?;
    assert_eq!(back, log);
    let frames = replay_frames(&back);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for f in &frames {
        *counts.entry(f.type_name()).or_default() += 1;
    }
    for (kind, n) in counts {
        println!("{kind:<18} {n}");
    }
    if let Some(f) = frames.iter().find(|f| f.type_name() == "state_snapshot") {
        println!("\nfirst frame on the wire:\n{}", f.to_json());
    }
    Ok(())
}
