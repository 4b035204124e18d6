//! Correction recall with scripted models: one that always remembers the
//! correction and one that forgets it after five unrelated steps.
//!
//! ```text
//! cargo run --example recall_experiment
//! ```

use dscorrect::gateway::KITCHEN_RECALL;
use dscorrect::llm::{recall_experiment, MockClient, ModelClient, Policy, RecallScenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario: RecallScenario = toml::from_str(KITCHEN_RECALL)?;
    let ns = [0, 2, 5, 10, 15];
    for (name, policy) in [("perfect recall", Policy::perfect_recall()), ("forgets after 5", Policy::forget_after(5))] {
        let mut make = || Box::new(MockClient::new(policy.clone())) as Box<dyn ModelClient>;
        let rows = recall_experiment(&mut make, &scenario, &ns, 20, 1)?;
        let cells: Vec<String> =
            rows.iter().map(|r| format!("n={:<2} {:>3.0}%", r.n, r.success_rate * 100.0)).collect();
        println!("{name:<16} {}", cells.join("  "));
    }
    Ok(())
}
