//! One planning round trip without the simulator: build the prompts for a
//! kitchen state, ask a scripted model, parse its command and record the
//! step. The second round reports a physical correction.
//!
//! Set `LLM_API_KEY` and pass `--live` to ask a real chat-completions
//! endpoint instead.
//!
//! ```text
//! cargo run --example llm_prompting [-- --live]
//! ```

use nalgebra::Vector3;

use dscorrect::llm::{
    build_bundle, correction_sentence, decide, transcript_entry, LastResult, LiveClient, LiveConfig, MockClient,
    ModelClient, OrchestratorConfig, Policy, PromptState, Transcript,
};
use dscorrect::pose::Pose;
use dscorrect::scene::{
    ActionDictionary, Category, DictionaryConfig, HeldState, Scene, SceneObject, SemanticAction, Verb,
};

const POLICY: &str = r##"
fallback = "# Place ; on the counter & Keep the pot out of the way."

[[rule]]
prompt_contains = "pushing it to: 'on the stove'"
respond = ["# Place ; on the stove & The human moved the pot to the stove."]
"##;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let o = |id: &str, label: &str, category, p: [f64; 3]| SceneObject {
        id: id.into(),
        label: label.into(),
        category,
        pose: Pose::from_position(p.into()),
        atop: None,
    };
    let scene = Scene::new(vec![
        o("pot", "cooking pot", Category::A, [0.45, -0.1, 0.0]),
        o("stove", "on the stove", Category::B, [0.55, 0.2, 0.0]),
        o("counter", "on the counter", Category::B, [0.6, -0.35, 0.0]),
    ])?;
    let held = HeldState { robot: Some("pot".into()), human: None };
    let dict = ActionDictionary::build(
        &scene,
        &held,
        &Pose::from_position(Vector3::new(0.4, 0.0, 0.3)),
        &DictionaryConfig::default(),
    )?;

    let mut client: Box<dyn ModelClient> = if std::env::args().any(|a| a == "--live") {
        Box::new(LiveClient::from_env(LiveConfig::default())?)
    } else {
        Box::new(MockClient::new(Policy::from_toml(POLICY)?))
    };
    let cfg = OrchestratorConfig::default();
    let mut transcript = Transcript::new();

    let state = PromptState {
        scene: &scene,
        held: &held,
        human_approach: None,
        planned: None,
        last_result: None,
        correction: None,
        dictionary: &dict,
    };
    let bundle = build_bundle(&state)?;
    println!("--- system prompt ---\n{}\n", bundle.system_prompt);
    println!("--- user ---\n{}\n", bundle.user_prompt);
    let d = decide(client.as_mut(), &bundle, &scene, &dict, &transcript, &cfg);
    println!("--- model ---\n{}\n=> {:?} after {} attempt(s)\n", d.response, d.action, d.attempts);
    transcript.push(transcript_entry(0, &bundle, &d));

    // the human pushes the pot onto the stove instead
    let corrected = SemanticAction::new(Verb::Move, "stove");
    transcript.record_correction(corrected.clone(), correction_sentence(&scene, &corrected));
    let last = d.action.map(|action| LastResult::Succeeded { action });
    let bundle = build_bundle(&PromptState { correction: Some(&corrected), last_result: last.as_ref(), ..state })?;
    println!("--- user ---\n{}\n", bundle.user_prompt);
    let d = decide(client.as_mut(), &bundle, &scene, &dict, &transcript, &cfg);
    println!("--- model ---\n{}\n=> {:?}", d.response, d.action);
    Ok(())
}
