//! Language-model task planner: prompts, command parsing, the interaction
//! transcript, model clients and the correction-recall experiment.

mod client;
mod live;
mod mock;
mod parse;
mod prompt;
mod recall;
mod transcript;

pub use client::{ChatMessage, ClientError, ModelClient, ModelReply, ModelRequest, Role};
pub use live::{LiveClient, LiveConfig};
pub use mock::{MockClient, Policy, PolicyError, Rule};
pub use parse::{parse_response, ParseError, ParsedResponse};
pub use prompt::{
    action_phrase, build_bundle, build_user_prompt, command_body, correction_sentence, summarize, system_prompt,
    LastResult, PromptBundle, PromptError, PromptState, StateSummary, FORMAT_REMINDER, NOTHING,
};
pub use recall::{recall_experiment, write_recall_csv, FillerState, RecallError, RecallRow, RecallScenario};
pub use transcript::{ExecutionResult, Transcript, TranscriptEntry};

use serde::{Deserialize, Serialize};

use crate::scene::{ActionDictionary, Scene, SemanticAction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrchestratorConfig {
    /// Transcript entries replayed to the model.
    pub history_window: usize,
    /// Extra attempts after an unusable reply.
    pub retry_budget: usize,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        Self { history_window: 20, retry_budget: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Unparseable,
    Unavailable,
    ModelUnavailable,
}

impl FailureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureKind::Unparseable => "unparseable",
            FailureKind::Unavailable => "unavailable",
            FailureKind::ModelUnavailable => "model_unavailable",
        }
    }
}

/// Outcome of one planning query. `action` is `None` when every attempt
/// failed; the robot then holds position.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: Option<SemanticAction>,
    pub reasoning: String,
    /// Last raw reply, empty if the model never answered.
    pub response: String,
    pub attempts: usize,
    /// Sum of simulated reply latencies, seconds.
    pub latency: f64,
    pub failure: Option<(FailureKind, String)>,
}

/// Chat messages for a query: the system prompt, the windowed history as
/// user/assistant pairs, then the new prompt.
pub fn build_messages(bundle: &PromptBundle, history: &[TranscriptEntry]) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::new(Role::System, bundle.system_prompt.clone())];
    for e in history {
        messages.push(ChatMessage::new(Role::User, e.user_prompt.clone()));
        if !e.response.is_empty() {
            messages.push(ChatMessage::new(Role::Assistant, e.response.clone()));
        }
    }
    messages.push(ChatMessage::new(Role::User, bundle.user_prompt.clone()));
    messages
}

/// Queries the model until it names an available action or the retry
/// budget runs out. Never panics on bad replies.
pub fn decide(
    client: &mut dyn ModelClient,
    bundle: &PromptBundle,
    scene: &Scene,
    dictionary: &ActionDictionary,
    transcript: &Transcript,
    cfg: &OrchestratorConfig,
) -> Decision {
    let history = transcript.recent(cfg.history_window);
    let step = transcript.next_step();
    let mut messages = build_messages(bundle, history);
    let mut decision = Decision {
        action: None,
        reasoning: String::new(),
        response: String::new(),
        attempts: 0,
        latency: 0.0,
        failure: None,
    };

    for attempt in 0..=cfg.retry_budget {
        decision.attempts = attempt + 1;
        let request = ModelRequest { messages: messages.clone(), step, scene, state: &bundle.state, history, attempt };
        let reply = match client.complete(&request) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("model query failed (attempt {}): {e}", attempt + 1);
                decision.failure = Some((FailureKind::ModelUnavailable, e.to_string()));
                continue;
            }
        };
        decision.latency += reply.latency;
        decision.response = reply.text.clone();
        let problem = match parse_response(&reply.text, scene) {
            Ok(p) if dictionary.contains(&p.action) => {
                decision.action = Some(p.action);
                decision.reasoning = p.reasoning;
                decision.failure = None;
                return decision;
            }
            Ok(p) => {
                (FailureKind::Unavailable, format!("'{}' is not an available action", action_phrase(scene, &p.action)))
            }
            Err(e) => (FailureKind::Unparseable, e.to_string()),
        };
        log::debug!("unusable reply (attempt {}): {}", attempt + 1, problem.1);
        messages.push(ChatMessage::new(Role::Assistant, reply.text));
        messages.push(ChatMessage::new(Role::User, format!("{} ({})", FORMAT_REMINDER, problem.1)));
        decision.failure = Some(problem);
    }
    decision
}

/// Transcript entry recording `decision` for `bundle`.
pub fn transcript_entry(step: u64, bundle: &PromptBundle, decision: &Decision) -> TranscriptEntry {
    TranscriptEntry {
        step,
        user_prompt: bundle.user_prompt.clone(),
        state_key: bundle.state.key(),
        response: decision.response.clone(),
        reasoning: decision.reasoning.clone(),
        proposed_action: decision.action.clone(),
        execution_result: match &decision.failure {
            None => ExecutionResult::Pending,
            Some((kind, _)) => ExecutionResult::Failed { reason: kind.as_str().to_string() },
        },
        correction: None,
        correction_text: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Pose;
    use crate::scene::{Category, DictionaryConfig, HeldState, SceneObject, Verb};
    use nalgebra::Vector3;

    fn setup() -> (Scene, ActionDictionary, PromptBundle) {
        let o = |id: &str, label: &str, c, x: f64| SceneObject {
            id: id.into(),
            label: label.into(),
            category: c,
            pose: Pose::from_position(Vector3::new(x, 0.0, 0.0)),
            atop: None,
        };
        let scene =
            Scene::new(vec![o("pot", "cooking pot", Category::A, 0.5), o("stove", "on the stove", Category::B, 0.0)])
                .unwrap();
        let held = HeldState::nothing();
        let dict = ActionDictionary::build(&scene, &held, &Pose::identity(), &DictionaryConfig::default()).unwrap();
        let bundle = build_bundle(&PromptState {
            scene: &scene,
            held: &held,
            human_approach: None,
            planned: None,
            last_result: None,
            correction: None,
            dictionary: &dict,
        })
        .unwrap();
        (scene, dict, bundle)
    }

    fn policy(responses: &[&str]) -> MockClient {
        MockClient::new(Policy {
            rules: vec![Rule { respond: responses.iter().map(|s| s.to_string()).collect(), ..Rule::default() }],
            ..Policy::default()
        })
    }

    #[test]
    fn first_valid_reply_wins() {
        let (scene, dict, bundle) = setup();
        let mut c = policy(&["# Pick ; cooking pot & It is closest."]);
        let d = decide(&mut c, &bundle, &scene, &dict, &Transcript::new(), &OrchestratorConfig::default());
        assert_eq!(d.action, Some(SemanticAction::new(Verb::Pick, "pot")));
        assert_eq!(d.attempts, 1);
        assert_eq!(d.reasoning, "It is closest.");
    }

    #[test]
    fn retries_then_succeeds() {
        let (scene, dict, bundle) = setup();
        let mut c = policy(&["I think we should pick it.", "# Place ; on the stove &", "# Pick ; cooking pot &"]);
        let d = decide(&mut c, &bundle, &scene, &dict, &Transcript::new(), &OrchestratorConfig::default());
        assert_eq!(d.action, Some(SemanticAction::new(Verb::Pick, "pot")));
        assert_eq!(d.attempts, 3);
    }

    #[test]
    fn exhausted_budget_holds() {
        let (scene, dict, bundle) = setup();
        let mut c = policy(&["no command here"]);
        let d = decide(&mut c, &bundle, &scene, &dict, &Transcript::new(), &OrchestratorConfig::default());
        assert_eq!(d.action, None);
        assert_eq!(d.attempts, 3);
        assert_eq!(d.failure.as_ref().unwrap().0, FailureKind::Unparseable);
        let e = transcript_entry(0, &bundle, &d);
        assert_eq!(e.execution_result, ExecutionResult::Failed { reason: "unparseable".into() });

        let mut dead = MockClient::new(Policy::default());
        let d = decide(&mut dead, &bundle, &scene, &dict, &Transcript::new(), &OrchestratorConfig::default());
        assert_eq!(d.failure.unwrap().0, FailureKind::ModelUnavailable);
    }

    #[test]
    fn history_is_windowed() {
        let (scene, dict, bundle) = setup();
        let mut t = Transcript::new();
        let mut c = policy(&["# Pick ; cooking pot &"]);
        let cfg = OrchestratorConfig::default();
        for _ in 0..25 {
            let d = decide(&mut c, &bundle, &scene, &dict, &t, &cfg);
            t.push(transcript_entry(t.next_step(), &bundle, &d));
        }
        let msgs = build_messages(&bundle, t.recent(cfg.history_window));
        // system + 20 user/assistant pairs + current prompt
        assert_eq!(msgs.len(), 1 + 40 + 1);
    }
}
