//! How long does a corrected action stay in the model's memory?
//!
//! Each trial corrects the model once in a target state, plays `n` filler
//! interactions in other states, then shows the target state again and
//! checks whether the corrected action comes back.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    build_bundle, correction_sentence, decide, transcript_entry, ExecutionResult, LastResult, ModelClient,
    OrchestratorConfig, PromptError, PromptState, Transcript,
};
use crate::pose::Pose;
use crate::scene::{ActionDictionary, DictionaryConfig, HeldState, Scene, SceneError, SemanticAction};

#[derive(Debug, Error)]
pub enum RecallError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("corrected action {0} is not available in the target state")]
    CorrectionUnavailable(SemanticAction),
    #[error("recall scenario needs at least one filler state")]
    NoFillers,
}

/// A semantic state to present: who holds what and where the human heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillerState {
    #[serde(default)]
    pub held: HeldState,
    #[serde(default)]
    pub human_approach: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallScenario {
    pub scene: Scene,
    pub target: FillerState,
    pub corrected: SemanticAction,
    pub fillers: Vec<FillerState>,
    #[serde(default)]
    pub dictionary: DictionaryConfig,
}

impl RecallScenario {
    pub fn validate(&self) -> Result<(), RecallError> {
        if self.fillers.is_empty() {
            return Err(RecallError::NoFillers);
        }
        for s in std::iter::once(&self.target).chain(&self.fillers) {
            self.dictionary_for(s)?;
            if let Some(id) = &s.human_approach {
                if self.scene.get(id).is_none() {
                    return Err(SceneError::UnknownObject(id.clone()).into());
                }
            }
        }
        if !self.dictionary_for(&self.target)?.contains(&self.corrected) {
            return Err(RecallError::CorrectionUnavailable(self.corrected.clone()));
        }
        Ok(())
    }

    fn dictionary_for(&self, s: &FillerState) -> Result<ActionDictionary, SceneError> {
        ActionDictionary::build(&self.scene, &s.held, &Pose::identity(), &self.dictionary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallRow {
    pub n: usize,
    pub success_rate: f64,
    pub trials: usize,
    /// Trials whose final query failed at the client or parser.
    pub errored: usize,
}

struct Step<'a> {
    state: &'a FillerState,
    last_result: Option<LastResult>,
    correction: Option<SemanticAction>,
}

fn play(
    client: &mut dyn ModelClient,
    sc: &RecallScenario,
    transcript: &mut Transcript,
    step: Step<'_>,
    cfg: &OrchestratorConfig,
) -> Result<super::Decision, RecallError> {
    let dict = sc.dictionary_for(step.state)?;
    let bundle = build_bundle(&PromptState {
        scene: &sc.scene,
        held: &step.state.held,
        human_approach: step.state.human_approach.as_deref(),
        planned: None,
        last_result: step.last_result.as_ref(),
        correction: step.correction.as_ref(),
        dictionary: &dict,
    })?;
    let decision = decide(client, &bundle, &sc.scene, &dict, transcript, cfg);
    transcript.push(transcript_entry(transcript.next_step(), &bundle, &decision));
    if decision.action.is_some() {
        transcript.set_result(ExecutionResult::Succeeded);
    }
    Ok(decision)
}

fn outcome(d: &super::Decision) -> LastResult {
    match (&d.action, &d.failure) {
        (Some(a), _) => LastResult::Succeeded { action: a.clone() },
        (None, f) => {
            LastResult::Failed { action: None, reason: f.as_ref().map_or("unknown", |(k, _)| k.as_str()).to_string() }
        }
    }
}

/// Runs `trials` trials for every `n`, with a fresh client from
/// `make_client` per trial. Filler states are drawn with a generator
/// seeded from `seed`, `n` and the trial index.
pub fn recall_experiment(
    make_client: &mut dyn FnMut() -> Box<dyn ModelClient>,
    scenario: &RecallScenario,
    n_values: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<RecallRow>, RecallError> {
    scenario.validate()?;
    let cfg = OrchestratorConfig::default();
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut successes = 0;
        let mut errored = 0;
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32) ^ trial as u64);
            let mut client = make_client();
            let mut transcript = Transcript::new();

            let first = play(
                client.as_mut(),
                scenario,
                &mut transcript,
                Step { state: &scenario.target, last_result: None, correction: None },
                &cfg,
            )?;
            transcript.record_correction(
                scenario.corrected.clone(),
                correction_sentence(&scenario.scene, &scenario.corrected),
            );
            let mut pending_correction = Some(scenario.corrected.clone());
            let mut last = outcome(&first);

            for _ in 0..n {
                let filler = &scenario.fillers[rng.random_range(0..scenario.fillers.len())];
                let correction = pending_correction.take();
                let d = play(
                    client.as_mut(),
                    scenario,
                    &mut transcript,
                    Step { state: filler, last_result: Some(last.clone()), correction },
                    &cfg,
                )?;
                last = outcome(&d);
            }

            let correction = pending_correction.take();
            let d = play(
                client.as_mut(),
                scenario,
                &mut transcript,
                Step { state: &scenario.target, last_result: Some(last), correction },
                &cfg,
            )?;
            if d.failure.is_some() {
                errored += 1;
            }
            if d.action.as_ref() == Some(&scenario.corrected) {
                successes += 1;
            }
        }
        let success_rate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        rows.push(RecallRow { n, success_rate, trials, errored });
    }
    Ok(rows)
}

/// Writes `n,success_rate` rows.
pub fn write_recall_csv(rows: &[RecallRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "n,success_rate")?;
    for r in rows {
        writeln!(out, "{},{:?}", r.n, r.success_rate)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{MockClient, Policy};
    use crate::scene::{Category, SceneObject, Verb};
    use nalgebra::Vector3;

    fn scenario() -> RecallScenario {
        let o = |id: &str, label: &str, c, x: f64, y: f64| SceneObject {
            id: id.into(),
            label: label.into(),
            category: c,
            pose: Pose::from_position(Vector3::new(x, y, 0.0)),
            atop: None,
        };
        let scene = Scene::new(vec![
            o("pot", "cooking pot", Category::A, 0.5, 0.0),
            o("water", "gallon of water", Category::A, 0.3, -0.5),
            o("stove", "on the stove", Category::B, 0.5, 0.4),
            o("counter", "on the counter", Category::B, 0.5, -0.4),
        ])
        .unwrap();
        RecallScenario {
            scene,
            target: FillerState { held: HeldState { robot: Some("pot".into()), human: None }, human_approach: None },
            corrected: SemanticAction::new(Verb::Place, "stove"),
            fillers: vec![
                FillerState { held: HeldState::nothing(), human_approach: None },
                FillerState {
                    held: HeldState { robot: Some("water".into()), human: None },
                    human_approach: Some("pot".into()),
                },
            ],
            dictionary: DictionaryConfig::default(),
        }
    }

    fn run(policy: Policy) -> Vec<RecallRow> {
        let mut make = move || Box::new(MockClient::new(policy.clone())) as Box<dyn ModelClient>;
        recall_experiment(&mut make, &scenario(), &[0, 5, 10, 15], 20, 7).unwrap()
    }

    #[test]
    fn perfect_recall_is_perfect() {
        let rates: Vec<f64> = run(Policy::perfect_recall()).iter().map(|r| r.success_rate).collect();
        assert_eq!(rates, vec![1.0; 4]);
    }

    #[test]
    fn forgetful_model_fails_after_five() {
        let rates: Vec<f64> = run(Policy::forget_after(5)).iter().map(|r| r.success_rate).collect();
        assert_eq!(rates, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn csv_format() {
        let rows = [
            RecallRow { n: 0, success_rate: 1.0, trials: 20, errored: 0 },
            RecallRow { n: 5, success_rate: 0.85, trials: 20, errored: 0 },
        ];
        let mut buf = Vec::new();
        write_recall_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,success_rate\n0,1.0\n5,0.85\n");
    }

    #[test]
    fn unavailable_correction_rejected() {
        let mut s = scenario();
        s.corrected = SemanticAction::new(Verb::Pick, "water");
        assert!(matches!(s.validate(), Err(RecallError::CorrectionUnavailable(_))));
    }
}
