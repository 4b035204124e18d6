//! System and user prompt construction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{ActionDictionary, Category, HeldState, Scene, SemanticAction};

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("no available actions; move is always valid, so the scene is broken")]
    EmptyDictionary,
    #[error("unknown object '{0}' referenced in prompt state")]
    UnknownObject(String),
}

/// Label used when nobody holds or approaches anything.
pub const NOTHING: &str = "Nothing";

pub const FORMAT_REMINDER: &str = "Your previous reply did not contain a valid command. \
Reply with exactly one available action formatted as '# Verb ; item &', followed by your reasoning.";

const SYSTEM_TEMPLATE: &str = "\
Role: You are a robotic assistant named ChefBot, tasked with aiding a human in the kitchen environment.

Objective: Your mission is to facilitate kitchen tasks effectively, focusing on optimal interaction with items and the environment.

Item Categories:
- Category A (Items with Mount): These are items the robot can pick up, typically containers. (Examples: {A})
- Category B (Environment Items): Places where items can be set down when held. (Examples: {B})
- Category C (Items without Mount): Food items that can only be manipulated when placed atop a Category A item. (Examples: {C})

Abilities:
- Pick: Executable only when the robot is empty-handed and over a Category A item, combining Move and Pick actions.
- Move: Allows navigation over any item.
- Place: Places items in hand at a Category B location. Placement should be generic, not specific.
- Tilt/Untilt: Enables tilting objects held over a Category A item and subsequently reverting them to their original state.

Operation Instructions:
- Feedback Learning: Absorb lessons from human corrections and action feedback to refine actions independently of direct interventions.
- Action Execution: Always begin actions with '#', separate commands and items with ';', and conclude with '&'.
- Response Requirement: Every action response must include a reasoning step, clarifying the robot's decision-making process.

Example Command: # Pick ; cooking pot &

Special Notes:
- One Command at a time.
- Human corrections: Human will directly correct you to the right place. If last time human corrected you on the stove, next time when the same state happens, considering the command \"go to the stove\".
- Interaction history and feedback on action results are provided. Use this information to improve performance.
- Human Priority: Always prioritize assisting the human collaboratively and efficiently.";

/// System prompt with the item lists filled from `scene`.
pub fn system_prompt(scene: &Scene) -> String {
    let list = |cat: Category| {
        let labels: Vec<String> =
            scene.objects().iter().filter(|o| o.category == cat).map(|o| format!("'{}'", o.label)).collect();
        if labels.is_empty() {
            "none in this scene".to_string()
        } else {
            labels.join(", ")
        }
    };
    SYSTEM_TEMPLATE
        .replace("{A}", &list(Category::A))
        .replace("{B}", &list(Category::B))
        .replace("{C}", &list(Category::C))
}

/// Outcome of the previous LLM-proposed action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LastResult {
    Succeeded { action: SemanticAction },
    Failed { action: Option<SemanticAction>, reason: String },
}

/// Everything the user prompt describes.
#[derive(Debug, Clone, Copy)]
pub struct PromptState<'a> {
    pub scene: &'a Scene,
    pub held: &'a HeldState,
    /// Object id the human is heading for.
    pub human_approach: Option<&'a str>,
    /// LLM-planned action the robot has not completed.
    pub planned: Option<&'a SemanticAction>,
    pub last_result: Option<&'a LastResult>,
    /// Human correction concluded during the previous step.
    pub correction: Option<&'a SemanticAction>,
    pub dictionary: &'a ActionDictionary,
}

/// Structured view of the prompt state, handed to scripted clients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StateSummary {
    pub robot_holding: String,
    pub human_holding: String,
    pub robot_approaching: String,
    pub human_approaching: String,
    pub corrected_to: Option<String>,
    /// Rendered as `Verb ; label`, in dictionary order.
    pub available: Vec<String>,
}

impl StateSummary {
    /// Key identifying a recurring semantic state: what each agent holds and
    /// what the human is heading for.
    pub fn key(&self) -> String {
        format!("{}|{}|{}", self.robot_holding, self.human_holding, self.human_approaching)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub user_prompt: String,
    pub state: StateSummary,
}

fn label<'a>(scene: &'a Scene, id: Option<&str>) -> Result<&'a str, PromptError> {
    match id {
        None => Ok(NOTHING),
        Some(id) => scene.label(id).ok_or_else(|| PromptError::UnknownObject(id.to_string())),
    }
}

/// `Verb label`, e.g. `Place on the stove`.
pub fn action_phrase(scene: &Scene, a: &SemanticAction) -> String {
    format!("{} {}", a.verb.title(), scene.label(&a.object).unwrap_or(&a.object))
}

/// `Verb ; label`, the command body.
pub fn command_body(scene: &Scene, a: &SemanticAction) -> String {
    format!("{} ; {}", a.verb.title(), scene.label(&a.object).unwrap_or(&a.object))
}

/// Sentence recorded when a physical correction concludes.
pub fn correction_sentence(scene: &Scene, corrected: &SemanticAction) -> String {
    format!(
        "the human corrected the robot's action by pushing it to: '{}'",
        scene.label(&corrected.object).unwrap_or(&corrected.object)
    )
}

pub fn summarize(state: &PromptState<'_>) -> Result<StateSummary, PromptError> {
    let scene = state.scene;
    Ok(StateSummary {
        robot_holding: label(scene, state.held.robot.as_deref())?.to_string(),
        human_holding: label(scene, state.held.human.as_deref())?.to_string(),
        robot_approaching: label(scene, state.planned.map(|p| p.object.as_str()))?.to_string(),
        human_approaching: label(scene, state.human_approach)?.to_string(),
        corrected_to: state.correction.map(|c| label(scene, Some(&c.object)).map(String::from)).transpose()?,
        available: state.dictionary.entries().iter().map(|e| command_body(scene, &e.semantic)).collect(),
    })
}

/// Renders the user prompt: correction status, previous result, what each
/// agent holds and approaches, and the available actions.
pub fn build_user_prompt(state: &PromptState<'_>) -> Result<String, PromptError> {
    if state.dictionary.is_empty() {
        return Err(PromptError::EmptyDictionary);
    }
    let scene = state.scene;
    let mut parts: Vec<String> = Vec::new();

    match state.correction {
        Some(c) => {
            let mut s = format!("In the previous step, {}.", correction_sentence(scene, c));
            s.push_str(&format!(
                " The final action executed by the robot was: {} '{}'.",
                c.verb.title(),
                label(scene, Some(&c.object))?
            ));
            parts.push(s);
        }
        None => {
            parts.push("In the previous step, the human did not correct the robot's action.".into());
            match state.last_result {
                Some(LastResult::Succeeded { action }) => parts
                    .push(format!("The last action, '{}' was executed successfully.", action_phrase(scene, action))),
                Some(LastResult::Failed { action: Some(action), reason }) => {
                    parts.push(format!("The last action, '{}' failed: {}.", action_phrase(scene, action), reason))
                }
                Some(LastResult::Failed { action: None, reason }) => {
                    parts.push(format!("The last response could not be executed: {}.", reason))
                }
                None => {}
            }
        }
    }

    let summary = summarize(state)?;
    parts.push(format!("The robot is holding '{}'.", summary.robot_holding));
    parts.push(format!("The human is holding '{}'.", summary.human_holding));
    parts.push(format!("The robot is approaching '{}'.", summary.robot_approaching));
    parts.push(format!("The human is approaching '{}'.", summary.human_approaching));

    let available: Vec<String> = state
        .dictionary
        .entries()
        .iter()
        .map(|e| format!("{} '{}'", e.semantic.verb, label(scene, Some(&e.semantic.object)).unwrap_or("?")))
        .collect();
    parts.push(format!("The available actions are: {}.", available.join(", ")));
    Ok(parts.join(" "))
}

pub fn build_bundle(state: &PromptState<'_>) -> Result<PromptBundle, PromptError> {
    Ok(PromptBundle {
        system_prompt: system_prompt(state.scene),
        user_prompt: build_user_prompt(state)?,
        state: summarize(state)?,
    })
}
