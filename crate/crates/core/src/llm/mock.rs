//! Scripted model driven by a TOML policy file.
//!
//! ```toml
//! latency = 0.2
//! fallback = "# {first_available} &"
//!
//! [[rule]]
//! robot_holding = "cooking pot"
//! recall = true
//! forget_after = 5
//! respond = ["# {correction} & Recalling the earlier correction."]
//!
//! [[rule]]
//! step = 0
//! respond = ["# Pick ; cooking pot &", "# Pick ; 'cooking pot' &"]
//! ```
//!
//! Rules are tried in order; the first whose predicates all hold answers.
//! `respond` entries are used one per hit, the last one repeating.
//! `{correction}` expands to the recalled correction as `Verb ; label` and
//! `{first_available}` and `{last_available}` to the first and last
//! available actions.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::client::{ClientError, ModelClient, ModelReply, ModelRequest};
use super::prompt::command_body;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("cannot read policy {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid policy: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid policy: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    #[serde(default)]
    pub name: Option<String>,
    pub step: Option<u64>,
    pub robot_holding: Option<String>,
    pub human_holding: Option<String>,
    pub robot_approaching: Option<String>,
    pub human_approaching: Option<String>,
    pub prompt_contains: Option<String>,
    /// Requires a visible earlier correction made in the same state.
    #[serde(default)]
    pub recall: bool,
    /// With `recall`, the correction is forgotten once this many
    /// interactions have happened since it.
    pub forget_after: Option<u64>,
    pub respond: Vec<String>,
    pub latency: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    #[serde(default)]
    pub latency: f64,
    pub fallback: Option<String>,
    #[serde(default, rename = "rule")]
    pub rules: Vec<Rule>,
}

impl Policy {
    pub fn from_toml(text: &str) -> Result<Self, PolicyError> {
        let p: Policy = toml::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| PolicyError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let ok_latency = |l: f64| l.is_finite() && l >= 0.0;
        if !ok_latency(self.latency) {
            return Err(PolicyError::Invalid("latency must be finite and >= 0".into()));
        }
        for (i, r) in self.rules.iter().enumerate() {
            if r.respond.is_empty() {
                return Err(PolicyError::Invalid(format!("rule {i} has no responses")));
            }
            if r.latency.is_some_and(|l| !ok_latency(l)) {
                return Err(PolicyError::Invalid(format!("rule {i} latency must be finite and >= 0")));
            }
            if r.forget_after.is_some() && !r.recall {
                return Err(PolicyError::Invalid(format!("rule {i} sets forget_after without recall")));
            }
        }
        Ok(())
    }

    /// Recalls the most recent correction made in the current state.
    pub fn perfect_recall() -> Self {
        Self::recall_policy(None)
    }

    /// Like [`Policy::perfect_recall`] but forgets after `n` interactions.
    pub fn forget_after(n: u64) -> Self {
        Self::recall_policy(Some(n))
    }

    fn recall_policy(forget_after: Option<u64>) -> Self {
        Self {
            latency: 0.0,
            fallback: Some("# {last_available} & No correction to draw on.".into()),
            rules: vec![Rule {
                name: Some("recall".into()),
                recall: true,
                forget_after,
                respond: vec!["# {correction} & The human corrected this before.".into()],
                ..Rule::default()
            }],
        }
    }
}

/// [`ModelClient`] that answers from a [`Policy`].
#[derive(Debug, Clone)]
pub struct MockClient {
    policy: Policy,
    hits: Vec<usize>,
}

impl MockClient {
    pub fn new(policy: Policy) -> Self {
        let hits = vec![0; policy.rules.len()];
        Self { policy, hits }
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }
}

fn eq_label(want: &Option<String>, have: &str) -> bool {
    want.as_deref().is_none_or(|w| w.trim().eq_ignore_ascii_case(have.trim()))
}

/// The recalled correction, if one is visible and not yet forgotten.
fn recalled(rule: &Rule, req: &ModelRequest<'_>) -> Option<String> {
    let key = req.state.key();
    req.history.iter().rev().find_map(|e| {
        let c = e.correction.as_ref()?;
        if e.state_key != key {
            return None;
        }
        let since = req.step.saturating_sub(e.step + 1);
        if rule.forget_after.is_some_and(|n| since >= n) {
            return None;
        }
        Some(command_body(req.scene, c))
    })
}

impl ModelClient for MockClient {
    fn complete(&mut self, req: &ModelRequest<'_>) -> Result<ModelReply, ClientError> {
        let first_available = req.state.available.first().cloned().unwrap_or_default();
        let last_available = req.state.available.last().cloned().unwrap_or_default();
        let fill =
            |t: &str| t.replace("{first_available}", &first_available).replace("{last_available}", &last_available);
        let prompt = req.messages.last().map(|m| m.content.as_str()).unwrap_or("");
        for (i, rule) in self.policy.rules.iter().enumerate() {
            let s = req.state;
            let matches = rule.step.is_none_or(|st| st == req.step)
                && eq_label(&rule.robot_holding, &s.robot_holding)
                && eq_label(&rule.human_holding, &s.human_holding)
                && eq_label(&rule.robot_approaching, &s.robot_approaching)
                && eq_label(&rule.human_approaching, &s.human_approaching)
                && rule.prompt_contains.as_deref().is_none_or(|p| prompt.contains(p));
            if !matches {
                continue;
            }
            let correction = if rule.recall {
                match recalled(rule, req) {
                    Some(c) => c,
                    None => continue,
                }
            } else {
                String::new()
            };
            let n = self.hits[i];
            self.hits[i] += 1;
            let template = &rule.respond[n.min(rule.respond.len() - 1)];
            let text = fill(&template.replace("{correction}", &correction));
            return Ok(ModelReply { text, latency: rule.latency.unwrap_or(self.policy.latency) });
        }
        match &self.policy.fallback {
            Some(f) => Ok(ModelReply { text: fill(f), latency: self.policy.latency }),
            None => Err(ClientError::NoRule),
        }
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}
