//! Chat-completions client over HTTPS.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::client::{ClientError, ModelClient, ModelReply, ModelRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiveConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    pub timeout_s: f64,
    pub temperature: f64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4".into(),
            token_env: "LLM_API_KEY".into(),
            timeout_s: 30.0,
            temperature: 0.0,
        }
    }
}

pub struct LiveClient {
    cfg: LiveConfig,
    token: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for LiveClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveClient").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl LiveClient {
    /// Reads the token from `cfg.token_env`.
    pub fn from_env(cfg: LiveConfig) -> Result<Self, ClientError> {
        let token = std::env::var(&cfg.token_env)
            .map_err(|_| ClientError::Transport(format!("environment variable {} is not set", cfg.token_env)))?;
        if !(cfg.timeout_s.is_finite() && cfg.timeout_s > 0.0) {
            return Err(ClientError::Transport("timeout must be positive".into()));
        }
        let agent =
            ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs_f64(cfg.timeout_s))).build().into();
        Ok(Self { cfg, token, agent })
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl ModelClient for LiveClient {
    fn complete(&mut self, req: &ModelRequest<'_>) -> Result<ModelReply, ClientError> {
        let body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": req.messages,
        });
        let response = self
            .agent
            .post(&self.cfg.endpoint)
            .header("Authorization", &format!("Bearer {}", self.token))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => ClientError::Timeout,
                other => ClientError::Transport(other.to_string()),
            })?;
        let parsed: Completion = response
            .into_body()
            .read_json()
            .map_err(|e| ClientError::Transport(format!("bad completion body: {e}")))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ClientError::Transport("completion has no content".into()))?;
        Ok(ModelReply { text, latency: 0.0 })
    }
}
