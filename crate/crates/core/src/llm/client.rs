use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::StateSummary;
use super::transcript::TranscriptEntry;
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

/// One completion request. Scripted clients read `state` and `history`
/// directly; network clients only send `messages`.
#[derive(Debug, Clone)]
pub struct ModelRequest<'a> {
    pub messages: Vec<ChatMessage>,
    /// Transcript step this request belongs to.
    pub step: u64,
    pub scene: &'a Scene,
    pub state: &'a StateSummary,
    pub history: &'a [TranscriptEntry],
    /// Zero for the first attempt, then one per retry.
    pub attempt: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelReply {
    pub text: String,
    /// Simulated latency in seconds; zero for live clients, whose latency
    /// is real.
    pub latency: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("model request timed out")]
    Timeout,
    #[error("model transport error: {0}")]
    Transport(String),
    #[error("no scripted response matches the current state")]
    NoRule,
}

pub trait ModelClient: Send {
    fn complete(&mut self, request: &ModelRequest<'_>) -> Result<ModelReply, ClientError>;

    /// True when replies depend only on the request, so runs are replayable.
    fn is_deterministic(&self) -> bool {
        false
    }
}

impl<T: ModelClient + ?Sized> ModelClient for Box<T> {
    fn complete(&mut self, request: &ModelRequest<'_>) -> Result<ModelReply, ClientError> {
        (**self).complete(request)
    }

    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}
