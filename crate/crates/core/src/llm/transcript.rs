//! Interaction history fed back to the model.

use serde::{Deserialize, Serialize};

use crate::scene::SemanticAction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExecutionResult {
    Pending,
    Succeeded,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: u64,
    pub user_prompt: String,
    /// See [`StateSummary::key`](super::StateSummary::key).
    pub state_key: String,
    pub response: String,
    pub reasoning: String,
    pub proposed_action: Option<SemanticAction>,
    pub execution_result: ExecutionResult,
    /// Most recent correction during this step.
    pub correction: Option<SemanticAction>,
    /// All correction sentences recorded for this step, oldest first.
    pub correction_text: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&TranscriptEntry> {
        self.entries.last()
    }

    pub fn next_step(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.step + 1)
    }

    /// Appends an entry.
    ///
    /// # Panics
    /// If `entry.step` does not exceed the last recorded step.
    pub fn push(&mut self, entry: TranscriptEntry) {
        if let Some(last) = self.entries.last() {
            assert!(entry.step > last.step, "transcript steps must increase");
        }
        self.entries.push(entry);
    }

    /// The last `k` entries, oldest first.
    pub fn recent(&self, k: usize) -> &[TranscriptEntry] {
        &self.entries[self.entries.len().saturating_sub(k)..]
    }

    /// Attaches a correction to the latest step. A later correction in the
    /// same step replaces the action but both sentences are kept.
    pub fn record_correction(&mut self, corrected: SemanticAction, sentence: String) -> bool {
        match self.entries.last_mut() {
            Some(e) => {
                e.correction = Some(corrected);
                e.correction_text.push(sentence);
                true
            }
            None => false,
        }
    }

    pub fn set_result(&mut self, result: ExecutionResult) {
        if let Some(e) = self.entries.last_mut() {
            e.execution_result = result;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Verb;

    fn entry(step: u64) -> TranscriptEntry {
        TranscriptEntry {
            step,
            user_prompt: format!("prompt {step}"),
            state_key: String::new(),
            response: String::new(),
            reasoning: String::new(),
            proposed_action: None,
            execution_result: ExecutionResult::Pending,
            correction: None,
            correction_text: Vec::new(),
        }
    }

    #[test]
    fn recent_window() {
        let mut t = Transcript::new();
        for s in 0..30 {
            t.push(entry(s));
        }
        let r = t.recent(20);
        assert_eq!(r.len(), 20);
        assert_eq!(r[0].step, 10);
        assert_eq!(t.recent(100).len(), 30);
        assert_eq!(t.next_step(), 30);
    }

    #[test]
    #[should_panic]
    fn steps_must_increase() {
        let mut t = Transcript::new();
        t.push(entry(3));
        t.push(entry(3));
    }

    #[test]
    fn last_correction_wins() {
        let mut t = Transcript::new();
        assert!(!t.record_correction(SemanticAction::new(Verb::Move, "a"), "x".into()));
        t.push(entry(0));
        t.record_correction(SemanticAction::new(Verb::Move, "a"), "first".into());
        t.record_correction(SemanticAction::new(Verb::Place, "b"), "second".into());
        let e = t.last().unwrap();
        assert_eq!(e.correction, Some(SemanticAction::new(Verb::Place, "b")));
        assert_eq!(e.correction_text, vec!["first", "second"]);
    }
}
