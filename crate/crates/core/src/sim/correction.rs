//! Correction episodes: the human pushes, confidence collapses, the human
//! lets go and confidence recovers.

use serde::{Deserialize, Serialize};

use crate::ds::DsAction;
use crate::scene::{ActionDictionary, DictionaryConfig, SemanticAction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectionConfig {
    /// Episode opens below this confidence while the human pushes.
    pub c_low: f64,
    /// Episode closes above this confidence once the human has let go.
    pub c_high: f64,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self { c_low: 0.5, c_high: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeEvent {
    Opened,
    Closed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CorrectionDetector {
    open: bool,
}

impl CorrectionDetector {
    pub fn is_open(&self) -> bool {
        self.open
    }

    /// Feeds one sample of scalar confidence and human contact.
    pub fn update(&mut self, c: f64, human_active: bool, cfg: &CorrectionConfig) -> Option<EpisodeEvent> {
        if !self.open && human_active && c < cfg.c_low {
            self.open = true;
            return Some(EpisodeEvent::Opened);
        }
        if self.open && !human_active && c > cfg.c_high {
            self.open = false;
            return Some(EpisodeEvent::Closed);
        }
        None
    }
}

/// Batch form over aligned streams of (scalar confidence, human active,
/// estimate). Returns the semantic correction of the last closed episode
/// when it matches a dictionary entry other than `commanded`.
pub fn detect_correction_episode(
    stream: &[(f64, bool, DsAction)],
    dictionary: &ActionDictionary,
    commanded: Option<&SemanticAction>,
    cfg: &CorrectionConfig,
    match_cfg: &DictionaryConfig,
) -> Option<SemanticAction> {
    let mut det = CorrectionDetector::default();
    let mut found = None;
    for (c, active, estimate) in stream {
        if det.update(*c, *active, cfg) == Some(EpisodeEvent::Closed) {
            found = dictionary.ds_to_semantic(estimate, match_cfg).filter(|s| Some(*s) != commanded).cloned();
        }
    }
    found
}
