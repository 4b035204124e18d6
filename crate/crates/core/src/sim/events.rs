//! Event log: one JSON object per line, tagged by `kind`.

use std::io::{BufRead, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::controller::Wrench;
use crate::ds::DsAction;
use crate::llm::StateSummary;
use crate::pose::{Pose, Twist};
use crate::scene::{HeldState, SemanticAction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPose {
    pub id: String,
    pub pose: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub position: Vector3<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Init {
        name: String,
        seed: u64,
        duration: f64,
        control_dt: f64,
        estimator_dt: f64,
        objects: Vec<ObjectPose>,
        labels: Vec<(String, String)>,
    },
    LlmQuery {
        step: u64,
        user_prompt: String,
        state: StateSummary,
    },
    LlmAction {
        step: u64,
        action: Option<SemanticAction>,
        response: String,
        reasoning: String,
        attempts: usize,
        failure: Option<String>,
    },
    CorrectionStart {
        c_lin: f64,
        c_rot: f64,
    },
    CorrectionEnd {
        c_lin: f64,
        c_rot: f64,
        estimate: DsAction,
    },
    SemanticCorrection {
        action: SemanticAction,
        label: String,
        distance: f64,
        text: String,
    },
    Pick {
        object: String,
    },
    Place {
        object: String,
        location: String,
    },
    ConfidenceSample {
        c_lin: f64,
        c_rot: f64,
        resample_rate: f64,
    },
    EstimateSample {
        estimate: DsAction,
        ee: Pose,
        twist: Twist,
        held: HeldState,
        objects: Vec<ObjectPose>,
        action: Option<SemanticAction>,
        in_flight: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cloud: Option<Vec<CloudPoint>>,
    },
    WrenchSample {
        human: Wrench,
        command: Wrench,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Init { .. } => "init",
            Event::LlmQuery { .. } => "llm_query",
            Event::LlmAction { .. } => "llm_action",
            Event::CorrectionStart { .. } => "correction_start",
            Event::CorrectionEnd { .. } => "correction_end",
            Event::SemanticCorrection { .. } => "semantic_correction",
            Event::Pick { .. } => "pick",
            Event::Place { .. } => "place",
            Event::ConfidenceSample { .. } => "confidence_sample",
            Event::EstimateSample { .. } => "estimate_sample",
            Event::WrenchSample { .. } => "wrench_sample",
        }
    }
}

/// An event stamped with the control tick it happened on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub tick: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn push(&mut self, tick: u64, event: Event) {
        debug_assert!(self.records.last().is_none_or(|r| r.tick <= tick));
        self.records.push(EventRecord { tick, event });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a EventRecord> + 'a {
        self.records.iter().filter(move |r| r.event.kind() == kind)
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Reads a log, skipping blank lines. Errors name the 1-based line.
    pub fn read_jsonl(input: impl BufRead) -> Result<Self, String> {
        let mut records = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| format!("line {}: {e}", i + 1))?;
            if line.trim().is_empty() {
                continue;
            }
            let r: EventRecord = serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?;
            records.push(r);
        }
        Ok(Self { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Verb;

    #[test]
    fn jsonl_round_trip() {
        let mut log = EventLog::default();
        log.push(0, Event::ConfidenceSample { c_lin: 1.0, c_rot: 0.25, resample_rate: 0.75 });
        log.push(
            10,
            Event::SemanticCorrection {
                action: SemanticAction::new(Verb::Move, "stove"),
                label: "on the stove".into(),
                distance: 0.01,
                text: "x".into(),
            },
        );
        log.push(10, Event::Pick { object: "pot".into() });
        let text = log.to_jsonl();
        assert!(
            text.starts_with(r#"{"tick":0,"kind":"confidence_sample","c_lin":1.0,"c_rot":0.25,"resample_rate":0.75}"#)
        );
        let back = EventLog::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.of_kind("pick").count(), 1);
    }

    #[test]
    fn simulated_log_round_trips_exactly() {
        let path = std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/correction_push.toml"));
        let log = crate::sim::run_scenario(&crate::sim::Scenario::load(path).unwrap()).unwrap();
        assert_eq!(EventLog::read_jsonl(log.to_jsonl().as_bytes()).unwrap(), log);
    }

    #[test]
    fn bad_line_is_reported() {
        let err = EventLog::read_jsonl("\n{\"tick\":1}\n".as_bytes()).unwrap_err();
        assert!(err.starts_with("line 2"), "{err}");
    }
}
