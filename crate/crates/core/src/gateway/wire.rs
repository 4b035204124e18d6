//! Session wire protocol: one JSON text frame per message,
//! `{"type": ..., "seq": n, "payload": {...}}`.

use serde::{Deserialize, Serialize};

use crate::controller::Wrench;
use crate::scene::{HeldState, SemanticAction};
use crate::sim::ObjectPose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub tick: u64,
    /// Position then orientation `[w, x, y, z]`.
    pub ee: [f64; 7],
    /// Linear then angular velocity.
    pub twist: [f64; 6],
    pub held: HeldState,
    pub objects: Vec<ObjectPose>,
    pub c_lin: f64,
    pub c_rot: f64,
    pub resample_rate: f64,
    pub action: Option<SemanticAction>,
    pub in_flight_llm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleCloud {
    pub tick: u64,
    /// Attractor positions with weights, heaviest first.
    pub particles: Vec<([f64; 3], f64)>,
}

/// Change to one transcript step; absent fields are unchanged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TranscriptDelta {
    pub step: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposed_action: Option<SemanticAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<SemanticAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventNotice {
    pub tick: u64,
    pub kind: String,
    /// The event record as logged.
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApplyWrench {
    /// World frame, N.
    pub force: [f64; 3],
    /// World frame, N·m.
    pub torque: [f64; 3],
}

impl ApplyWrench {
    pub fn to_wrench(&self) -> Wrench {
        Wrench::new(self.force.into(), self.torque.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum Message {
    StateSnapshot(StateSnapshot),
    ParticleCloud(ParticleCloud),
    TranscriptDelta(TranscriptDelta),
    Event(EventNotice),
    ApplyWrench(ApplyWrench),
    SetPause {
        paused: bool,
    },
    Reset {},
    /// Asks for every transcript delta so far; a reconnecting client uses
    /// it to rebuild its transcript view.
    ResyncTranscript {},
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub seq: u64,
    #[serde(flatten)]
    pub message: Message,
}

impl Frame {
    pub fn new(seq: u64, message: Message) -> Self {
        Self { seq, message }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn type_name(&self) -> &'static str {
        match self.message {
            Message::StateSnapshot(_) => "state_snapshot",
            Message::ParticleCloud(_) => "particle_cloud",
            Message::TranscriptDelta(_) => "transcript_delta",
            Message::Event(_) => "event",
            Message::ApplyWrench(_) => "apply_wrench",
            Message::SetPause { .. } => "set_pause",
            Message::Reset {} => "reset",
            Message::ResyncTranscript {} => "resync_transcript",
            Message::Error { .. } => "error",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Pose;
    use crate::scene::Verb;
    use proptest::prelude::*;

    #[test]
    fn frame_layout() {
        let f = Frame::new(7, Message::SetPause { paused: true });
        assert_eq!(f.to_json(), r#"{"seq":7,"type":"set_pause","payload":{"paused":true}}"#);
        let w = Frame::from_json(r#"{"type":"apply_wrench","seq":1,"payload":{"force":[10,0,0],"torque":[0,0,0]}}"#)
            .unwrap();
        assert_eq!(w.message, Message::ApplyWrench(ApplyWrench { force: [10.0, 0.0, 0.0], torque: [0.0; 3] }));
        assert_eq!(Frame::from_json(r#"{"type":"reset","seq":2,"payload":{}}"#).unwrap().message, Message::Reset {});
        assert_eq!(
            Frame::from_json(r#"{"type":"resync_transcript","seq":3,"payload":{}}"#).unwrap().message,
            Message::ResyncTranscript {}
        );
        assert!(Frame::from_json(r#"{"type":"teleport","seq":2,"payload":{}}"#).is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e6f64..1e6, Just(0.0), Just(-0.0), Just(1e-300), Just(f64::MAX)]
    }

    fn text() -> impl Strategy<Value = String> {
        "[ -~]{0,24}|[\\u{0}-\\u{ffff}]{0,8}"
    }

    fn action() -> impl Strategy<Value = Option<SemanticAction>> {
        proptest::option::of((0usize..6, "[a-z]{1,8}").prop_map(|(v, o)| SemanticAction::new(Verb::ALL[v], o)))
    }

    fn message() -> impl Strategy<Value = Message> {
        prop_oneof![
            (
                any::<u64>(),
                prop::array::uniform7(finite()),
                prop::array::uniform6(finite()),
                proptest::option::of("[a-z]{1,6}"),
                prop::collection::vec(("[a-z]{1,6}", prop::array::uniform3(finite())), 0..4),
                finite(),
                finite(),
                action(),
                any::<bool>()
            )
                .prop_map(|(tick, ee, twist, robot, objs, c_lin, c_rot, action, in_flight_llm)| {
                    Message::StateSnapshot(StateSnapshot {
                        tick,
                        ee,
                        twist,
                        held: HeldState { robot, human: None },
                        objects: objs
                            .into_iter()
                            .map(|(id, p)| ObjectPose { id, pose: Pose::from_position(p.into()) })
                            .collect(),
                        c_lin,
                        c_rot,
                        resample_rate: 1.0 - c_lin.min(c_rot),
                        action,
                        in_flight_llm,
                    })
                }),
            (any::<u64>(), prop::collection::vec((prop::array::uniform3(finite()), finite()), 0..100))
                .prop_map(|(tick, particles)| Message::ParticleCloud(ParticleCloud { tick, particles })),
            (any::<u64>(), proptest::option::of(text()), action(), proptest::option::of(text()), action()).prop_map(
                |(step, user_prompt, proposed_action, correction_text, correction)| {
                    Message::TranscriptDelta(TranscriptDelta {
                        step,
                        user_prompt,
                        proposed_action,
                        response: None,
                        failure: None,
                        correction,
                        correction_text,
                    })
                }
            ),
            (any::<u64>(), "[a-z_]{1,12}", text()).prop_map(|(tick, kind, s)| Message::Event(EventNotice {
                tick,
                kind,
                detail: serde_json::json!({ "text": s }),
            })),
            (prop::array::uniform3(finite()), prop::array::uniform3(finite()))
                .prop_map(|(force, torque)| Message::ApplyWrench(ApplyWrench { force, torque })),
            any::<bool>().prop_map(|paused| Message::SetPause { paused }),
            Just(Message::Reset {}),
            Just(Message::ResyncTranscript {}),
            text().prop_map(|message| Message::Error { message }),
        ]
    }

    proptest! {
        #[test]
        fn frames_round_trip(seq in any::<u64>(), m in message()) {
            let f = Frame::new(seq, m);
            let back = Frame::from_json(&f.to_json()).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
