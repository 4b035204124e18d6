//! Turns an event log into wire messages. Live sessions and replays share
//! this path, so a replayed log produces the frames the live run did.

use crate::controller::CONTROL_DT;
use crate::sim::{Event, EventRecord};

use super::wire::{EventNotice, Message, ParticleCloud, StateSnapshot, TranscriptDelta};

/// Snapshot rate on the wire, Hz.
pub const SNAPSHOT_HZ: u64 = 30;

/// Control tick of the `k`-th snapshot boundary.
pub fn boundary_tick(k: u64) -> u64 {
    let per_second = (1.0 / CONTROL_DT).round() as u64;
    (k * per_second).div_ceil(SNAPSHOT_HZ)
}

#[derive(Debug, Default)]
pub struct SnapshotSampler {
    next_boundary: u64,
    latest: Option<StateSnapshot>,
    last_step: Option<u64>,
}

impl SnapshotSampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds the next log record, in log order.
    pub fn feed(&mut self, r: &EventRecord) -> Vec<Message> {
        let mut out = self.flush_before(r.tick);
        match &r.event {
            Event::ConfidenceSample { c_lin, c_rot, resample_rate } => {
                let s = self.latest.get_or_insert_with(|| blank(r.tick));
                s.c_lin = *c_lin;
                s.c_rot = *c_rot;
                s.resample_rate = *resample_rate;
            }
            Event::EstimateSample { ee, twist, held, objects, action, in_flight, cloud, .. } => {
                let s = self.latest.get_or_insert_with(|| blank(r.tick));
                s.ee = ee.to_array();
                let tw = twist.to_vector();
                s.twist = std::array::from_fn(|i| tw[i]);
                s.held = held.clone();
                s.objects = objects.clone();
                s.action = action.clone();
                s.in_flight_llm = *in_flight;
                if let Some(cloud) = cloud {
                    out.push(Message::ParticleCloud(ParticleCloud {
                        tick: r.tick,
                        particles: cloud.iter().map(|p| (p.position.into(), p.weight)).collect(),
                    }));
                }
            }
            Event::WrenchSample { .. } => {}
            ev => {
                match ev {
                    Event::LlmQuery { step, user_prompt, .. } => {
                        self.last_step = Some(*step);
                        out.push(Message::TranscriptDelta(TranscriptDelta {
                            step: *step,
                            user_prompt: Some(user_prompt.clone()),
                            ..Default::default()
                        }));
                    }
                    Event::LlmAction { step, action, response, failure, .. } => {
                        out.push(Message::TranscriptDelta(TranscriptDelta {
                            step: *step,
                            proposed_action: action.clone(),
                            response: Some(response.clone()),
                            failure: failure.clone(),
                            ..Default::default()
                        }));
                    }
                    Event::SemanticCorrection { action, text, .. } => {
                        if let Some(step) = self.last_step {
                            out.push(Message::TranscriptDelta(TranscriptDelta {
                                step,
                                correction: Some(action.clone()),
                                correction_text: Some(text.clone()),
                                ..Default::default()
                            }));
                        }
                    }
                    _ => {}
                }
                out.push(Message::Event(EventNotice {
                    tick: r.tick,
                    kind: ev.kind().to_string(),
                    detail: serde_json::to_value(r).expect("records serialize"),
                }));
            }
        }
        out
    }

    /// Snapshots whose state is settled once `completed` ticks have run and
    /// their records were fed. Lets a live session send a boundary without
    /// waiting for the next record.
    pub fn advance(&mut self, completed: u64) -> Vec<Message> {
        self.flush_before(completed)
    }

    /// Emits the remaining boundaries up to and including `total_ticks`.
    pub fn finish(&mut self, total_ticks: u64) -> Vec<Message> {
        self.flush_before(total_ticks + 1)
    }

    /// Snapshots for every boundary strictly before `tick`.
    fn flush_before(&mut self, tick: u64) -> Vec<Message> {
        let mut out = Vec::new();
        loop {
            let b = boundary_tick(self.next_boundary);
            if b >= tick {
                break;
            }
            if let Some(s) = &self.latest {
                out.push(Message::StateSnapshot(StateSnapshot { tick: b, ..s.clone() }));
            }
            self.next_boundary += 1;
        }
        out
    }
}

/// Ticks the log's run lasted, from its init record.
pub fn log_total_ticks(records: &[EventRecord]) -> Option<u64> {
    records.iter().find_map(|r| match &r.event {
        Event::Init { duration, control_dt, .. } => Some((duration / control_dt).round() as u64),
        _ => None,
    })
}

/// Every wire message a log yields, each with the tick it belongs to.
pub fn log_messages(records: &[EventRecord]) -> Vec<(u64, Message)> {
    let mut s = SnapshotSampler::new();
    let mut out = Vec::new();
    for r in records {
        for m in s.feed(r) {
            out.push((message_tick(&m, r.tick), m));
        }
    }
    let total = log_total_ticks(records).unwrap_or_else(|| records.last().map_or(0, |r| r.tick));
    for m in s.finish(total) {
        out.push((message_tick(&m, total), m));
    }
    out
}

fn blank(tick: u64) -> StateSnapshot {
    StateSnapshot {
        tick,
        ee: [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        twist: [0.0; 6],
        held: Default::default(),
        objects: Vec::new(),
        c_lin: 1.0,
        c_rot: 1.0,
        resample_rate: 0.0,
        action: None,
        in_flight_llm: false,
    }
}

fn message_tick(m: &Message, default: u64) -> u64 {
    match m {
        Message::StateSnapshot(s) => s.tick,
        _ => default,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::EventLog;

    #[test]
    fn boundaries_are_thirty_hertz() {
        let b: Vec<u64> = (0..7).map(boundary_tick).collect();
        assert_eq!(b, vec![0, 7, 14, 20, 27, 34, 40]);
        assert_eq!(boundary_tick(30), 200);
    }

    #[test]
    fn snapshots_wait_for_later_records() {
        let mut log = EventLog::default();
        log.push(0, Event::ConfidenceSample { c_lin: 1.0, c_rot: 1.0, resample_rate: 0.0 });
        log.push(10, Event::ConfidenceSample { c_lin: 0.5, c_rot: 1.0, resample_rate: 0.5 });
        let mut s = SnapshotSampler::new();
        assert!(s.feed(&log.records[0]).is_empty());
        let m = s.feed(&log.records[1]);
        let ticks: Vec<_> = m
            .iter()
            .map(|m| match m {
                Message::StateSnapshot(s) => (s.tick, s.c_lin),
                _ => panic!(),
            })
            .collect();
        assert_eq!(ticks, vec![(0, 1.0), (7, 1.0)]);
        let rest = s.finish(20);
        assert_eq!(rest.len(), 2);
        assert!(matches!(&rest[1], Message::StateSnapshot(s) if s.tick == 20 && s.c_lin == 0.5));
    }

    #[test]
    fn advance_releases_settled_boundaries() {
        let mut log = EventLog::default();
        log.push(0, Event::ConfidenceSample { c_lin: 1.0, c_rot: 1.0, resample_rate: 0.0 });
        let mut s = SnapshotSampler::new();
        assert!(s.feed(&log.records[0]).is_empty());
        // tick 0 done; boundary 7 may still change
        assert_eq!(s.advance(1).len(), 1);
        assert!(s.advance(7).is_empty());
        assert_eq!(s.advance(8).len(), 1);
        assert_eq!(s.finish(20).len(), 2);
    }
}
