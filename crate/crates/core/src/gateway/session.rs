//! WebSocket server for live sessions and log replays.

use std::collections::{BTreeMap, VecDeque};
use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use thiserror::Error;
use tungstenite::Message as WsMessage;

use crate::controller::{Wrench, CONTROL_DT};
use crate::sim::{ClientKind, EventLog, EventRecord, PlannerMode, Scenario, SimError, Simulation};

use super::sampler::{log_messages, SnapshotSampler};
use super::wire::{Frame, Message};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("cannot listen on {0}: {1}")]
    Bind(String, std::io::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub struct SessionOptions {
    /// Simulated seconds per wall second; 0 runs unpaced.
    pub speed: f64,
    /// Hold the simulation at t = 0 until a client connects.
    pub wait_for_client: bool,
    /// Receives the bound address once the server listens.
    pub on_bound: Option<Sender<SocketAddr>>,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self { speed: 1.0, wait_for_client: true, on_bound: None }
    }
}

/// Outgoing messages for one connection. Snapshots and particle clouds
/// keep only the newest unless the box is lossless.
#[derive(Default)]
struct Outbox {
    queue: VecDeque<Message>,
    cloud: Option<Message>,
    snapshot: Option<Message>,
    lossless: bool,
    closed: bool,
}

impl Outbox {
    fn push(&mut self, m: Message) {
        match m {
            Message::StateSnapshot(_) if !self.lossless => self.snapshot = Some(m),
            Message::ParticleCloud(_) if !self.lossless => self.cloud = Some(m),
            m => self.queue.push_back(m),
        }
    }

    fn drain(&mut self) -> Vec<Message> {
        let mut out: Vec<_> = self.queue.drain(..).collect();
        out.extend(self.cloud.take());
        out.extend(self.snapshot.take());
        out
    }
}

enum Input {
    Wrench(usize, Wrench),
    Pause(bool),
    Reset,
    Resync(usize),
    Gone(usize),
}

struct Conn {
    outbox: Arc<Mutex<Outbox>>,
    handle: JoinHandle<()>,
}

/// Accepted connections and their inbound messages.
struct Hub {
    listener: TcpListener,
    conns: BTreeMap<usize, Conn>,
    next_id: usize,
    lossless: bool,
    tx: Sender<Input>,
    rx: Receiver<Input>,
}

impl Hub {
    fn bind(bind: &str, lossless: bool, on_bound: Option<&Sender<SocketAddr>>) -> Result<Self, SessionError> {
        let listener = TcpListener::bind(bind).map_err(|e| SessionError::Bind(bind.to_string(), e))?;
        let addr = listener.local_addr()?;
        log::info!("listening on ws://{addr}");
        if let Some(tx) = on_bound {
            let _ = tx.send(addr);
        }
        let (tx, rx) = mpsc::channel();
        Ok(Self { listener, conns: BTreeMap::new(), next_id: 0, lossless, tx, rx })
    }

    fn wait_for_first(&mut self) -> Result<(), SessionError> {
        let (stream, peer) = self.listener.accept()?;
        self.add(stream, peer);
        self.listener.set_nonblocking(true)?;
        Ok(())
    }

    fn poll_accept(&mut self) -> Result<(), SessionError> {
        self.listener.set_nonblocking(true)?;
        loop {
            match self.listener.accept() {
                Ok((stream, peer)) => self.add(stream, peer),
                Err(e) if e.kind() == ErrorKind::WouldBlock => return Ok(()),
                Err(e) => return Err(e.into()),
            }
        }
    }

    fn add(&mut self, stream: TcpStream, peer: SocketAddr) {
        let id = self.next_id;
        self.next_id += 1;
        let outbox = Arc::new(Mutex::new(Outbox { lossless: self.lossless, ..Outbox::default() }));
        let tx = self.tx.clone();
        let ob = Arc::clone(&outbox);
        log::info!("client {id} connected from {peer}");
        let handle = std::thread::spawn(move || {
            if let Err(e) = connection(id, stream, &ob, &tx) {
                log::info!("client {id}: {e}");
            }
            let _ = tx.send(Input::Gone(id));
        });
        self.conns.insert(id, Conn { outbox, handle });
    }

    fn broadcast(&self, messages: &[Message]) {
        if messages.is_empty() {
            return;
        }
        for c in self.conns.values() {
            let mut ob = c.outbox.lock().expect("outbox lock");
            for m in messages {
                ob.push(m.clone());
            }
        }
    }

    fn send_to(&self, id: usize, messages: Vec<Message>) {
        if let Some(c) = self.conns.get(&id) {
            let mut ob = c.outbox.lock().expect("outbox lock");
            for m in messages {
                ob.push(m);
            }
        }
    }

    fn inputs(&mut self) -> Vec<Input> {
        let inputs: Vec<_> = self.rx.try_iter().collect();
        for i in &inputs {
            if let Input::Gone(id) = i {
                if let Some(c) = self.conns.remove(id) {
                    let _ = c.handle.join();
                }
            }
        }
        inputs
    }

    /// Flushes every outbox and closes the connections.
    fn shutdown(self) {
        for c in self.conns.values() {
            c.outbox.lock().expect("outbox lock").closed = true;
        }
        for (_, c) in self.conns {
            let _ = c.handle.join();
        }
    }
}

fn connection(id: usize, stream: TcpStream, outbox: &Mutex<Outbox>, tx: &Sender<Input>) -> Result<(), String> {
    stream.set_nonblocking(false).map_err(|e| e.to_string())?;
    let mut ws = tungstenite::accept(stream).map_err(|e| format!("handshake failed: {e}"))?;
    ws.get_ref().set_read_timeout(Some(Duration::from_millis(2))).map_err(|e| e.to_string())?;
    let mut seq = 0u64;
    let mut send = |ws: &mut tungstenite::WebSocket<TcpStream>, m: Message| {
        let text = Frame::new(seq, m).to_json();
        seq += 1;
        ws.send(WsMessage::text(text)).map_err(|e| e.to_string())
    };
    loop {
        let (batch, closed) = {
            let mut ob = outbox.lock().expect("outbox lock");
            (ob.drain(), ob.closed)
        };
        for m in batch {
            send(&mut ws, m)?;
        }
        if closed {
            let _ = ws.close(None);
            let _ = ws.flush();
            return Ok(());
        }
        match ws.read() {
            Ok(WsMessage::Text(text)) => match Frame::from_json(text.as_str()) {
                Ok(f) => match f.message {
                    Message::ApplyWrench(w) => {
                        let w = w.to_wrench();
                        if w.is_finite() {
                            let _ = tx.send(Input::Wrench(id, w));
                        } else {
                            send(&mut ws, Message::Error { message: "wrench must be finite".into() })?;
                        }
                    }
                    Message::SetPause { paused } => {
                        let _ = tx.send(Input::Pause(paused));
                    }
                    Message::Reset {} => {
                        let _ = tx.send(Input::Reset);
                    }
                    Message::ResyncTranscript {} => {
                        let _ = tx.send(Input::Resync(id));
                    }
                    other => {
                        let message = format!("unexpected message type '{}'", Frame::new(f.seq, other).type_name());
                        send(&mut ws, Message::Error { message })?;
                    }
                },
                Err(e) => send(&mut ws, Message::Error { message: format!("malformed frame: {e}") })?,
            },
            Ok(WsMessage::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e.to_string()),
        }
    }
}

fn simulation(scenario: &Scenario) -> Result<Simulation, SimError> {
    let mode = match scenario.llm.client {
        ClientKind::Mock => PlannerMode::Inline,
        ClientKind::Live => PlannerMode::Worker { block: false },
    };
    Simulation::new(scenario.clone(), mode)
}

/// Runs `scenario` in real time (scaled by `speed`) and streams it to every
/// connected client. Clients push with `apply_wrench`; each client's wrench
/// is clamped to the scenario caps before the contributions are summed.
/// Returns the log of the last run once the scenario duration elapses.
pub fn serve_session(scenario: &Scenario, bind: &str, opts: SessionOptions) -> Result<EventLog, SessionError> {
    let mut sim = simulation(scenario)?;
    let mut hub = Hub::bind(bind, false, opts.on_bound.as_ref())?;
    if opts.wait_for_client {
        hub.wait_for_first()?;
    }
    let (force_cap, torque_cap) = (scenario.human.force_cap(), scenario.human.torque_cap());
    let mut sampler = SnapshotSampler::new();
    let mut cursor = 0;
    let mut wrenches: BTreeMap<usize, Wrench> = BTreeMap::new();
    let mut paused = false;
    let mut budget = 0.0;
    let mut last = Instant::now();

    while !sim.is_finished() {
        hub.poll_accept()?;
        let mut wrench_changed = false;
        for input in hub.inputs() {
            match input {
                Input::Wrench(id, w) => {
                    wrenches.insert(id, w.clamped(force_cap, torque_cap));
                    wrench_changed = true;
                }
                Input::Gone(id) => wrench_changed |= wrenches.remove(&id).is_some(),
                Input::Pause(p) => paused = p,
                Input::Reset => {
                    log::info!("session reset");
                    sim = simulation(scenario)?;
                    sampler = SnapshotSampler::new();
                    cursor = 0;
                    budget = 0.0;
                    wrench_changed = true;
                }
                Input::Resync(id) => hub.send_to(id, transcript_deltas(log_messages(&sim.log().records))),
            }
        }
        if wrench_changed {
            sim.set_external_wrench(wrenches.values().fold(Wrench::zero(), |a, w| a + *w));
        }

        let now = Instant::now();
        let elapsed = now.duration_since(last).as_secs_f64();
        last = now;
        if !paused {
            budget = if opts.speed > 0.0 { budget + elapsed * opts.speed } else { f64::INFINITY };
            while !sim.is_finished() && sim.time() + CONTROL_DT <= budget + 1e-12 {
                sim.step()?;
            }
        }
        let records = &sim.log().records[cursor..];
        cursor += records.len();
        let mut messages = feed_all(&mut sampler, records);
        messages.extend(sampler.advance(sim.tick()));
        hub.broadcast(&messages);
        if opts.speed > 0.0 || paused {
            std::thread::sleep(Duration::from_millis(2));
        }
    }
    hub.broadcast(&sampler.finish(sim.total_ticks()));
    hub.shutdown();
    Ok(sim.into_log())
}

fn transcript_deltas(messages: Vec<(u64, Message)>) -> Vec<Message> {
    messages.into_iter().map(|(_, m)| m).filter(|m| matches!(m, Message::TranscriptDelta(_))).collect()
}

fn feed_all(sampler: &mut SnapshotSampler, records: &[EventRecord]) -> Vec<Message> {
    records.iter().flat_map(|r| sampler.feed(r)).collect()
}

/// Streams a recorded log to clients at `speed` times real time (0 sends
/// as fast as possible). Waits for the first client; later clients join
/// mid-stream. Every frame is delivered.
pub fn serve_replay(
    log: &EventLog,
    bind: &str,
    speed: f64,
    on_bound: Option<&Sender<SocketAddr>>,
) -> Result<(), SessionError> {
    if log.is_empty() {
        return Ok(());
    }
    let messages = log_messages(&log.records);
    let mut hub = Hub::bind(bind, true, on_bound)?;
    hub.wait_for_first()?;
    let start = Instant::now();
    let mut i = 0;
    while i < messages.len() {
        hub.poll_accept()?;
        for input in hub.inputs() {
            if let Input::Resync(id) = input {
                hub.send_to(id, transcript_deltas(messages[..i].to_vec()));
            }
        }
        let due = if speed > 0.0 { start.elapsed().as_secs_f64() * speed / CONTROL_DT } else { f64::INFINITY };
        let from = i;
        while i < messages.len() && messages[i].0 as f64 <= due {
            i += 1;
        }
        let batch: Vec<_> = messages[from..i].iter().map(|(_, m)| m.clone()).collect();
        hub.broadcast(&batch);
        if i < messages.len() {
            std::thread::sleep(Duration::from_millis(2));
        }
    }
    hub.shutdown();
    Ok(())
}

/// Replay frames with consecutive sequence numbers, as one client sees them.
pub fn replay_frames(log: &EventLog) -> Vec<Frame> {
    log_messages(&log.records).into_iter().enumerate().map(|(i, (_, m))| Frame::new(i as u64, m)).collect()
}
