use std::net::TcpStream;
use std::sync::mpsc;
use std::thread;

use dscorrect::gateway::{replay_frames, serve_replay, serve_session, Frame, Message, SessionOptions, StateSnapshot};
use dscorrect::sim::{Event, Scenario};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message as WsMessage, WebSocket};

const SCENARIO: &str = r##"
[run]
name = "loopback"
seed = 5
duration = 3.0

[scene]
ee = { position = [0.5, 0.0, 0.2] }

[[scene.objects]]
id = "stove"
label = "on the stove"
category = "B"
position = [0.5, 0.2, 0.0]

[[scene.objects]]
id = "counter"
label = "on the counter"
category = "B"
position = [0.5, -0.2, 0.0]

[human]
mode = "interactive"

[llm.mock]
fallback = "# Move ; on the counter & Hover over the counter."
"##;

type Ws = WebSocket<MaybeTlsStream<TcpStream>>;

fn connect(addr: std::net::SocketAddr) -> Ws {
    tungstenite::connect(format!("ws://{addr}")).expect("connect").0
}

fn send(ws: &mut Ws, seq: u64, m: Message) {
    ws.send(WsMessage::text(Frame::new(seq, m).to_json())).unwrap();
}

/// Reads frames until the server closes, calling `on_frame` for each.
fn drain(ws: &mut Ws, mut on_frame: impl FnMut(&mut Ws, &Frame)) -> Vec<Frame> {
    let mut frames = Vec::new();
    loop {
        match ws.read() {
            Ok(WsMessage::Text(t)) => {
                let f = Frame::from_json(t.as_str()).expect("server frames parse");
                on_frame(ws, &f);
                frames.push(f);
            }
            Ok(WsMessage::Close(_)) | Err(_) => break,
            Ok(_) => {}
        }
    }
    frames
}

fn snapshot(f: &Frame) -> Option<&StateSnapshot> {
    match &f.message {
        Message::StateSnapshot(s) => Some(s),
        _ => None,
    }
}

#[test]
fn pushed_wrench_reaches_the_log_and_live_frames_match_replay() {
    let scenario = Scenario::from_toml(SCENARIO, None).unwrap();
    let (tx, rx) = mpsc::channel();
    let server = thread::spawn(move || {
        serve_session(
            &scenario,
            "127.0.0.1:0",
            SessionOptions { speed: 1.0, wait_for_client: true, on_bound: Some(tx) },
        )
    });
    let mut ws = connect(rx.recv().unwrap());
    let mut phase = 0;
    let frames = drain(&mut ws, |ws, f| {
        let Some(s) = snapshot(f) else { return };
        if phase == 0 && s.tick >= 200 {
            send(
                ws,
                0,
                Message::ApplyWrench(dscorrect::gateway::ApplyWrench { force: [10.0, 0.0, 0.0], torque: [0.0; 3] }),
            );
            phase = 1;
        } else if phase == 1 && s.tick >= 300 {
            send(ws, 1, Message::ApplyWrench(dscorrect::gateway::ApplyWrench { force: [0.0; 3], torque: [0.0; 3] }));
            phase = 2;
        }
    });
    let log = server.join().unwrap().unwrap();
    assert_eq!(phase, 2);

    let pushed: Vec<f64> = log
        .records
        .iter()
        .filter_map(|r| match &r.event {
            Event::WrenchSample { human, .. } if (human.force.x - 10.0).abs() < 1e-12 => Some(r.tick as f64 * 0.005),
            _ => None,
        })
        .collect();
    assert!(!pushed.is_empty(), "no wrench samples recorded");
    let span = pushed.last().unwrap() - pushed.first().unwrap() + 0.05;
    assert!((0.35..=0.65).contains(&span), "push lasted {span} s");
    assert!(pushed[0] >= 1.0);

    for (i, f) in frames.iter().enumerate() {
        assert_eq!(f.seq, i as u64, "outgoing seq must count up");
    }
    let replay = replay_frames(&log);
    let replay_snaps: std::collections::BTreeMap<u64, &StateSnapshot> =
        replay.iter().filter_map(snapshot).map(|s| (s.tick, s)).collect();
    let live_snaps: Vec<&StateSnapshot> = frames.iter().filter_map(snapshot).collect();
    assert!(live_snaps.len() > 30);
    for s in live_snaps {
        assert_eq!(Some(&s), replay_snaps.get(&s.tick), "snapshot at tick {} differs", s.tick);
    }
    let events = |fs: &[Frame]| -> Vec<Message> {
        fs.iter()
            .filter(|f| matches!(f.message, Message::Event(_) | Message::TranscriptDelta(_)))
            .map(|f| f.message.clone())
            .collect()
    };
    assert_eq!(events(&frames), events(&replay));
}

#[test]
fn reset_restarts_the_run_and_keeps_seq() {
    let mut scenario = Scenario::from_toml(SCENARIO, None).unwrap();
    scenario.run.duration = 1.0;
    let (tx, rx) = mpsc::channel();
    let server = thread::spawn(move || {
        serve_session(
            &scenario,
            "127.0.0.1:0",
            SessionOptions { speed: 2.0, wait_for_client: true, on_bound: Some(tx) },
        )
    });
    let mut ws = connect(rx.recv().unwrap());
    let mut reset_sent = false;
    let mut max_before = 0;
    let frames = drain(&mut ws, |ws, f| {
        if let Some(s) = snapshot(f) {
            if !reset_sent && s.tick >= 100 {
                max_before = s.tick;
                send(ws, 0, Message::Reset {});
                reset_sent = true;
            }
        }
    });
    server.join().unwrap().unwrap();
    let ticks: Vec<u64> = frames.iter().filter_map(snapshot).map(|s| s.tick).collect();
    assert!(ticks.windows(2).any(|w| w[1] < w[0]), "no restart seen in {ticks:?}");
    assert!(max_before >= 100);
    assert!(frames.iter().enumerate().all(|(i, f)| f.seq == i as u64));
    // a second init event marks the restarted run
    let inits = frames.iter().filter(|f| matches!(&f.message, Message::Event(e) if e.kind == "init")).count();
    assert_eq!(inits, 2);
}

#[test]
fn bad_client_frames_get_error_replies() {
    let mut scenario = Scenario::from_toml(SCENARIO, None).unwrap();
    scenario.run.duration = 0.5;
    let (tx, rx) = mpsc::channel();
    let server = thread::spawn(move || {
        serve_session(
            &scenario,
            "127.0.0.1:0",
            SessionOptions { speed: 1.0, wait_for_client: true, on_bound: Some(tx) },
        )
    });
    let mut ws = connect(rx.recv().unwrap());
    ws.send(WsMessage::text("{not json")).unwrap();
    send(&mut ws, 1, Message::SetPause { paused: false });
    send(&mut ws, 2, Message::Error { message: "clients do not send errors".into() });
    let frames = drain(&mut ws, |_, _| {});
    server.join().unwrap().unwrap();
    let errors: Vec<&str> = frames
        .iter()
        .filter_map(|f| match &f.message {
            Message::Error { message } => Some(message.as_str()),
            _ => None,
        })
        .collect();
    assert_eq!(errors.len(), 2, "{errors:?}");
    assert!(errors[0].starts_with("malformed frame"));
    assert!(errors[1].contains("'error'"));
}

#[test]
fn socket_replay_delivers_every_frame() {
    let scenario = Scenario::from_toml(SCENARIO, None).unwrap();
    let log = dscorrect::sim::run_scenario(&scenario).unwrap();
    let expected = replay_frames(&log);
    let (tx, rx) = mpsc::channel();
    let server = {
        let log = log.clone();
        thread::spawn(move || serve_replay(&log, "127.0.0.1:0", 0.0, Some(&tx)))
    };
    let mut ws = connect(rx.recv().unwrap());
    let frames = drain(&mut ws, |_, _| {});
    server.join().unwrap().unwrap();
    assert_eq!(frames, expected);
    // 3 s at 30 Hz, boundaries 0..=90
    assert_eq!(frames.iter().filter_map(snapshot).count(), 91);
}

#[test]
fn resync_repeats_the_transcript_to_the_asking_client() {
    let scenario = Scenario::from_toml(SCENARIO, None).unwrap();
    let (tx, rx) = mpsc::channel();
    let server = thread::spawn(move || {
        serve_session(
            &scenario,
            "127.0.0.1:0",
            SessionOptions { speed: 4.0, wait_for_client: true, on_bound: Some(tx) },
        )
    });
    let mut ws = connect(rx.recv().unwrap());
    let mut asked_at = None;
    let mut seen = 0;
    let frames = drain(&mut ws, |ws, f| {
        seen += 1;
        if asked_at.is_none() && snapshot(f).is_some_and(|s| s.tick >= 100) {
            send(ws, 0, Message::ResyncTranscript {});
            asked_at = Some(seen);
        }
    });
    server.join().unwrap().unwrap();

    let deltas = |fs: &[Frame]| -> Vec<Message> {
        fs.iter().filter(|f| matches!(f.message, Message::TranscriptDelta(_))).map(|f| f.message.clone()).collect()
    };
    let split = asked_at.expect("run lasted past tick 100");
    let before = deltas(&frames[..split]);
    let after = deltas(&frames[split..]);
    assert!(!before.is_empty());
    assert_eq!(&after[..before.len()], &before[..]);
}
