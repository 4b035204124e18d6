//! Serves an interactive session and drives it with an in-process client:
//! the client waits one second, pushes the arm sideways with 10 N for half
//! a second, and prints what comes back over the wire.
//!
//! ```text
//! cargo run --example live_session
//! ```

use std::sync::mpsc;
use std::thread;

use dscorrect::gateway::{serve_session, ApplyWrench, Frame, Message, SessionOptions};
use dscorrect::sim::Scenario;
use tungstenite::Message as WsMessage;

const SCENARIO: &str = r##"
[run]
name = "live-demo"
duration = 3.0

[scene]
ee = { position = [0.5, 0.0, 0.2] }

[[scene.objects]]
id = "stove"
label = "on the stove"
category = "B"
position = [0.5, 0.3, 0.0]

[[scene.objects]]
id = "counter"
label = "on the counter"
category = "B"
position = [0.5, -0.3, 0.0]

[human]
mode = "interactive"

[llm.mock]
fallback = "# Move ; on the counter & Hover over the counter."
"##;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_toml(SCENARIO, None)?;
    let (tx, rx) = mpsc::channel();
    let server = thread::spawn(move || {
        serve_session(&scenario, "127.0.0.1:0", SessionOptions { on_bound: Some(tx), ..SessionOptions::default() })
    });
    let addr = rx.recv()?;
    let (mut ws, _) = tungstenite::connect(format!("ws://{addr}"))?;
    let mut seq = 0;
    let mut push = |ws: &mut tungstenite::WebSocket<_>, force: [f64; 3]| -> Result<(), tungstenite::Error> {
        let f = Frame::new(seq, Message::ApplyWrench(ApplyWrench { force, torque: [0.0; 3] }));
        seq += 1;
        ws.send(WsMessage::text(f.to_json()))
    };

    let mut phase = 0;
    while let Ok(msg) = ws.read() {
        let WsMessage::Text(text) = msg else { continue };
        let frame = Frame::from_json(text.as_str())?;
        match &frame.message {
            Message::StateSnapshot(s) => {
                if s.tick % 40 == 0 {
                    println!(
                        "t={:.1}s  c_lin={:.2}  ee=({:.3}, {:.3}, {:.3})",
                        s.tick as f64 / 200.0,
                        s.c_lin,
                        s.ee[0],
                        s.ee[1],
                        s.ee[2]
                    );
                }
                if phase == 0 && s.tick >= 200 {
                    push(&mut ws, [0.0, 10.0, 0.0])?;
                    phase = 1;
                } else if phase == 1 && s.tick >= 300 {
                    push(&mut ws, [0.0; 3])?;
                    phase = 2;
                }
            }
            Message::Event(e) if e.kind != "init" => println!("event: {}", e.kind),
            Message::TranscriptDelta(d) if d.proposed_action.is_some() => {
                println!("model step {}: {:?}", d.step, d.proposed_action)
            }
            _ => {}
        }
    }
    let log = server.join().expect("server thread")?;
    println!("{} wrench samples logged", log.of_kind("wrench_sample").count());
    Ok(())
}
