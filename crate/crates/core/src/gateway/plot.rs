//! Time series extracted from an event log as CSV files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::sim::{Event, EventLog};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn action_text(a: &Option<crate::scene::SemanticAction>) -> String {
    a.as_ref().map(|a| format!("{} {}", a.verb, a.object)).unwrap_or_default()
}

/// Writes `confidence.csv`, `estimate.csv`, `particles.csv` and
/// `events.csv` into `dir`, creating it if needed.
pub fn write_plot_csvs(log: &EventLog, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let dt = log
        .records
        .iter()
        .find_map(|r| match &r.event {
            Event::Init { control_dt, .. } => Some(*control_dt),
            _ => None,
        })
        .unwrap_or(crate::controller::CONTROL_DT);
    let open = |name: &str| File::create(dir.join(name)).map(BufWriter::new);
    let mut conf = open("confidence.csv")?;
    let mut est = open("estimate.csv")?;
    let mut parts = open("particles.csv")?;
    let mut events = open("events.csv")?;
    writeln!(conf, "t,c_lin,c_rot,resample_rate")?;
    writeln!(est, "t,attractor_x,attractor_y,attractor_z,ee_x,ee_y,ee_z,speed,action")?;
    writeln!(parts, "t,x,y,z,weight")?;
    writeln!(events, "t,kind,detail")?;

    for r in &log.records {
        let t = r.tick as f64 * dt;
        match &r.event {
            Event::ConfidenceSample { c_lin, c_rot, resample_rate } => {
                writeln!(conf, "{t:.3},{c_lin},{c_rot},{resample_rate}")?;
            }
            Event::EstimateSample { estimate, ee, twist, action, cloud, .. } => {
                let a = estimate.attractor.position;
                let p = ee.position;
                writeln!(
                    est,
                    "{t:.3},{},{},{},{},{},{},{},{}",
                    a.x,
                    a.y,
                    a.z,
                    p.x,
                    p.y,
                    p.z,
                    twist.linear.norm(),
                    quote(&action_text(action))
                )?;
                for c in cloud.iter().flatten() {
                    writeln!(parts, "{t:.3},{},{},{},{}", c.position.x, c.position.y, c.position.z, c.weight)?;
                }
            }
            Event::WrenchSample { .. } => {}
            ev => {
                let detail = serde_json::to_string(ev).expect("events serialize");
                writeln!(events, "{t:.3},{},{}", ev.kind(), quote(&detail))?;
            }
        }
    }
    for w in [&mut conf, &mut est, &mut parts, &mut events] {
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_four_files() {
        let mut log = EventLog::default();
        log.push(20, Event::ConfidenceSample { c_lin: 0.5, c_rot: 1.0, resample_rate: 0.5 });
        log.push(20, Event::Pick { object: "pot".into() });
        let dir = tempfile::tempdir().unwrap();
        write_plot_csvs(&log, dir.path()).unwrap();
        let c = std::fs::read_to_string(dir.path().join("confidence.csv")).unwrap();
        assert_eq!(c, "t,c_lin,c_rot,resample_rate\n0.100,0.5,1,0.5\n");
        let e = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
        assert_eq!(e.lines().nth(1).unwrap(), r#"0.100,pick,"{""kind"":""pick"",""object"":""pot""}""#);
        assert!(dir.path().join("particles.csv").exists());
    }
}
