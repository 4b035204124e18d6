//! Confidence-scheduled damping. A firm push drags the end-effector off
//! its reference, confidence collapses and the controller softens; once
//! the push ends confidence climbs back at its ascent rate.
//!
//! ```text
//! cargo run --example gain_schedule
//! ```

use nalgebra::Vector3;

use dscorrect::controller::{control_wrench, ConfidenceState, ControllerConfig, Wrench, CONTROL_DT};
use dscorrect::ds::DsAction;
use dscorrect::pose::{Pose, Twist};
use dscorrect::sim::{step_control, PlantConfig, PlantState};

fn main() {
    let cfg = ControllerConfig::default();
    println!("gain at c = 0, 0.5, 1:");
    for c in [0.0, 0.5, 1.0] {
        println!("  linear {:5.1} N·s/m   angular {:5.1} N·m·s/rad", cfg.linear_gain(c), cfg.angular_gain(c));
    }

    let action = DsAction::at(Pose::from_position(Vector3::new(0.5, 0.0, 0.3)));
    let mut plant = PlantState { pose: action.attractor, twist: Twist::zero() };
    let mut conf = ConfidenceState::new(&cfg, CONTROL_DT);
    let push = Wrench::new(Vector3::new(0.0, 10.0, 0.0), Vector3::zeros());

    println!("\n   t   push   c_lin  |F_robot|  offset");
    for k in 0..(4.0 / CONTROL_DT) as usize {
        let t = k as f64 * CONTROL_DT;
        let human = if (0.5..0.8).contains(&t) { push } else { Wrench::zero() };
        let reference = action.reference_velocity(&plant.pose);
        conf.update(&plant.twist, &reference, CONTROL_DT, &cfg);
        let cmd = control_wrench(conf.c_lin, conf.c_rot, &plant.twist, &reference, &cfg);
        if k % 20 == 0 {
            println!(
                "{t:4.1}  {:>4}  {:6.3}  {:8.3}  {:.3}",
                if human.is_zero() { "" } else { "10N" },
                conf.c_lin,
                cmd.force.norm(),
                (plant.pose.position - action.attractor.position).norm()
            );
        }
        plant = step_control(&plant, &cmd, &human, CONTROL_DT, &PlantConfig::default());
    }
}
