//! Closed-loop DS tracking: a damping controller follows `ẋ = A·d` from a
//! far start pose to the attractor. Prints position and rotation error
//! once per simulated second.
//!
//! ```text
//! cargo run --example ds_convergence
//! ```

use nalgebra::{UnitQuaternion, Vector3};

use dscorrect::controller::{control_wrench, ConfidenceState, ControllerConfig, Wrench, CONTROL_DT};
use dscorrect::ds::DsAction;
use dscorrect::pose::{rotation_angle, Pose, Twist};
use dscorrect::sim::{step_control, PlantConfig, PlantState};

fn main() {
    let goal = Pose::new(Vector3::new(0.5, 0.2, 0.3), UnitQuaternion::from_euler_angles(0.3, -0.2, 1.0));
    let action = DsAction::at(goal);
    let cfg = ControllerConfig::default();
    let mut conf = ConfidenceState::new(&cfg, CONTROL_DT);
    let mut plant = PlantState { pose: Pose::from_position(Vector3::new(-0.3, 0.8, 0.9)), twist: Twist::zero() };

    println!("   t    pos err    rot err   speed");
    for k in 0..=(20.0 / CONTROL_DT) as usize {
        if k % 200 == 0 {
            println!(
                "{:4.0}s  {:9.2e}  {:9.2e}  {:.3}",
                k as f64 * CONTROL_DT,
                (plant.pose.position - goal.position).norm(),
                rotation_angle(plant.pose.orientation(), goal.orientation()),
                plant.twist.linear.norm()
            );
        }
        let reference = action.reference_velocity(&plant.pose);
        conf.update(&plant.twist, &reference, CONTROL_DT, &cfg);
        let cmd = control_wrench(conf.c_lin, conf.c_rot, &plant.twist, &reference, &cfg);
        plant = step_control(&plant, &cmd, &Wrench::zero(), CONTROL_DT, &PlantConfig::default());
    }
}
