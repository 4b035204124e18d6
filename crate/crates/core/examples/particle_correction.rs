//! Intent estimation on its own: the robot is commanded toward the
//! counter, then the end-effector starts moving toward the stove. The
//! particle filter re-seeds from the scene and its weighted mean swings
//! over to the stove.
//!
//! ```text
//! cargo run --example particle_correction
//! ```

use nalgebra::Vector3;

use dscorrect::estimator::{BeliefState, EstimatorConfig, ESTIMATOR_DT};
use dscorrect::pose::{Pose, Twist};
use dscorrect::scene::{
    ActionDictionary, Category, DictionaryConfig, HeldState, Scene, SceneObject, SemanticAction, Verb,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let place = |id: &str, y: f64| SceneObject {
        id: id.into(),
        label: format!("on the {id}"),
        category: Category::B,
        pose: Pose::from_position(Vector3::new(0.55, y, 0.0)),
        atop: None,
    };
    let scene = Scene::new(vec![place("stove", 0.15), place("counter", -0.25), place("sink", 0.5)])?;
    let cfg = DictionaryConfig::default();
    let mut ee = Pose::from_position(Vector3::new(0.55, -0.1, 0.15));
    let dict = ActionDictionary::build(&scene, &HeldState::nothing(), &ee, &cfg)?;
    let counter = *dict.semantic_to_ds(&SemanticAction::new(Verb::Move, "counter"))?;
    let stove = *dict.semantic_to_ds(&SemanticAction::new(Verb::Move, "stove"))?;

    let est = EstimatorConfig::default();
    let mut belief = BeliefState::new(counter, est.particles, 7);
    // the human drags the arm toward the stove with low confidence
    let c = 0.2;
    for k in 0..30 {
        let v = stove.reference_velocity(&ee);
        ee = Pose::new(ee.position + v.linear * ESTIMATOR_DT, *ee.orientation());
        belief.predict(c, ESTIMATOR_DT, &est);
        belief.update_weights(&ee, &Twist::new(v.linear, Vector3::zeros()), &est);
        let guess = dict.ds_to_semantic(belief.estimate(), &cfg).map_or("-".to_string(), |s| s.to_string());
        if k % 3 == 0 {
            let p = belief.estimate().attractor.position;
            println!(
                "t={:4.2}s  estimate ({:.3}, {:.3}, {:.3})  nearest: {guess}",
                k as f64 * ESTIMATOR_DT,
                p.x,
                p.y,
                p.z
            );
        }
        belief.resample(c, &dict.ds_actions(), &est.dynamics_ranges)?;
    }
    Ok(())
}
