//! The action dictionary for a small kitchen, before and after the robot
//! picks up the pot, and the nearest-entry lookup for a noisy estimate.
//!
//! ```text
//! cargo run --example scene_dictionary
//! ```

use nalgebra::Vector3;

use dscorrect::ds::DsAction;
use dscorrect::pose::Pose;
use dscorrect::scene::{ActionDictionary, Category, DictionaryConfig, HeldState, Scene, SceneObject};

fn object(id: &str, label: &str, category: Category, p: [f64; 3], atop: Option<&str>) -> SceneObject {
    SceneObject {
        id: id.into(),
        label: label.into(),
        category,
        pose: Pose::from_position(p.into()),
        atop: atop.map(Into::into),
    }
}

fn show(dict: &ActionDictionary) {
    for e in dict.entries() {
        let p = e.ds.attractor.position;
        println!(
            "  {:<22} -> ({:.2}, {:.2}, {:.2}){}",
            e.semantic.to_string(),
            p.x,
            p.y,
            p.z,
            if e.ds.compliant { " compliant" } else { "" }
        );
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = Scene::new(vec![
        object("pot", "cooking pot", Category::A, [0.45, -0.1, 0.0], None),
        object("board", "cutting board", Category::A, [0.3, 0.45, 0.0], None),
        object("beans", "Beans", Category::C, [0.3, 0.45, 0.03], Some("board")),
        object("stove", "on the stove", Category::B, [0.55, 0.2, 0.0], None),
        object("counter", "on the counter", Category::B, [0.6, -0.35, 0.0], None),
    ])?;
    let cfg = DictionaryConfig::default();
    let ee = Pose::from_position(Vector3::new(0.4, 0.0, 0.3));

    println!("hands empty, human holds the board:");
    let held = HeldState { robot: None, human: Some("board".into()) };
    show(&ActionDictionary::build(&scene, &held, &ee, &cfg)?);

    println!("\nrobot holds the pot:");
    let held = HeldState { robot: Some("pot".into()), human: None };
    let dict = ActionDictionary::build(&scene, &held, &ee, &cfg)?;
    show(&dict);

    let noisy = DsAction::at(Pose::from_position(Vector3::new(0.57, 0.18, 0.05)));
    match dict.nearest(&noisy, &cfg) {
        Some((e, d)) if d <= cfg.match_threshold => {
            println!("\nestimate near (0.57, 0.18, 0.05) reads as {} ({d:.3})", e.semantic)
        }
        Some((e, d)) => println!("\nnearest is {} at {d:.3}, beyond the {} threshold", e.semantic, cfg.match_threshold),
        None => println!("\ndictionary is empty"),
    }
    Ok(())
}
