//! World model and the bidirectional semantic ↔ DS action dictionary.
//!
//! The dictionary is rebuilt from a scene snapshot and the held state. Each
//! valid verb/object pair gets one DS action whose attractor is derived from
//! the object pose; an estimated DS action is mapped back to the entry with
//! the nearest attractor.

use std::fmt;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ds::{DsAction, DynamicsRanges, SpeedCap};
use crate::pose::{rotation_angle, Pose};

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("scene has no objects")]
    EmptyScene,
    #[error("duplicate object id '{0}'")]
    DuplicateId(String),
    #[error("object '{0}' rests on unknown object '{1}'")]
    UnknownParent(String, String),
    #[error("category C object '{0}' must rest on a category A or B object")]
    Unsupported(String),
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("object '{0}' cannot be held by both robot and human")]
    DoublyHeld(String),
    #[error("'{0}' is not an available action")]
    UnknownAction(SemanticAction),
}

/// Item taxonomy: mountable items, environment locations, unmounted food.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    A,
    B,
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub label: String,
    pub category: Category,
    pub pose: Pose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atop: Option<String>,
}

/// Validated object list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SceneObject>", into = "Vec<SceneObject>")]
pub struct Scene {
    objects: Vec<SceneObject>,
}

impl TryFrom<Vec<SceneObject>> for Scene {
    type Error = SceneError;
    fn try_from(objects: Vec<SceneObject>) -> Result<Self, SceneError> {
        Scene::new(objects)
    }
}

impl From<Scene> for Vec<SceneObject> {
    fn from(scene: Scene) -> Self {
        scene.objects
    }
}

impl Scene {
    pub fn new(objects: Vec<SceneObject>) -> Result<Self, SceneError> {
        if objects.is_empty() {
            return Err(SceneError::EmptyScene);
        }
        for (i, o) in objects.iter().enumerate() {
            if objects[..i].iter().any(|p| p.id == o.id) {
                return Err(SceneError::DuplicateId(o.id.clone()));
            }
        }
        for o in &objects {
            match (&o.atop, o.category) {
                (Some(parent), _) => {
                    let p = objects
                        .iter()
                        .find(|p| &p.id == parent)
                        .ok_or_else(|| SceneError::UnknownParent(o.id.clone(), parent.clone()))?;
                    if o.category == Category::C && p.category == Category::C {
                        return Err(SceneError::Unsupported(o.id.clone()));
                    }
                }
                (None, Category::C) => return Err(SceneError::Unsupported(o.id.clone())),
                (None, _) => {}
            }
        }
        Ok(Self { objects })
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn get(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.get(id).map(|o| o.label.as_str())
    }

    /// Case-insensitive label lookup, ignoring surrounding quotes.
    pub fn find_by_label(&self, label: &str) -> Option<&SceneObject> {
        let wanted = normalize_label(label);
        self.objects.iter().find(|o| normalize_label(&o.label) == wanted)
    }

    /// Moves `id` to `pose`, carrying along every object resting on it.
    pub fn move_object(&mut self, id: &str, pose: Pose) -> Result<(), SceneError> {
        let old = self.get(id).ok_or_else(|| SceneError::UnknownObject(id.to_string()))?.pose;
        let delta = pose.position - old.position;
        let mut moved = vec![id.to_string()];
        let mut i = 0;
        while i < moved.len() {
            let parent = moved[i].clone();
            for o in &self.objects {
                if o.atop.as_deref() == Some(parent.as_str()) && !moved.contains(&o.id) {
                    moved.push(o.id.clone());
                }
            }
            i += 1;
        }
        for o in &mut self.objects {
            if o.id == id {
                o.pose = pose;
            } else if moved.contains(&o.id) {
                o.pose = o.pose.translated(delta);
            }
        }
        Ok(())
    }

    /// Re-parents `id` (e.g. after a placement).
    pub fn set_atop(&mut self, id: &str, parent: Option<String>) -> Result<(), SceneError> {
        let o =
            self.objects.iter_mut().find(|o| o.id == id).ok_or_else(|| SceneError::UnknownObject(id.to_string()))?;
        o.atop = parent;
        Ok(())
    }

    pub fn validate_held(&self, held: &HeldState) -> Result<(), SceneError> {
        for id in [&held.robot, &held.human].into_iter().flatten() {
            if self.get(id).is_none() {
                return Err(SceneError::UnknownObject(id.clone()));
            }
        }
        if let (Some(r), Some(h)) = (&held.robot, &held.human) {
            if r == h {
                return Err(SceneError::DoublyHeld(r.clone()));
            }
        }
        Ok(())
    }
}

pub fn normalize_label(s: &str) -> String {
    s.trim().trim_matches(|c| matches!(c, '\'' | '"' | '‘' | '’' | '“' | '”')).trim().to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Pick,
    Place,
    CoCarry,
    Tilt,
    Untilt,
    Move,
}

impl Verb {
    pub const ALL: [Verb; 6] = [Verb::Pick, Verb::Place, Verb::CoCarry, Verb::Tilt, Verb::Untilt, Verb::Move];

    pub fn as_str(&self) -> &'static str {
        match self {
            Verb::Pick => "pick",
            Verb::Place => "place",
            Verb::CoCarry => "co-carry",
            Verb::Tilt => "tilt",
            Verb::Untilt => "untilt",
            Verb::Move => "move",
        }
    }

    /// Title-cased form used in command strings, e.g. `Co-carry`.
    pub fn title(&self) -> String {
        let s = self.as_str();
        let mut out = s[..1].to_uppercase();
        out.push_str(&s[1..]);
        out
    }

    /// Lenient parse: case-insensitive, accepts `cocarry`, `co carry`,
    /// `pick up`.
    pub fn parse(s: &str) -> Option<Verb> {
        let key: String = s.trim().to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
        match key.as_str() {
            "pick" | "pickup" => Some(Verb::Pick),
            "place" | "putdown" => Some(Verb::Place),
            "cocarry" => Some(Verb::CoCarry),
            "tilt" => Some(Verb::Tilt),
            "untilt" => Some(Verb::Untilt),
            "move" => Some(Verb::Move),
            _ => None,
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SemanticAction {
    pub verb: Verb,
    pub object: String,
}

impl SemanticAction {
    pub fn new(verb: Verb, object: impl Into<String>) -> Self {
        Self { verb, object: object.into() }
    }
}

impl fmt::Display for SemanticAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} '{}'", self.verb, self.object)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeldState {
    #[serde(default)]
    pub robot: Option<String>,
    #[serde(default)]
    pub human: Option<String>,
}

impl HeldState {
    pub fn nothing() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DictionaryConfig {
    /// Vertical offset of the mount (pick/place/co-carry) pose, meters.
    pub grasp_offset: f64,
    /// Vertical offset of the hover (move) pose, meters.
    pub hover_offset: f64,
    pub tilt_degrees: f64,
    /// Weight converting radians to meters in the matching metric.
    pub match_rotation_weight: f64,
    /// Matches farther than this are rejected.
    pub match_threshold: f64,
    pub dynamics_ranges: DynamicsRanges,
    pub speed_cap: SpeedCap,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self {
            grasp_offset: 0.02,
            hover_offset: 0.15,
            tilt_degrees: 20.0,
            match_rotation_weight: 0.5,
            match_threshold: 0.12,
            dynamics_ranges: DynamicsRanges::default(),
            speed_cap: SpeedCap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub semantic: SemanticAction,
    pub ds: DsAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDictionary {
    entries: Vec<DictionaryEntry>,
}

/// Upright end-effector orientation shared by all non-tilted attractors.
pub fn upright() -> UnitQuaternion<f64> {
    UnitQuaternion::identity()
}

impl ActionDictionary {
    /// Emits every valid verb/object pair, grouped by verb in
    /// [`Verb::ALL`] order and by scene order within a verb. `ee` is the
    /// current end-effector pose, which anchors tilt and untilt.
    pub fn build(scene: &Scene, held: &HeldState, ee: &Pose, cfg: &DictionaryConfig) -> Result<Self, SceneError> {
        scene.validate_held(held)?;
        let dynamics = cfg.dynamics_ranges.midpoint();
        let up = Vector3::z();
        let mount = |o: &SceneObject| Pose::new(o.pose.position + up * cfg.grasp_offset, upright());
        let hover = |o: &SceneObject| Pose::new(o.pose.position + up * cfg.hover_offset, upright());
        let tilt = upright() * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), cfg.tilt_degrees.to_radians());

        let mut entries: Vec<DictionaryEntry> = Vec::new();
        let mut push = |verb: Verb, id: &str, attractor: Pose, compliant: bool| {
            if entries.iter().any(|e| e.ds.attractor == attractor) {
                return;
            }
            entries.push(DictionaryEntry {
                semantic: SemanticAction::new(verb, id),
                ds: DsAction { attractor, dynamics, speed_cap: cfg.speed_cap, compliant },
            });
        };

        let objects = scene.objects();
        match &held.robot {
            None => {
                for o in objects.iter().filter(|o| o.category == Category::A) {
                    if held.human.as_deref() != Some(o.id.as_str()) {
                        push(Verb::Pick, &o.id, mount(o), false);
                    }
                }
                for o in objects.iter().filter(|o| o.category == Category::A) {
                    if held.human.as_deref() == Some(o.id.as_str()) {
                        push(Verb::CoCarry, &o.id, mount(o), true);
                    }
                }
            }
            Some(item) => {
                for o in objects.iter().filter(|o| o.category == Category::B) {
                    push(Verb::Place, &o.id, mount(o), false);
                }
                push(Verb::Tilt, item, Pose::new(ee.position, tilt), false);
                push(Verb::Untilt, item, Pose::new(ee.position, upright()), false);
            }
        }
        for o in objects {
            push(Verb::Move, &o.id, hover(o), false);
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[DictionaryEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn contains(&self, sem: &SemanticAction) -> bool {
        self.entries.iter().any(|e| &e.semantic == sem)
    }

    pub fn ds_actions(&self) -> Vec<DsAction> {
        self.entries.iter().map(|e| e.ds).collect()
    }

    pub fn semantic_to_ds(&self, sem: &SemanticAction) -> Result<&DsAction, SceneError> {
        self.entries
            .iter()
            .find(|e| &e.semantic == sem)
            .map(|e| &e.ds)
            .ok_or_else(|| SceneError::UnknownAction(sem.clone()))
    }

    /// Matching distance: position error plus weighted rotation angle.
    pub fn distance(&self, a: &Pose, b: &Pose, cfg: &DictionaryConfig) -> f64 {
        (a.position - b.position).norm() + cfg.match_rotation_weight * rotation_angle(a.orientation(), b.orientation())
    }

    /// Nearest entry and its distance, ties broken by lowest index.
    pub fn nearest(&self, est: &DsAction, cfg: &DictionaryConfig) -> Option<(&DictionaryEntry, f64)> {
        let mut best: Option<(&DictionaryEntry, f64)> = None;
        for e in &self.entries {
            let d = self.distance(&e.ds.attractor, &est.attractor, cfg);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((e, d));
            }
        }
        best
    }

    /// Semantic action whose attractor is nearest to `est`, or `None` when
    /// nothing lies within `cfg.match_threshold`.
    pub fn ds_to_semantic(&self, est: &DsAction, cfg: &DictionaryConfig) -> Option<&SemanticAction> {
        self.nearest(est, cfg).filter(|(_, d)| *d <= cfg.match_threshold).map(|(e, _)| &e.semantic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn obj(id: &str, label: &str, category: Category, p: [f64; 3]) -> SceneObject {
        SceneObject {
            id: id.into(),
            label: label.into(),
            category,
            pose: Pose::from_position(Vector3::from(p)),
            atop: None,
        }
    }

    fn small_scene() -> Scene {
        Scene::new(vec![
            obj("pot", "cooking pot", Category::A, [0.5, 0.0, 0.1]),
            obj("stove", "on the stove", Category::B, [0.5, 0.4, 0.0]),
            obj("counter", "on the counter", Category::B, [0.5, -0.4, 0.0]),
        ])
        .unwrap()
    }

    fn kitchen() -> Scene {
        Scene::new(vec![
            obj("water", "gallon of water", Category::A, [0.3, -0.5, 0.1]),
            obj("pot", "cooking pot", Category::A, [0.5, 0.0, 0.1]),
            obj("stove", "on the stove", Category::B, [0.5, 0.4, 0.0]),
            obj("counter", "on the counter", Category::B, [0.5, -0.4, 0.0]),
        ])
        .unwrap()
    }

    fn sems(d: &ActionDictionary) -> Vec<String> {
        d.entries().iter().map(|e| e.semantic.to_string()).collect()
    }

    #[test]
    fn empty_handed_dictionary() {
        let d = ActionDictionary::build(
            &small_scene(),
            &HeldState::nothing(),
            &Pose::identity(),
            &DictionaryConfig::default(),
        )
        .unwrap();
        assert_eq!(sems(&d), ["pick 'pot'", "move 'pot'", "move 'stove'", "move 'counter'"]);
    }

    #[test]
    fn holding_dictionary_matches_interaction_shape() {
        let held = HeldState { robot: Some("pot".into()), human: None };
        let ee = Pose::from_position(Vector3::new(0.5, 0.0, 0.12));
        let d = ActionDictionary::build(&kitchen(), &held, &ee, &DictionaryConfig::default()).unwrap();
        assert_eq!(
            sems(&d),
            [
                "place 'stove'",
                "place 'counter'",
                "tilt 'pot'",
                "untilt 'pot'",
                "move 'water'",
                "move 'pot'",
                "move 'stove'",
                "move 'counter'",
            ]
        );
        assert!(!d.entries().iter().any(|e| e.semantic.verb == Verb::Pick));
    }

    #[test]
    fn attractor_offsets() {
        let cfg = DictionaryConfig::default();
        let d = ActionDictionary::build(&small_scene(), &HeldState::nothing(), &Pose::identity(), &cfg).unwrap();
        let pick = d.semantic_to_ds(&SemanticAction::new(Verb::Pick, "pot")).unwrap();
        assert!((pick.attractor.position - Vector3::new(0.5, 0.0, 0.12)).norm() < 1e-12);
        let mv = d.semantic_to_ds(&SemanticAction::new(Verb::Move, "stove")).unwrap();
        assert!((mv.attractor.position - Vector3::new(0.5, 0.4, 0.15)).norm() < 1e-12);
        assert_eq!(pick.dynamics, cfg.dynamics_ranges.midpoint());
    }

    #[test]
    fn tilt_is_twenty_degrees() {
        let held = HeldState { robot: Some("pot".into()), human: None };
        let d = ActionDictionary::build(&kitchen(), &held, &Pose::identity(), &DictionaryConfig::default()).unwrap();
        let t = d.semantic_to_ds(&SemanticAction::new(Verb::Tilt, "pot")).unwrap();
        let angle = rotation_angle(t.attractor.orientation(), &upright());
        assert!((angle - 20f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn pick_while_holding_is_unknown() {
        let held = HeldState { robot: Some("pot".into()), human: None };
        let d = ActionDictionary::build(&kitchen(), &held, &Pose::identity(), &DictionaryConfig::default()).unwrap();
        let sem = SemanticAction::new(Verb::Pick, "pot");
        assert_eq!(d.semantic_to_ds(&sem), Err(SceneError::UnknownAction(sem)));
    }

    #[test]
    fn human_held_item_offers_co_carry() {
        let held = HeldState { robot: None, human: Some("pot".into()) };
        let d = ActionDictionary::build(&kitchen(), &held, &Pose::identity(), &DictionaryConfig::default()).unwrap();
        let cc = d.semantic_to_ds(&SemanticAction::new(Verb::CoCarry, "pot")).unwrap();
        assert!(cc.compliant);
        assert!(!d.contains(&SemanticAction::new(Verb::Pick, "pot")));
    }

    #[test]
    fn nearest_matching() {
        let cfg = DictionaryConfig::default();
        let held = HeldState { robot: Some("pot".into()), human: None };
        // the held pot travels with the end-effector, away from both places
        let mut scene = kitchen();
        scene.move_object("pot", Pose::from_position(Vector3::new(0.0, 0.0, 0.6))).unwrap();
        let d =
            ActionDictionary::build(&scene, &held, &Pose::from_position(Vector3::new(0.0, 0.0, 0.62)), &cfg).unwrap();
        let stove = *d.semantic_to_ds(&SemanticAction::new(Verb::Place, "stove")).unwrap();
        let counter = *d.semantic_to_ds(&SemanticAction::new(Verb::Place, "counter")).unwrap();
        assert_eq!(d.ds_to_semantic(&stove, &cfg), Some(&SemanticAction::new(Verb::Place, "stove")));

        // midpoint between the two places, nudged 0.01 m toward the stove
        let mid = (stove.attractor.position + counter.attractor.position) / 2.0;
        let toward = (stove.attractor.position - counter.attractor.position).normalize();
        let mut est = stove;
        est.attractor.position = mid + toward * 0.01;
        // brute-force nearest over all entries, ignoring the threshold
        let oracle = d
            .entries()
            .iter()
            .min_by(|a, b| {
                let da = (a.ds.attractor.position - est.attractor.position).norm()
                    + 0.5 * rotation_angle(a.ds.attractor.orientation(), est.attractor.orientation());
                let db = (b.ds.attractor.position - est.attractor.position).norm()
                    + 0.5 * rotation_angle(b.ds.attractor.orientation(), est.attractor.orientation());
                da.total_cmp(&db)
            })
            .unwrap();
        let loose = DictionaryConfig { match_threshold: 10.0, ..cfg };
        assert_eq!(d.ds_to_semantic(&est, &loose), Some(&oracle.semantic));
        assert_eq!(oracle.semantic, SemanticAction::new(Verb::Place, "stove"));

        let mut far = stove;
        far.attractor.position += Vector3::new(0.0, 0.0, 1.0);
        let far_from_all = d.entries().iter().all(|e| (e.ds.attractor.position - far.attractor.position).norm() > 0.12);
        assert!(far_from_all);
        assert_eq!(d.ds_to_semantic(&far, &cfg), None);
    }

    #[test]
    fn scene_validation() {
        assert_eq!(Scene::new(vec![]), Err(SceneError::EmptyScene));
        let mut beans = obj("beans", "Beans", Category::C, [0.5, 0.0, 0.15]);
        assert_eq!(Scene::new(vec![beans.clone()]), Err(SceneError::Unsupported("beans".into())));
        beans.atop = Some("pot".into());
        let s = Scene::new(vec![obj("pot", "cooking pot", Category::A, [0.5, 0.0, 0.1]), beans.clone()]).unwrap();
        assert_eq!(s.find_by_label("'beans'").unwrap().id, "beans");
        let dup = Scene::new(vec![beans.clone(), beans]);
        assert!(matches!(dup, Err(SceneError::DuplicateId(_)) | Err(SceneError::UnknownParent(..))));
    }

    #[test]
    fn moving_parent_carries_children() {
        let mut beans = obj("beans", "Beans", Category::C, [0.5, 0.0, 0.15]);
        beans.atop = Some("pot".into());
        let mut s = Scene::new(vec![obj("pot", "cooking pot", Category::A, [0.5, 0.0, 0.1]), beans]).unwrap();
        s.move_object("pot", Pose::from_position(Vector3::new(0.0, 0.0, 0.1))).unwrap();
        assert!((s.get("beans").unwrap().pose.position - Vector3::new(0.0, 0.0, 0.15)).norm() < 1e-12);
    }

    #[test]
    fn verb_parsing() {
        assert_eq!(Verb::parse("Co-Carry"), Some(Verb::CoCarry));
        assert_eq!(Verb::parse(" PICK "), Some(Verb::Pick));
        assert_eq!(Verb::parse("circular"), None);
        assert_eq!(Verb::CoCarry.title(), "Co-carry");
    }

    #[test]
    fn dictionary_is_pure() {
        let cfg = DictionaryConfig::default();
        let held = HeldState { robot: Some("pot".into()), human: None };
        let ee = Pose::from_position(Vector3::new(0.1, 0.2, 0.3));
        let a = ActionDictionary::build(&kitchen(), &held, &ee, &cfg).unwrap();
        let b = ActionDictionary::build(&kitchen(), &held, &ee, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
