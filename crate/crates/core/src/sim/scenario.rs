//! Scenario files (TOML) with sections `run`, `scene`, `human`,
//! `controller`, `estimator` and `llm`.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::correction::CorrectionConfig;
use super::human::HumanSpec;
use super::plant::PlantConfig;
use crate::approach::ApproachConfig;
use crate::controller::ControllerConfig;
use crate::estimator::EstimatorConfig;
use crate::llm::{LiveConfig, OrchestratorConfig, Policy};
use crate::pose::Pose;
use crate::scene::{Category, DictionaryConfig, HeldState, Scene, SceneObject};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), message: message.into() }
}

/// Attractor-arrival thresholds that trigger the next model query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrivalConfig {
    pub position: f64,
    pub rotation: f64,
    pub speed: f64,
}

impl Default for ArrivalConfig {
    fn default() -> Self {
        Self { position: 0.02, rotation: 0.05, speed: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    pub seed: u64,
    /// Simulated seconds.
    pub duration: f64,
    pub arrival: ArrivalConfig,
    pub correction: CorrectionConfig,
    pub plant: PlantConfig,
    pub approach: ApproachConfig,
    /// Particles included in logged clouds.
    pub cloud_size: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            seed: 0,
            duration: 10.0,
            arrival: ArrivalConfig::default(),
            correction: CorrectionConfig::default(),
            plant: PlantConfig::default(),
            approach: ApproachConfig::default(),
            cloud_size: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: String,
    pub label: String,
    pub category: Category,
    pub position: [f64; 3],
    /// `[w, x, y, z]`, identity when omitted.
    #[serde(default)]
    pub orientation: Option<[f64; 4]>,
    #[serde(default)]
    pub atop: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EeSpec {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
}

impl Default for EeSpec {
    fn default() -> Self {
        Self { position: [0.4, 0.0, 0.3], orientation: [1.0, 0.0, 0.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub robot_holding: Option<String>,
    #[serde(default)]
    pub human_holding: Option<String>,
    #[serde(default)]
    pub ee: EeSpec,
    #[serde(default)]
    pub dictionary: DictionaryConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientKind {
    #[default]
    Mock,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSpec {
    pub client: ClientKind,
    /// Mock policy file, relative to the scenario file.
    pub policy: Option<String>,
    /// Inline mock policy, used when `policy` is absent.
    pub mock: Option<Policy>,
    pub live: LiveConfig,
    pub history_window: usize,
    pub retry_budget: usize,
    /// Wait after a failed query before asking again, seconds.
    pub requery_delay: f64,
    /// Minimum spacing between queries, seconds.
    pub min_query_interval: f64,
}

impl Default for LlmSpec {
    fn default() -> Self {
        let o = OrchestratorConfig::default();
        Self {
            client: ClientKind::Mock,
            policy: None,
            mock: None,
            live: LiveConfig::default(),
            history_window: o.history_window,
            retry_budget: o.retry_budget,
            requery_delay: 1.0,
            min_query_interval: 0.5,
        }
    }
}

impl LlmSpec {
    pub fn orchestrator(&self) -> OrchestratorConfig {
        OrchestratorConfig { history_window: self.history_window, retry_budget: self.retry_budget }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub run: RunSpec,
    pub scene: SceneSpec,
    #[serde(default)]
    pub human: HumanSpec,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub llm: LlmSpec,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Scenario {
    /// Parses and validates scenario text.
    pub fn from_toml(text: &str, base_dir: Option<&Path>) -> Result<Self, ScenarioError> {
        let mut s: Scenario = toml::from_str(text)?;
        s.base_dir = base_dir.map(Path::to_path_buf);
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text, path.parent())
    }

    pub fn build_scene(&self) -> Result<Scene, ScenarioError> {
        let mut objects = Vec::with_capacity(self.scene.objects.len());
        for (i, o) in self.scene.objects.iter().enumerate() {
            let pose = Pose::from_wxyz(o.position, o.orientation.unwrap_or([1.0, 0.0, 0.0, 0.0])).ok_or_else(|| {
                invalid(format!("scene.objects[{i}]"), "pose must be finite with a nonzero quaternion")
            })?;
            objects.push(SceneObject {
                id: o.id.clone(),
                label: o.label.clone(),
                category: o.category,
                pose,
                atop: o.atop.clone(),
            });
        }
        Scene::new(objects).map_err(|e| invalid("scene.objects", e.to_string()))
    }

    pub fn held(&self) -> HeldState {
        HeldState { robot: self.scene.robot_holding.clone(), human: self.scene.human_holding.clone() }
    }

    pub fn ee_pose(&self) -> Result<Pose, ScenarioError> {
        Pose::from_wxyz(self.scene.ee.position, self.scene.ee.orientation)
            .ok_or_else(|| invalid("scene.ee", "pose must be finite with a nonzero quaternion"))
    }

    /// Mock policy from the referenced file or the inline table.
    pub fn mock_policy(&self) -> Result<Policy, ScenarioError> {
        match (&self.llm.policy, &self.llm.mock) {
            (Some(p), _) => {
                let path = self.resolve(p);
                Policy::load(&path).map_err(|e| invalid("llm.policy", e.to_string()))
            }
            (None, Some(p)) => {
                p.validate().map_err(|e| invalid("llm.mock", e.to_string()))?;
                Ok(p.clone())
            }
            (None, None) => Err(invalid("llm", "mock client needs `policy` or an inline `mock` table")),
        }
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        match &self.base_dir {
            Some(dir) => dir.join(relative),
            None => PathBuf::from(relative),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let r = &self.run;
        if !(r.duration.is_finite() && r.duration >= 0.0) {
            return Err(invalid("run.duration", "must be finite and >= 0"));
        }
        let a = &r.arrival;
        if !(a.position > 0.0 && a.rotation > 0.0 && a.speed > 0.0) {
            return Err(invalid("run.arrival", "thresholds must be positive"));
        }
        let c = &r.correction;
        if !(0.0 < c.c_low && c.c_low < c.c_high && c.c_high <= 1.0) {
            return Err(invalid("run.correction", "need 0 < c_low < c_high <= 1"));
        }
        r.plant.validate().map_err(|m| invalid("run.plant", m))?;
        if r.approach.min_speed < 0.0 || !(r.approach.angle_sigma > 0.0 && r.approach.distance_sigma > 0.0) {
            return Err(invalid("run.approach", "speeds must be >= 0 and scales positive"));
        }
        self.controller.validate().map_err(|e| invalid("controller", e.to_string()))?;
        self.estimator.validate().map_err(|e| invalid("estimator", e.to_string()))?;

        let scene = self.build_scene()?;
        self.ee_pose()?;
        scene.validate_held(&self.held()).map_err(|e| invalid("scene.robot_holding", e.to_string()))?;
        if let Some(id) = &self.scene.robot_holding {
            if scene.get(id).is_some_and(|o| o.category != Category::A) {
                return Err(invalid("scene.robot_holding", format!("'{id}' is not a category A item")));
            }
        }
        self.human.validate(&scene).map_err(|(field, message)| ScenarioError::Invalid { field, message })?;

        let l = &self.llm;
        if !(l.requery_delay >= 0.0 && l.min_query_interval >= 0.0) {
            return Err(invalid("llm", "delays must be >= 0"));
        }
        if l.client == ClientKind::Mock {
            self.mock_policy()?;
        }
        Ok(())
    }

    /// Hand position helper for examples.
    pub fn object_position(&self, id: &str) -> Option<Vector3<f64>> {
        self.scene.objects.iter().find(|o| o.id == id).map(|o| Vector3::from(o.position))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r##"
        [run]
        duration = 1.0

        [[scene.objects]]
        id = "stove"
        label = "on the stove"
        category = "B"
        position = [0.5, 0.2, 0.0]

        [llm.mock]
        fallback = "# Move ; on the stove &"
    "##;

    #[test]
    fn minimal_scenario_parses() {
        let s = Scenario::from_toml(MINIMAL, None).unwrap();
        assert_eq!(s.run.arrival, ArrivalConfig::default());
        assert_eq!(s.controller, ControllerConfig::default());
        assert_eq!(s.build_scene().unwrap().objects().len(), 1);
    }

    fn field_of(text: &str) -> String {
        match Scenario::from_toml(text, None) {
            Err(ScenarioError::Invalid { field, .. }) => field,
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of(&MINIMAL.replace("duration = 1.0", "duration = -1.0")), "run.duration");
        let held = MINIMAL.replace("[[scene.objects]]", "[scene]\nrobot_holding = \"pot\"\n\n[[scene.objects]]");
        assert_eq!(field_of(&held), "scene.robot_holding");
        let pull = format!("{MINIMAL}\n[[human.pull]]\nstart = 0.0\nduration = 1.0\ntarget_object = \"sink\"\n");
        assert_eq!(field_of(&pull), "human.pull[0].target_object");
        let no_policy = MINIMAL.replace("[llm.mock]", "[llm]").replace("fallback = ", "requery_delay = 1.0 #");
        assert_eq!(field_of(&no_policy), "llm");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            Scenario::from_toml(&MINIMAL.replace("duration = 1.0", "duration = 1.0\nspeed = 2"), None),
            Err(ScenarioError::Parse(_))
        ));
    }
}
