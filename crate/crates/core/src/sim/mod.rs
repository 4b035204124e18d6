//! Deterministic fixed-step world: the end-effector plant, human models,
//! pick/place effects, the two-rate scheduler, scenarios and event logs.

mod correction;
mod engine;
mod events;
mod human;
mod plant;
mod scenario;

pub use correction::{detect_correction_episode, CorrectionConfig, CorrectionDetector, EpisodeEvent};
pub use engine::{
    hold_action, run_scenario, scenario_client, PlannerMode, SimError, SimState, Simulation, TICKS_PER_ESTIMATE,
};
pub use events::{CloudPoint, Event, EventLog, EventRecord, ObjectPose};
pub use human::{HandSegment, HoldEvent, HumanMode, HumanSpec, PullSegment, WrenchSegment};
pub use plant::{step_control, PlantConfig, PlantState};
pub use scenario::{
    ArrivalConfig, ClientKind, EeSpec, LlmSpec, ObjectSpec, RunSpec, Scenario, ScenarioError, SceneSpec,
};
