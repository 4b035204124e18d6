//! Two-rate scheduler: control at 200 Hz, estimation and planning at 20 Hz.

use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::thread::JoinHandle;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::correction::{CorrectionDetector, EpisodeEvent};
use super::events::{CloudPoint, Event, EventLog, ObjectPose};
use super::human::HumanMode;
use super::plant::{step_control, PlantState};
use super::scenario::{ClientKind, Scenario, ScenarioError};
use crate::approach::ApproachTracker;
use crate::controller::{control_wrench, ConfidenceState, Wrench, CONTROL_DT};
use crate::ds::DsAction;
use crate::estimator::{resample_rate, BeliefState, ESTIMATOR_DT};
use crate::llm::{
    build_bundle, correction_sentence, decide, transcript_entry, Decision, ExecutionResult, LastResult, LiveClient,
    MockClient, ModelClient, OrchestratorConfig, PromptBundle, PromptState, Transcript,
};
use crate::pose::{rotation_angle, Pose, Twist};
use crate::scene::{ActionDictionary, HeldState, Scene, SemanticAction, Verb};

/// Control ticks per estimator tick.
pub const TICKS_PER_ESTIMATE: u64 = 10;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

/// Snapshot of the latest published state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub tick: u64,
    pub ee: Pose,
    pub twist: Twist,
    pub held: HeldState,
    pub objects: Vec<ObjectPose>,
    pub c_lin: f64,
    pub c_rot: f64,
    pub resample_rate: f64,
    pub action: Option<SemanticAction>,
    pub in_flight: bool,
}

struct Job {
    bundle: PromptBundle,
    scene: Scene,
    dictionary: ActionDictionary,
    transcript: Transcript,
    cfg: OrchestratorConfig,
}

struct Pending {
    step: u64,
    bundle: PromptBundle,
    dictionary: ActionDictionary,
    issued_at: f64,
    /// Decision and the sim time it becomes visible (inline planner only).
    ready: Option<(Decision, f64)>,
}

enum Planner {
    /// Queries run synchronously; replies surface after their simulated
    /// latency. Deterministic with a scripted client.
    Inline(Box<dyn ModelClient>),
    /// Queries run on a worker thread. With `block` the simulation waits
    /// for each reply; otherwise it keeps holding pose until one arrives.
    Worker { jobs: Option<Sender<Job>>, replies: Receiver<Decision>, handle: Option<JoinHandle<()>>, block: bool },
}

impl Planner {
    fn worker(mut client: Box<dyn ModelClient>, block: bool) -> Self {
        let (job_tx, job_rx) = mpsc::channel::<Job>();
        let (reply_tx, reply_rx) = mpsc::channel();
        let handle = std::thread::spawn(move || {
            for job in job_rx {
                let d = decide(client.as_mut(), &job.bundle, &job.scene, &job.dictionary, &job.transcript, &job.cfg);
                if reply_tx.send(d).is_err() {
                    break;
                }
            }
        });
        Planner::Worker { jobs: Some(job_tx), replies: reply_rx, handle: Some(handle), block }
    }
}

impl Drop for Planner {
    fn drop(&mut self) {
        if let Planner::Worker { jobs, handle, .. } = self {
            jobs.take();
            if let Some(h) = handle.take() {
                let _ = h.join();
            }
        }
    }
}

/// How the simulation talks to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerMode {
    Inline,
    Worker { block: bool },
}

/// Builds the scenario's client: the mock policy, or a live client reading
/// its token from the environment.
pub fn scenario_client(scenario: &Scenario) -> Result<Box<dyn ModelClient>, SimError> {
    match scenario.llm.client {
        ClientKind::Mock => Ok(Box::new(MockClient::new(scenario.mock_policy()?))),
        ClientKind::Live => LiveClient::from_env(scenario.llm.live.clone())
            .map(|c| Box::new(c) as Box<dyn ModelClient>)
            .map_err(|e| SimError::Runtime(e.to_string())),
    }
}

pub struct Simulation {
    scenario: Scenario,
    scene: Scene,
    held: HeldState,
    plant: PlantState,
    confidence: ConfidenceState,
    belief: BeliefState,
    dictionary: ActionDictionary,
    /// Action the robot is executing: the model's command or a correction.
    current: Option<SemanticAction>,
    /// Last action commanded by the model.
    commanded: Option<SemanticAction>,
    last_result: Option<LastResult>,
    pending_correction: Option<SemanticAction>,
    transcript: Transcript,
    planner: Planner,
    pending: Option<Pending>,
    detector: CorrectionDetector,
    approach: ApproachTracker,
    human_approach: Option<String>,
    /// Held object and its offset from the end-effector.
    grasp: Option<(String, Vector3<f64>)>,
    external: Wrench,
    human_wrench: Wrench,
    human_was_active: bool,
    next_query_at: f64,
    last_estimate_time: f64,
    tick: u64,
    estimator_ticks: u64,
    log: EventLog,
}

impl Simulation {
    /// Simulation driven by the scenario's own client.
    pub fn new(scenario: Scenario, mode: PlannerMode) -> Result<Self, SimError> {
        let client = scenario_client(&scenario)?;
        Self::with_client(scenario, client, mode)
    }

    pub fn with_client(scenario: Scenario, client: Box<dyn ModelClient>, mode: PlannerMode) -> Result<Self, SimError> {
        scenario.validate()?;
        let scene = scenario.build_scene()?;
        let held = scenario.held();
        let ee = scenario.ee_pose()?;
        let dictionary = ActionDictionary::build(&scene, &held, &ee, &scenario.scene.dictionary)
            .map_err(|e| SimError::Runtime(e.to_string()))?;
        let hold = hold_action(&ee, &scenario);
        let belief = BeliefState::new(hold, scenario.estimator.particles, scenario.run.seed);
        let grasp =
            held.robot.as_ref().and_then(|id| scene.get(id).map(|o| (id.clone(), o.pose.position - ee.position)));
        let planner = match mode {
            PlannerMode::Inline => Planner::Inline(client),
            PlannerMode::Worker { block } => Planner::worker(client, block),
        };
        let mut log = EventLog::default();
        log.push(
            0,
            Event::Init {
                name: scenario.run.name.clone(),
                seed: scenario.run.seed,
                duration: scenario.run.duration,
                control_dt: CONTROL_DT,
                estimator_dt: ESTIMATOR_DT,
                objects: object_poses(&scene),
                labels: scene.objects().iter().map(|o| (o.id.clone(), o.label.clone())).collect(),
            },
        );
        Ok(Self {
            confidence: ConfidenceState::new(&scenario.controller, CONTROL_DT),
            plant: PlantState { pose: ee, twist: Twist::zero() },
            scene,
            held,
            belief,
            dictionary,
            current: None,
            commanded: None,
            last_result: None,
            pending_correction: None,
            transcript: Transcript::new(),
            planner,
            pending: None,
            detector: CorrectionDetector::default(),
            approach: ApproachTracker::new(),
            human_approach: None,
            grasp,
            external: Wrench::zero(),
            human_wrench: Wrench::zero(),
            human_was_active: false,
            next_query_at: 0.0,
            last_estimate_time: f64::NEG_INFINITY,
            tick: 0,
            estimator_ticks: 0,
            log,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * CONTROL_DT
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Number of control ticks the scenario runs for.
    pub fn total_ticks(&self) -> u64 {
        (self.scenario.run.duration / CONTROL_DT).round() as u64
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.total_ticks()
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        let Simulation { log, .. } = self;
        log
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn belief(&self) -> &BeliefState {
        &self.belief
    }

    pub fn plant(&self) -> &PlantState {
        &self.plant
    }

    pub fn confidence(&self) -> &ConfidenceState {
        &self.confidence
    }

    pub fn dictionary(&self) -> &ActionDictionary {
        &self.dictionary
    }

    pub fn current_action(&self) -> Option<&SemanticAction> {
        self.current.as_ref()
    }

    /// Sets the externally applied human wrench. It adds to any scripted
    /// wrench and is ignored when the human mode is `none`. Non-finite
    /// wrenches are treated as zero.
    pub fn set_external_wrench(&mut self, w: Wrench) {
        self.external = if w.is_finite() { w } else { Wrench::zero() };
    }

    pub fn state(&self) -> SimState {
        SimState {
            tick: self.tick,
            ee: self.plant.pose,
            twist: self.plant.twist,
            held: self.held.clone(),
            objects: object_poses(&self.scene),
            c_lin: self.confidence.c_lin,
            c_rot: self.confidence.c_rot,
            resample_rate: resample_rate(self.confidence.scalar()),
            action: self.current.clone(),
            in_flight: self.pending.is_some(),
        }
    }

    /// Runs to the scenario duration.
    pub fn run(&mut self) -> Result<(), SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }

    /// Advances one control tick, running the estimator first on every
    /// tenth tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.tick.is_multiple_of(TICKS_PER_ESTIMATE) {
            self.estimator_tick()?;
        }
        self.control_tick();
        self.tick += 1;
        Ok(())
    }

    fn control_tick(&mut self) {
        let t = self.time();
        let cfg = &self.scenario.controller;
        self.human_wrench = match self.scenario.human.mode {
            HumanMode::None => Wrench::zero(),
            HumanMode::Scripted => {
                self.scenario.human.scripted_wrench(t, &self.plant.pose.position, &self.plant.twist, &self.scene)
                    + self.external
            }
            HumanMode::Interactive => self.external,
        };

        let action = *self.belief.estimate();
        let reference = action.reference_velocity(&self.plant.pose);
        self.confidence.update(&self.plant.twist, &reference, CONTROL_DT, cfg);
        let (mut c_lin, mut c_rot) = (self.confidence.c_lin, self.confidence.c_rot);
        if action.compliant {
            c_lin = c_lin.min(cfg.compliant_confidence);
            c_rot = c_rot.min(cfg.compliant_confidence);
        }
        let command = control_wrench(c_lin, c_rot, &self.plant.twist, &reference, cfg);

        let active = !self.human_wrench.is_zero();
        if self.tick.is_multiple_of(TICKS_PER_ESTIMATE) && (active || self.human_was_active) {
            self.log.push(self.tick, Event::WrenchSample { human: self.human_wrench, command });
            self.human_was_active = active;
        }
        self.plant = step_control(&self.plant, &command, &self.human_wrench, CONTROL_DT, &self.scenario.run.plant);
    }

    fn estimator_tick(&mut self) -> Result<(), SimError> {
        let t = self.time();
        self.apply_hold_schedule(t);
        self.carry_grasped();
        self.deliver_reply(t)?;

        if let Some((hand, vel)) = self.scenario.human.hand(t) {
            let dt = if self.last_estimate_time.is_finite() { t - self.last_estimate_time } else { ESTIMATOR_DT };
            self.human_approach =
                self.approach.update(&hand, &vel, &self.scene, dt, &self.scenario.run.approach).map(String::from);
        }
        self.last_estimate_time = t;

        let c = self.confidence.scalar();
        let est_cfg = self.scenario.estimator;
        self.belief.predict(c, ESTIMATOR_DT, &est_cfg);
        self.belief.update_weights(&self.plant.pose, &self.plant.twist, &est_cfg);
        self.log.push(
            self.tick,
            Event::ConfidenceSample {
                c_lin: self.confidence.c_lin,
                c_rot: self.confidence.c_rot,
                resample_rate: resample_rate(c),
            },
        );
        let cloud = self.estimator_ticks.is_multiple_of(2).then(|| {
            self.belief
                .cloud(self.scenario.run.cloud_size)
                .into_iter()
                .map(|(position, weight)| CloudPoint { position, weight })
                .collect()
        });
        self.log.push(
            self.tick,
            Event::EstimateSample {
                estimate: *self.belief.estimate(),
                ee: self.plant.pose,
                twist: self.plant.twist,
                held: self.held.clone(),
                objects: object_poses(&self.scene),
                action: self.current.clone(),
                in_flight: self.pending.is_some(),
                cloud,
            },
        );
        self.belief
            .resample(c, &self.dictionary.ds_actions(), &est_cfg.dynamics_ranges)
            .map_err(|e| SimError::Runtime(e.to_string()))?;

        let human_active = !self.human_wrench.is_zero();
        match self.detector.update(c, human_active, &self.scenario.run.correction) {
            Some(EpisodeEvent::Opened) => self
                .log
                .push(self.tick, Event::CorrectionStart { c_lin: self.confidence.c_lin, c_rot: self.confidence.c_rot }),
            Some(EpisodeEvent::Closed) => self.close_episode(),
            None => {}
        }

        if !self.detector.is_open()
            && !human_active
            && self.pending.is_none()
            && t + 1e-9 >= self.next_query_at
            && self.arrived()
        {
            self.complete_current();
            self.issue_query(t)?;
        }
        self.estimator_ticks += 1;
        Ok(())
    }

    fn arrived(&self) -> bool {
        let a = &self.scenario.run.arrival;
        let goal = &self.belief.estimate().attractor;
        let x = &self.plant.pose;
        (x.position - goal.position).norm() < a.position
            && rotation_angle(x.orientation(), goal.orientation()) < a.rotation
            && self.plant.twist.linear.norm() < a.speed
    }

    fn apply_hold_schedule(&mut self, t: f64) {
        let events: Vec<_> = self.scenario.human.holds_between(self.last_estimate_time, t).cloned().collect();
        if events.is_empty() {
            return;
        }
        for h in events {
            if h.object.is_some() && h.object == self.held.robot {
                log::warn!("human cannot take '{}' while the robot holds it", h.object.unwrap_or_default());
                continue;
            }
            self.held.human = h.object;
        }
        self.rebuild_dictionary();
    }

    fn carry_grasped(&mut self) {
        if let Some((id, offset)) = &self.grasp {
            if let Some(o) = self.scene.get(id) {
                let pose = Pose::new(self.plant.pose.position + offset, *o.pose.orientation());
                let id = id.clone();
                let _ = self.scene.move_object(&id, pose);
            }
        }
    }

    fn rebuild_dictionary(&mut self) {
        match ActionDictionary::build(&self.scene, &self.held, &self.plant.pose, &self.scenario.scene.dictionary) {
            Ok(d) => self.dictionary = d,
            Err(e) => log::error!("dictionary rebuild failed: {e}"),
        }
    }

    fn close_episode(&mut self) {
        let estimate = *self.belief.estimate();
        self.log.push(
            self.tick,
            Event::CorrectionEnd { c_lin: self.confidence.c_lin, c_rot: self.confidence.c_rot, estimate },
        );
        let matched = self
            .dictionary
            .nearest(&estimate, &self.scenario.scene.dictionary)
            .filter(|(_, d)| *d <= self.scenario.scene.dictionary.match_threshold)
            .map(|(e, d)| (e.semantic.clone(), d));
        let Some((sem, distance)) = matched else { return };
        if Some(&sem) == self.current.as_ref() {
            return;
        }
        let label = self.scene.label(&sem.object).unwrap_or(&sem.object).to_string();
        let text = correction_sentence(&self.scene, &sem);
        self.log
            .push(self.tick, Event::SemanticCorrection { action: sem.clone(), label, distance, text: text.clone() });
        if self.transcript.last().is_some_and(|e| e.execution_result == ExecutionResult::Pending) {
            self.transcript.set_result(ExecutionResult::Failed { reason: "overridden by human correction".into() });
        }
        self.transcript.record_correction(sem.clone(), text);
        self.pending_correction = Some(sem.clone());
        self.current = Some(sem);
    }

    /// Applies the effects of the action that just reached its attractor.
    fn complete_current(&mut self) {
        let Some(action) = self.current.take() else { return };
        match action.verb {
            Verb::Pick | Verb::CoCarry => {
                if let Some(o) = self.scene.get(&action.object) {
                    let offset = o.pose.position - self.plant.pose.position;
                    self.grasp = Some((action.object.clone(), offset));
                    self.held.robot = Some(action.object.clone());
                    if self.held.human.as_deref() == Some(action.object.as_str()) {
                        self.held.human = None;
                    }
                    let _ = self.scene.set_atop(&action.object, None);
                    self.log.push(self.tick, Event::Pick { object: action.object.clone() });
                }
            }
            Verb::Place => {
                if let Some(object) = self.held.robot.take() {
                    self.grasp = None;
                    let _ = self.scene.set_atop(&object, Some(action.object.clone()));
                    self.log.push(self.tick, Event::Place { object, location: action.object.clone() });
                }
            }
            Verb::Tilt | Verb::Untilt | Verb::Move => {}
        }
        if self.transcript.last().is_some_and(|e| e.execution_result == ExecutionResult::Pending) {
            self.transcript.set_result(ExecutionResult::Succeeded);
        }
        self.last_result = Some(LastResult::Succeeded { action });
        self.rebuild_dictionary();
    }

    fn issue_query(&mut self, t: f64) -> Result<(), SimError> {
        self.rebuild_dictionary();
        let planned = self.pending_correction.as_ref().and(self.commanded.as_ref());
        let bundle = match build_bundle(&PromptState {
            scene: &self.scene,
            held: &self.held,
            human_approach: self.human_approach.as_deref(),
            planned,
            last_result: self.last_result.as_ref(),
            correction: self.pending_correction.as_ref(),
            dictionary: &self.dictionary,
        }) {
            Ok(b) => b,
            Err(e) => return Err(SimError::Runtime(format!("cannot build prompt: {e}"))),
        };
        self.pending_correction = None;
        self.last_result = None;
        let step = self.transcript.next_step();
        self.log.push(
            self.tick,
            Event::LlmQuery { step, user_prompt: bundle.user_prompt.clone(), state: bundle.state.clone() },
        );
        self.next_query_at = t + self.scenario.llm.min_query_interval;
        let cfg = self.scenario.llm.orchestrator();
        let ready = match &mut self.planner {
            Planner::Inline(client) => {
                let d = decide(client.as_mut(), &bundle, &self.scene, &self.dictionary, &self.transcript, &cfg);
                let at = t + d.latency;
                Some((d, at))
            }
            Planner::Worker { jobs, .. } => {
                let job = Job {
                    bundle: bundle.clone(),
                    scene: self.scene.clone(),
                    dictionary: self.dictionary.clone(),
                    transcript: self.transcript.clone(),
                    cfg,
                };
                jobs.as_ref()
                    .and_then(|j| j.send(job).ok())
                    .ok_or_else(|| SimError::Runtime("planner thread is gone".into()))?;
                None
            }
        };
        self.pending = Some(Pending { step, bundle, dictionary: self.dictionary.clone(), issued_at: t, ready });
        Ok(())
    }

    fn deliver_reply(&mut self, t: f64) -> Result<(), SimError> {
        let Some(p) = &mut self.pending else { return Ok(()) };
        let decision = match &mut self.planner {
            Planner::Inline(_) => match &p.ready {
                Some((_, at)) if *at <= t + 1e-9 && t > p.issued_at => p.ready.take().map(|(d, _)| d),
                _ => None,
            },
            Planner::Worker { replies, block, .. } => {
                if *block {
                    Some(replies.recv().map_err(|_| SimError::Runtime("planner thread died".into()))?)
                } else {
                    match replies.try_recv() {
                        Ok(d) => Some(d),
                        Err(TryRecvError::Empty) => None,
                        Err(TryRecvError::Disconnected) => return Err(SimError::Runtime("planner thread died".into())),
                    }
                }
            }
        };
        let Some(decision) = decision else { return Ok(()) };
        let p = self.pending.take().expect("pending query");
        self.apply_decision(p, decision, t);
        Ok(())
    }

    fn apply_decision(&mut self, p: Pending, mut decision: Decision, t: f64) {
        if self.detector.is_open() && decision.action.is_some() {
            decision.action = None;
            decision.failure = Some((crate::llm::FailureKind::Unavailable, "superseded by human correction".into()));
        }
        let mut entry = transcript_entry(p.step, &p.bundle, &decision);
        if decision.failure.as_ref().is_some_and(|(_, m)| m.starts_with("superseded")) {
            entry.execution_result = ExecutionResult::Failed { reason: "superseded by human correction".into() };
        }
        self.transcript.push(entry);
        self.log.push(
            self.tick,
            Event::LlmAction {
                step: p.step,
                action: decision.action.clone(),
                response: decision.response.clone(),
                reasoning: decision.reasoning.clone(),
                attempts: decision.attempts,
                failure: decision.failure.as_ref().map(|(k, m)| format!("{}: {m}", k.as_str())),
            },
        );
        match decision.action.and_then(|a| p.dictionary.semantic_to_ds(&a).ok().map(|ds| (a, *ds))) {
            Some((action, ds)) => {
                self.belief.set_commanded_action(ds);
                self.commanded = Some(action.clone());
                self.current = Some(action);
            }
            None => {
                let reason =
                    decision.failure.as_ref().map_or("unavailable".to_string(), |(k, _)| k.as_str().to_string());
                if !self.detector.is_open() {
                    self.belief.set_commanded_action(hold_action(&self.plant.pose, &self.scenario));
                    self.current = None;
                }
                self.last_result = Some(LastResult::Failed { action: None, reason });
                self.next_query_at = self.next_query_at.max(t + self.scenario.llm.requery_delay);
            }
        }
    }
}

/// Hold-in-place action at `pose` with midpoint dynamics.
pub fn hold_action(pose: &Pose, scenario: &Scenario) -> DsAction {
    let d = &scenario.scene.dictionary;
    DsAction { attractor: *pose, dynamics: d.dynamics_ranges.midpoint(), speed_cap: d.speed_cap, compliant: false }
}

fn object_poses(scene: &Scene) -> Vec<ObjectPose> {
    scene.objects().iter().map(|o| ObjectPose { id: o.id.clone(), pose: o.pose }).collect()
}

/// Runs a scenario headless with its own client and returns the event log.
/// Scripted clients run inline and are fully deterministic.
pub fn run_scenario(scenario: &Scenario) -> Result<EventLog, SimError> {
    let mode = match scenario.llm.client {
        ClientKind::Mock => PlannerMode::Inline,
        ClientKind::Live => PlannerMode::Worker { block: true },
    };
    let mut sim = Simulation::new(scenario.clone(), mode)?;
    sim.run()?;
    Ok(sim.into_log())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r##"
[run]
seed = 9
duration = 2.0

[scene]
robot_holding = "pot"
ee = { position = [0.5, -0.1, 0.2] }

[[scene.objects]]
id = "pot"
label = "cooking pot"
category = "A"
position = [0.5, -0.1, 0.18]

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

[llm.mock]
fallback = "# Place ; on the counter & Put it down."
"##;

    fn scenario() -> Scenario {
        Scenario::from_toml(BASE, None).unwrap()
    }

    #[test]
    fn zero_duration_logs_only_init() {
        let mut s = scenario();
        s.run.duration = 0.0;
        let log = run_scenario(&s).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.records[0].event.kind(), "init");
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = run_scenario(&scenario()).unwrap().to_jsonl();
        let b = run_scenario(&scenario()).unwrap().to_jsonl();
        assert_eq!(a, b);
        let mut other = scenario();
        other.run.seed = 10;
        assert_ne!(a, run_scenario(&other).unwrap().to_jsonl());
    }

    #[test]
    fn untouched_robot_never_opens_an_episode() {
        let log = run_scenario(&scenario()).unwrap();
        assert_eq!(log.of_kind("correction_start").count(), 0);
        assert_eq!(log.of_kind("semantic_correction").count(), 0);
        assert_eq!(log.of_kind("wrench_sample").count(), 0);
        // 2 s at 20 Hz
        assert_eq!(log.of_kind("confidence_sample").count(), 40);
        assert_eq!(log.of_kind("llm_query").count(), 1);
    }

    #[test]
    fn scripted_push_opens_and_closes_one_episode() {
        let mut s = scenario();
        s.run.duration = 8.0;
        s.human = toml::from_str(
            r#"
[[pull]]
start = 1.0
duration = 2.0
target_object = "stove"
target_offset = [0.0, 0.0, 0.15]
"#,
        )
        .unwrap();
        let log = run_scenario(&s).unwrap();
        assert_eq!(log.of_kind("correction_start").count(), 1);
        assert_eq!(log.of_kind("correction_end").count(), 1);
        let sc: Vec<_> = log.of_kind("semantic_correction").collect();
        assert_eq!(sc.len(), 1);
        assert!(
            matches!(&sc[0].event, Event::SemanticCorrection { action, .. } if action == &SemanticAction::new(Verb::Move, "stove"))
        );
    }

    #[test]
    fn external_wrench_ignored_without_human() {
        let mut s = scenario();
        s.human.mode = HumanMode::None;
        let mut sim = Simulation::new(s, PlannerMode::Inline).unwrap();
        sim.set_external_wrench(Wrench::new(Vector3::new(10.0, 0.0, 0.0), Vector3::zeros()));
        sim.run().unwrap();
        assert_eq!(sim.log().of_kind("wrench_sample").count(), 0);
    }
}
