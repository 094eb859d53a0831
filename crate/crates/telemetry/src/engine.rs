//! The simulation loop behind the service: owns the mission, applies
//! operator commands and turns mission progress into frames.

use std::collections::BTreeMap;

use aeromap_core::fuzzy::{classify, crisp_classify, CrispThresholds};
use aeromap_core::mapper::WallModel;
use aeromap_core::sim::{plan_waypoints, Phase, Progress, SeededMission, SimError, SweepPlan};
use aeromap_core::units::quantize;
use aeromap_core::{MissionLog, SensorFrame, SimConfig};
use serde_json::{json, Value};

use crate::session::{watchdog_tick, SessionState, DEFAULT_WATCHDOG_MS};
use crate::wire::{
    Ack, ClassificationReport, Command, ErrorBody, Frame, MapBatch, Payload, RobotState, Status, MAP_BATCH,
    WIRE_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    pub watchdog_timeout_ms: u64,
    /// Mission steps (samples or homing legs) executed per tick.
    pub steps_per_tick: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { watchdog_timeout_ms: DEFAULT_WATCHDOG_MS, steps_per_tick: 1 }
    }
}

pub struct Engine {
    config: SimConfig,
    plan: SweepPlan,
    thresholds: CrispThresholds,
    mission: SeededMission,
    session: SessionState,
    opts: EngineOptions,
    next_seq: u64,
    latest: BTreeMap<&'static str, Frame>,
    wall_model: Option<WallModel>,
}

impl Engine {
    pub fn new(config: SimConfig, opts: EngineOptions) -> Result<Self, SimError> {
        let plan = config.plan;
        let mission = Self::fresh_mission(&config, plan)?;
        Ok(Self {
            thresholds: CrispThresholds::from_config(&config.fuzzy),
            plan,
            mission,
            session: SessionState::new(opts.watchdog_timeout_ms),
            opts,
            next_seq: 1,
            latest: BTreeMap::new(),
            wall_model: None,
            config,
        })
    }

    fn fresh_mission(config: &SimConfig, plan: SweepPlan) -> Result<SeededMission, SimError> {
        SeededMission::seeded(config.world.clone(), plan, config.noise_enabled, config.seed)
    }

    pub fn session(&self) -> SessionState {
        self.session
    }

    pub fn log(&self) -> &MissionLog {
        self.mission.log()
    }

    pub fn log_json(&self) -> String {
        self.mission.log().to_json()
    }

    /// Model fitted when the sweep finished.
    pub fn wall_model(&self) -> Option<&WallModel> {
        self.wall_model.as_ref()
    }

    pub fn phase(&self) -> Phase {
        self.mission.phase()
    }

    /// Body of `GET /api/state`.
    pub fn state_document(&self) -> Value {
        let latest: serde_json::Map<String, Value> =
            self.latest.iter().map(|(k, f)| (k.to_string(), f.to_value())).collect();
        json!({
            "v": WIRE_VERSION,
            "session": self.session,
            "phase": self.mission.phase(),
            "plan": self.plan,
            "latest": latest,
        })
    }

    pub fn contact(&mut self, now: u64) {
        self.session.contact(now);
    }

    /// Session clock (ms) at which the watchdog fires if no client speaks.
    pub fn watchdog_deadline(&self) -> Option<u64> {
        self.derived_state()
            .is_moving()
            .then(|| self.session.last_client_contact + self.session.watchdog_timeout + 1)
    }

    /// Applies the watchdog alone; returns the halt status if it fired.
    pub fn check_watchdog(&mut self, now: u64) -> Option<Frame> {
        let before = self.session.robot_state;
        self.session = watchdog_tick(self.session, now);
        if self.session.robot_state == RobotState::Halted && before != RobotState::Halted {
            self.mission.halt("watchdog");
            return Some(self.status(now, Some("watchdog".into())));
        }
        None
    }

    fn emit(&mut self, now: u64, payload: Payload) -> Frame {
        let f = Frame::new(self.next_seq, now, payload);
        self.next_seq += 1;
        self.latest.insert(f.type_name(), f.quantized());
        f
    }

    fn derived_state(&self) -> RobotState {
        if self.mission.is_halted() {
            return RobotState::Halted;
        }
        match self.mission.phase() {
            Phase::Ready | Phase::Finished => RobotState::Idle,
            Phase::Sweeping => RobotState::Sweeping,
            Phase::Homing => RobotState::Homing,
        }
    }

    fn status(&mut self, now: u64, detail: Option<String>) -> Frame {
        self.session.robot_state = self.derived_state();
        let log = self.mission.log();
        let payload = Payload::Status(Status {
            robot_state: self.session.robot_state,
            pose: self.mission.pose(),
            mission_ms: self.mission.clock_ms(),
            frames: log.frames.len(),
            points: log.points.len(),
            detail,
        });
        self.emit(now, payload)
    }

    fn ack(&mut self, now: u64, command: &str, detail: Option<&str>) -> Frame {
        let payload = Payload::Ack(Ack { command: command.into(), detail: detail.map(str::to_owned) });
        self.emit(now, payload)
    }

    pub fn error(&mut self, now: u64, code: &str, message: impl Into<String>) -> Frame {
        let payload = Payload::Error(ErrorBody { code: code.into(), message: message.into() });
        self.emit(now, payload)
    }

    /// A message that did not parse as a command.
    pub fn reject(&mut self, now: u64, message: impl Into<String>) -> Frame {
        self.contact(now);
        self.error(now, "bad_command", message)
    }

    /// Applies a command. The first frame returned answers it (ack or
    /// error); a status frame follows when the command moved the robot.
    pub fn handle(&mut self, cmd: Command, now: u64) -> Vec<Frame> {
        self.contact(now);
        let state = self.derived_state();
        match cmd {
            Command::Ping => vec![self.ack(now, "ping", None)],
            Command::Download => vec![self.ack(now, "download", Some("/api/log"))],
            Command::Start => match state {
                RobotState::Sweeping | RobotState::Homing => {
                    vec![self.ack(now, "start", Some("already running"))]
                }
                RobotState::Halted => {
                    self.mission.resume();
                    vec![self.ack(now, "start", Some("resumed")), self.status(now, None)]
                }
                RobotState::Idle => {
                    if self.mission.phase() == Phase::Finished {
                        match Self::fresh_mission(&self.config, self.plan) {
                            Ok(m) => self.mission = m,
                            Err(e) => return vec![self.error(now, "sim_error", e.to_string())],
                        }
                        self.wall_model = None;
                    }
                    self.mission.start();
                    vec![self.ack(now, "start", None), self.status(now, None)]
                }
            },
            Command::Stop => {
                if state.is_moving() {
                    self.mission.halt("operator stop");
                    vec![self.ack(now, "stop", None), self.status(now, Some("operator stop".into()))]
                } else {
                    vec![self.ack(now, "stop", Some("not moving"))]
                }
            }
            Command::Home => {
                self.mission.resume();
                self.mission.begin_home();
                vec![self.ack(now, "home", None), self.status(now, None)]
            }
            Command::SetPlan { plan } => {
                let idle = state == RobotState::Idle;
                if !idle || !matches!(self.mission.phase(), Phase::Ready | Phase::Finished) {
                    return vec![self.error(now, "invalid_state", "the plan can only change while idle")];
                }
                let checked = plan
                    .validate()
                    .and_then(|_| plan_waypoints(&self.config.world.room, &plan, self.config.world.robot.standoff_mm));
                if let Err(e) = checked {
                    return vec![self.error(now, "invalid_plan", e.to_string())];
                }
                match Self::fresh_mission(&self.config, plan) {
                    Ok(m) => {
                        self.mission = m;
                        self.plan = plan;
                        self.wall_model = None;
                        vec![self.ack(now, "set_plan", None), self.status(now, None)]
                    }
                    Err(e) => vec![self.error(now, "invalid_plan", e.to_string())],
                }
            }
        }
    }

    fn classification(&self, frame: &SensorFrame) -> ClassificationReport {
        match classify(frame, &self.config.fuzzy) {
            Ok(c) => ClassificationReport {
                timestamp: frame.timestamp,
                class: c.class,
                crisp_score: Some(c.crisp_score),
                fallback: false,
                term_strengths: c.term_strengths,
                clamped: c.clamped,
            },
            Err(_) => ClassificationReport {
                timestamp: frame.timestamp,
                class: crisp_classify(frame, &self.thresholds),
                crisp_score: None,
                fallback: true,
                term_strengths: BTreeMap::new(),
                clamped: Vec::new(),
            },
        }
    }

    /// One period of the loop: watchdog check, then up to `steps_per_tick`
    /// mission steps.
    pub fn tick(&mut self, now: u64) -> Vec<Frame> {
        let mut out = Vec::new();
        if let Some(halt) = self.check_watchdog(now) {
            out.push(halt);
            return out;
        }
        let before = self.derived_state();
        if !before.is_moving() {
            return out;
        }
        let mut detail = None;
        for _ in 0..self.opts.steps_per_tick.max(1) {
            let phase = self.mission.phase();
            match self.mission.advance() {
                Ok(Progress::Sampled { frame, points, .. }) => {
                    let pf = self.mission.log().frames[frame];
                    let batch: Vec<_> = self.mission.log().points[points].to_vec();
                    out.push(self.emit(now, Payload::Sensor(pf)));
                    let report = self.classification(&pf.frame);
                    out.push(self.emit(now, Payload::Classification(report)));
                    for chunk in batch.chunks(MAP_BATCH) {
                        out.push(self.emit(now, Payload::Map(MapBatch { points: chunk.to_vec() })));
                    }
                }
                Ok(Progress::Moved) => {}
                Ok(Progress::Homed(h)) => {
                    detail = Some(format!("displacement_error_mm={}", quantize(h.displacement_error_mm)));
                }
                Ok(Progress::Finished) => break,
                Err(e) => {
                    self.mission.halt("simulation error");
                    out.push(self.error(now, "sim_error", e.to_string()));
                    break;
                }
            }
            if phase == Phase::Sweeping && self.mission.phase() != Phase::Sweeping {
                match self.config.mapping.extract(self.mission.log()) {
                    Ok(m) => {
                        self.wall_model = Some(m.clone());
                        out.push(self.emit(now, Payload::WallModel(m)));
                    }
                    Err(e) => out.push(self.error(now, "mapping_failed", e.to_string())),
                }
            }
            if self.mission.phase() == Phase::Finished {
                break;
            }
        }
        if self.derived_state() != before || detail.is_some() {
            out.push(self.status(now, detail));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(steps: usize) -> Engine {
        let cfg = SimConfig { noise_enabled: false, ..SimConfig::default() };
        Engine::new(cfg, EngineOptions { steps_per_tick: steps, ..EngineOptions::default() }).unwrap()
    }

    fn state_of(f: &Frame) -> Option<RobotState> {
        match &f.payload {
            Payload::Status(s) => Some(s.robot_state),
            _ => None,
        }
    }

    #[test]
    fn start_acks_then_reports_sweeping() {
        let mut e = engine(1);
        let out = e.handle(Command::Start, 0);
        assert!(matches!(out[0].payload, Payload::Ack(_)));
        assert_eq!(state_of(&out[1]), Some(RobotState::Sweeping));
        assert_eq!((out[0].seq, out[1].seq), (1, 2));
    }

    #[test]
    fn silent_client_halts_the_sweep() {
        let mut e = engine(1);
        e.handle(Command::Start, 0);
        let mut t = 0;
        let halted_at = loop {
            t += 50;
            let out = e.tick(t);
            if out.iter().any(|f| state_of(f) == Some(RobotState::Halted)) {
                break t;
            }
        };
        assert_eq!(halted_at, 2050);
        assert!(e.log().events.iter().any(|ev| ev.detail == "watchdog"));
        let out = e.handle(Command::Start, 2100);
        assert_eq!(state_of(&out[1]), Some(RobotState::Sweeping));
    }

    #[test]
    fn full_run_emits_wall_model_and_homes() {
        let mut e = engine(1000);
        e.handle(Command::Start, 0);
        let mut frames = Vec::new();
        for k in 1..20 {
            e.contact(k * 50);
            frames.extend(e.tick(k * 50));
        }
        assert_eq!(e.phase(), Phase::Finished);
        assert!(frames.iter().any(|f| matches!(f.payload, Payload::WallModel(_))));
        let last = frames.iter().rev().find_map(state_of).unwrap();
        assert_eq!(last, RobotState::Idle);
        for w in frames.windows(2) {
            assert_eq!(w[1].seq, w[0].seq + 1);
        }
        let from_log = SimConfig::default().mapping.extract(&MissionLog::from_json(&e.log_json()).unwrap()).unwrap();
        assert_eq!(Some(&from_log), e.wall_model());
    }

    #[test]
    fn set_plan_rejected_while_sweeping() {
        let mut e = engine(1);
        e.handle(Command::Start, 0);
        let out = e.handle(Command::SetPlan { plan: SweepPlan::default() }, 10);
        assert!(matches!(&out[0].payload, Payload::Error(b) if b.code == "invalid_state"));
    }

    #[test]
    fn invalid_plan_rejected() {
        let mut e = engine(1);
        let plan = SweepPlan { lane_spacing_mm: 10_000.0, ..SweepPlan::default() };
        let out = e.handle(Command::SetPlan { plan }, 0);
        assert!(matches!(&out[0].payload, Payload::Error(b) if b.code == "invalid_plan"));
    }

    #[test]
    fn stop_then_home() {
        let mut e = engine(1);
        e.handle(Command::Start, 0);
        e.tick(50);
        let out = e.handle(Command::Stop, 60);
        assert_eq!(state_of(&out[1]), Some(RobotState::Halted));
        let out = e.handle(Command::Home, 70);
        assert_eq!(state_of(&out[1]), Some(RobotState::Homing));
    }
}
