//! Boustrophedon sweep with periodic 360° range scans, followed by homing.
//!
//! A [`Mission`] advances one waypoint at a time so that a supervisor (the
//! telemetry service) can interleave watchdog checks and halt it between
//! moves. [`run_sweep`] simply drives one to completion.

use std::collections::VecDeque;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sense_distance, sense_gas, MotionCommand, Pose, Robot, SimError, World};
use crate::geometry::{unit_vector, Point, Room};
use crate::log::{
    Event, EventKind, MapPoint, MissionLog, MissionMeta, PosedFrame, ScanRecord,
};
use crate::units::quantize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub lane_spacing_mm: f64,
    pub sample_spacing_mm: f64,
    /// Scan at every k-th sample point; 0 disables scanning.
    pub scan_every: usize,
    pub scan_increment_deg: u32,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            lane_spacing_mm: 500.0,
            sample_spacing_mm: 500.0,
            scan_every: 2,
            scan_increment_deg: 1,
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.lane_spacing_mm > 0.0) || !(self.sample_spacing_mm > 0.0) {
            return Err(SimError::Config("lane and sample spacing must be positive".into()));
        }
        if self.scan_increment_deg == 0 || self.scan_increment_deg > 360 {
            return Err(SimError::Config("scan increment must be in 1..=360 degrees".into()));
        }
        Ok(())
    }

    fn scans_at(&self, sample_index: usize) -> bool {
        self.scan_every > 0 && sample_index % self.scan_every == 0
    }
}

/// A sample point on the coverage path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub point: Point,
    pub lane: usize,
}

/// Lawnmower waypoints: lanes run along x and are stacked in y, alternating
/// direction. Every waypoint keeps `standoff` clearance from the walls.
pub fn plan_waypoints(room: &Room, plan: &SweepPlan, standoff: f64) -> Result<Vec<Waypoint>, SimError> {
    plan.validate()?;
    let (lo, hi) = room.bounds();
    let y_first = (lo.y + standoff).ceil();
    let y_last = (hi.y - standoff).floor();
    if y_last < y_first {
        return Err(SimError::Config("room is too small for the standoff".into()));
    }
    if plan.lane_spacing_mm > y_last - y_first {
        return Err(SimError::Config(format!(
            "lane spacing {} mm is wider than the {} mm sweepable room height",
            plan.lane_spacing_mm,
            y_last - y_first
        )));
    }
    let mut lanes = Vec::new();
    let mut i = 0usize;
    loop {
        let y = (y_first + i as f64 * plan.lane_spacing_mm).round();
        if y >= y_last {
            break;
        }
        lanes.push(y);
        i += 1;
    }
    lanes.push(y_last);

    let mut out = Vec::new();
    let mut forward = true;
    for (lane, y) in lanes.into_iter().enumerate() {
        let intervals = room.clear_intervals(y, standoff);
        let (a, b) = match intervals.as_slice() {
            [] => continue,
            [one] => *one,
            _ => {
                return Err(SimError::Config(format!(
                    "lane at y={y} crosses the room {} times; only rooms with one free \
                     span per lane can be swept",
                    intervals.len()
                )))
            }
        };
        let (a, b) = (a.ceil(), b.floor());
        if b < a {
            continue;
        }
        let mut xs = Vec::new();
        let mut j = 0usize;
        loop {
            let x = (a + j as f64 * plan.sample_spacing_mm).round();
            if x >= b {
                break;
            }
            xs.push(x);
            j += 1;
        }
        xs.push(b);
        if !forward {
            xs.reverse();
        }
        forward = !forward;
        out.extend(xs.into_iter().map(|x| Waypoint { point: Point::new(x, y), lane }));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Ready,
    Sweeping,
    Homing,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomeOutcome {
    pub final_pose: Pose,
    pub displacement_error_mm: f64,
    pub aborted: bool,
}

/// What one call to [`Mission::advance`] did.
#[derive(Debug, Clone, PartialEq)]
pub enum Progress {
    Sampled {
        frame: usize,
        scan: Option<usize>,
        points: Range<usize>,
    },
    Moved,
    Homed(HomeOutcome),
    Finished,
}

#[derive(Debug, Clone, Default)]
struct HomingState {
    route: Option<VecDeque<Point>>,
}

pub struct Mission<R> {
    world: World,
    plan: SweepPlan,
    noise_on: bool,
    rng: R,
    robot: Robot,
    /// believed minus true position; zero until a homing fix
    belief_offset: (f64, f64),
    clock_ms: u64,
    waypoints: Vec<Waypoint>,
    next: usize,
    visited: Vec<Point>,
    homing: Option<HomingState>,
    phase: Phase,
    log: MissionLog,
}

pub type SeededMission = Mission<ChaCha8Rng>;

impl Mission<ChaCha8Rng> {
    /// Mission with its own ChaCha8 stream; the seed is recorded in the log.
    pub fn seeded(world: World, plan: SweepPlan, noise_on: bool, seed: u64) -> Result<Self, SimError> {
        let mut m = Mission::new(world, plan, noise_on, ChaCha8Rng::seed_from_u64(seed))?;
        m.log.meta.seed = Some(seed);
        Ok(m)
    }
}

impl<R: Rng> Mission<R> {
    pub fn new(world: World, plan: SweepPlan, noise_on: bool, rng: R) -> Result<Self, SimError> {
        world.validate()?;
        let waypoints = plan_waypoints(&world.room, &plan, world.robot.standoff_mm)?;
        let dock = world.dock_pose();
        Ok(Self::build(world, plan, noise_on, rng, dock, waypoints))
    }

    /// A mission with no sweep, with the robot placed at `pose`; used for
    /// operator-commanded homing.
    pub fn idle_at(world: World, pose: Pose, noise_on: bool, rng: R) -> Result<Self, SimError> {
        world.validate()?;
        if !world.room.contains(&pose.position()) {
            return Err(SimError::OutsideRoom { x: pose.x, y: pose.y });
        }
        Ok(Self::build(world, SweepPlan::default(), noise_on, rng, pose, Vec::new()))
    }

    fn build(world: World, plan: SweepPlan, noise_on: bool, rng: R, start: Pose, waypoints: Vec<Waypoint>) -> Self {
        let meta = MissionMeta {
            seed: None,
            noise_enabled: noise_on,
            room: world.room.clone(),
            dock: world.dock_pose(),
            plan,
        };
        Self {
            plan,
            noise_on,
            rng,
            robot: Robot::new(start),
            belief_offset: (0.0, 0.0),
            clock_ms: 0,
            waypoints,
            next: 0,
            visited: Vec::new(),
            homing: None,
            phase: Phase::Ready,
            log: MissionLog::new(meta),
            world,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn pose(&self) -> Pose {
        self.robot.pose
    }

    pub fn is_halted(&self) -> bool {
        self.robot.halted
    }

    pub fn clock_ms(&self) -> u64 {
        self.clock_ms
    }

    pub fn log(&self) -> &MissionLog {
        &self.log
    }

    pub fn into_log(self) -> MissionLog {
        self.log
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    fn event(&mut self, kind: EventKind, detail: impl Into<String>) {
        self.log.events.push(Event { t: self.clock_ms, kind, detail: detail.into() });
    }

    pub fn start(&mut self) {
        if self.phase == Phase::Ready {
            self.event(EventKind::Start, "");
            self.phase = Phase::Sweeping;
        }
    }

    /// Switches to homing from any phase; a mission that never started
    /// records its start first.
    pub fn begin_home(&mut self) {
        match self.phase {
            Phase::Homing => return,
            Phase::Ready => self.event(EventKind::Start, "operator home"),
            _ => {}
        }
        self.phase = Phase::Homing;
        self.homing = Some(HomingState::default());
        self.event(EventKind::HomeBegin, "");
    }

    pub fn halt(&mut self, reason: &str) {
        if self.robot.halted {
            return;
        }
        self.robot.halted = true;
        self.event(EventKind::Halt, reason);
        if self.phase == Phase::Homing {
            self.event(EventKind::HomeEnd, "aborted");
            self.homing = Some(HomingState::default());
        }
    }

    pub fn resume(&mut self) {
        if !self.robot.halted {
            return;
        }
        self.robot.halted = false;
        self.event(EventKind::Resume, "");
        if self.phase == Phase::Homing {
            self.event(EventKind::HomeBegin, "resumed");
        }
    }

    /// Executes the next unit of work: one sample (with its scan) while
    /// sweeping, one route leg while homing.
    pub fn advance(&mut self) -> Result<Progress, SimError> {
        if self.robot.halted {
            return Err(SimError::Halted);
        }
        match self.phase {
            Phase::Ready => {
                self.start();
                self.advance()
            }
            Phase::Sweeping => {
                if self.next >= self.waypoints.len() {
                    self.begin_home();
                    return Ok(Progress::Moved);
                }
                let wp = self.waypoints[self.next];
                self.go_to(wp.point)?;
                let index = self.next;
                self.next += 1;
                self.visited.push(self.believed());
                self.sample(index)
            }
            Phase::Homing => self.home_step(),
            Phase::Finished => Ok(Progress::Finished),
        }
    }

    /// Drives the mission until it finishes.
    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        self.start();
        while self.advance()? != Progress::Finished {}
        Ok(())
    }

    fn believed(&self) -> Point {
        Point::new(
            self.robot.pose.x + self.belief_offset.0,
            self.robot.pose.y + self.belief_offset.1,
        )
    }

    fn sample(&mut self, index: usize) -> Result<Progress, SimError> {
        let pose = self.robot.pose;
        let frame = sense_gas(&self.world, &pose, self.noise_on, &mut self.rng, self.clock_ms)?;
        self.log.frames.push(PosedFrame { pose, frame });
        self.clock_ms += self.world.robot.timing.sample_ms;
        let frame_index = self.log.frames.len() - 1;
        let first_point = self.log.points.len();
        let scan = if self.plan.scans_at(index) {
            Some(self.scan()?)
        } else {
            None
        };
        Ok(Progress::Sampled {
            frame: frame_index,
            scan,
            points: first_point..self.log.points.len(),
        })
    }

    fn scan(&mut self) -> Result<usize, SimError> {
        let pose = self.robot.pose;
        let id = self.log.scans.len();
        self.log.scans.push(ScanRecord { id, t: self.clock_ms, pose });
        for bearing in (0..360).step_by(self.plan.scan_increment_deg as usize) {
            let b = bearing as f64;
            let range = sense_distance(&self.world, &pose, b, self.noise_on, &mut self.rng)?;
            let (dx, dy) = unit_vector(b);
            self.log.points.push(MapPoint::new(
                quantize(pose.x + range * dx),
                quantize(pose.y + range * dy),
                id,
            ));
            self.clock_ms += self.world.robot.timing.range_reading_ms;
        }
        Ok(id)
    }

    fn command(&mut self, cmd: MotionCommand) -> Result<(), SimError> {
        let out = self.robot.execute(&self.world, cmd)?;
        let t = &self.world.robot.timing;
        self.clock_ms += t.ms_per_degree * cmd.rotate_turns.unsigned_abs()
            + t.ms_per_mm * out.achieved_steps.unsigned_abs();
        Ok(())
    }

    fn face(&mut self, bearing: f64) -> Result<(), SimError> {
        let diff = (bearing - self.robot.pose.heading).rem_euclid(360.0);
        let turns = if diff > 180.0 { diff - 360.0 } else { diff };
        let turns = turns.round() as i64;
        if turns != 0 {
            self.command(MotionCommand::rotate(turns))?;
        }
        Ok(())
    }

    /// Axis-aligned leg in the belief frame.
    fn leg(&mut self, target: Point) -> Result<(), SimError> {
        let from = self.believed();
        let dx = target.x - from.x;
        let dy = target.y - from.y;
        let (bearing, dist) = if dx.abs() >= dy.abs() {
            (if dx >= 0.0 { 0.0 } else { 180.0 }, dx.abs())
        } else {
            (if dy >= 0.0 { 90.0 } else { 270.0 }, dy.abs())
        };
        let steps = dist.round() as i64;
        if steps == 0 {
            return Ok(());
        }
        self.face(bearing)?;
        self.command(MotionCommand::translate(steps))
    }

    /// Manhattan move to `target`, picking the leg order that keeps clearance.
    fn go_to(&mut self, target: Point) -> Result<(), SimError> {
        let from = self.believed();
        let via = l_route_corner(&self.world.room, &from, &target, self.world.robot.standoff_mm);
        if let Some(v) = via {
            self.leg(v)?;
        }
        self.leg(target)
    }

    /// Position fix from the two nearest walls in x and y, replacing the
    /// dead-reckoned belief.
    fn position_fix(&mut self) -> Result<(), SimError> {
        let belief = self.believed();
        let pose = self.robot.pose;
        let mut fix = belief;
        for (axis, pair) in [(0usize, [0.0, 180.0]), (1usize, [90.0, 270.0])] {
            let predicted: Vec<(f64, f64)> = pair
                .iter()
                .filter_map(|&b| self.world.room.ray_cast(&belief, b).map(|r| (b, r)))
                .collect();
            let Some(&(bearing, expected)) = predicted.iter().min_by(|a, b| a.1.total_cmp(&b.1))
            else {
                continue;
            };
            let measured = sense_distance(&self.world, &pose, bearing, self.noise_on, &mut self.rng)?;
            self.clock_ms += self.world.robot.timing.range_reading_ms;
            let (dx, dy) = unit_vector(bearing);
            if axis == 0 {
                let wall = belief.x + expected * dx;
                fix.x = wall - measured * dx;
            } else {
                let wall = belief.y + expected * dy;
                fix.y = wall - measured * dy;
            }
        }
        self.belief_offset = (fix.x - pose.x, fix.y - pose.y);
        Ok(())
    }

    fn home_step(&mut self) -> Result<Progress, SimError> {
        let dock = self.world.dock_pose().position();
        let needs_route = self.homing.as_ref().is_none_or(|h| h.route.is_none());
        if needs_route {
            self.position_fix()?;
            let route = self.homing_route(dock);
            self.homing = Some(HomingState { route: Some(route) });
        }
        let next = self
            .homing
            .as_mut()
            .and_then(|h| h.route.as_mut())
            .and_then(|r| r.pop_front());
        match next {
            Some(target) => {
                self.go_to(target)?;
                Ok(Progress::Moved)
            }
            None => {
                let final_pose = self.robot.pose;
                let err = final_pose.position().distance(&dock);
                self.event(EventKind::HomeEnd, format!("displacement_error_mm={}", quantize(err)));
                self.phase = Phase::Finished;
                self.homing = None;
                Ok(Progress::Homed(HomeOutcome {
                    final_pose,
                    displacement_error_mm: err,
                    aborted: false,
                }))
            }
        }
    }

    /// Straight to the dock when an L-shaped move is clear, otherwise back
    /// along the visited waypoints until one is.
    fn homing_route(&self, dock: Point) -> VecDeque<Point> {
        let room = &self.world.room;
        let s = self.world.robot.standoff_mm;
        let mut route = VecDeque::new();
        let mut cur = self.believed();
        let mut trail = self.visited.iter().rev();
        while l_route_corner(room, &cur, &dock, s).is_none() && !l_route_direct(room, &cur, &dock, s) {
            match trail.next() {
                Some(w) => {
                    route.push_back(*w);
                    cur = *w;
                }
                None => break,
            }
        }
        route.push_back(dock);
        route
    }
}

/// True when `a` and `b` share an axis and the segment between them is clear.
fn l_route_direct(room: &Room, a: &Point, b: &Point, s: f64) -> bool {
    (a.x == b.x || a.y == b.y) && room.segment_clear(a, b, s)
}

/// Corner of a clear two-leg route from `a` to `b`, x-leg first when both work.
fn l_route_corner(room: &Room, a: &Point, b: &Point, s: f64) -> Option<Point> {
    if (a.x - b.x).abs() < 0.5 || (a.y - b.y).abs() < 0.5 {
        return None;
    }
    let x_first = Point::new(b.x, a.y);
    let y_first = Point::new(a.x, b.y);
    for via in [x_first, y_first] {
        if room.segment_clear(a, &via, s) && room.segment_clear(&via, b, s) {
            return Some(via);
        }
    }
    Some(x_first)
}

/// Runs a complete sweep (start, samples, scans, homing) and returns its log.
pub fn run_sweep<R: Rng>(world: &World, plan: &SweepPlan, noise_on: bool, rng: R) -> Result<MissionLog, SimError> {
    let mut mission = Mission::new(world.clone(), *plan, noise_on, rng)?;
    mission.run_to_end()?;
    Ok(mission.into_log())
}

/// Returns the robot from `pose` to the dock.
pub fn home<R: Rng>(world: &World, pose: &Pose, noise_on: bool, rng: R) -> Result<HomeOutcome, SimError> {
    let mut mission = Mission::idle_at(world.clone(), *pose, noise_on, rng)?;
    mission.begin_home();
    loop {
        if let Progress::Homed(out) = mission.advance()? {
            return Ok(out);
        }
    }
}
