use serde::{Deserialize, Serialize};

use super::{SimError, World};
use crate::geometry::{unit_vector, Point};

/// Robot position (mm) and heading (degrees, `[0, 360)`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: normalize_heading(heading) }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

pub(crate) fn normalize_heading(h: f64) -> f64 {
    let n = h.rem_euclid(360.0);
    if n >= 360.0 {
        0.0
    } else {
        n
    }
}

/// Motor command in actuator units: 1 mm per step, 1° per turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MotionCommand {
    pub translate_steps: i64,
    pub rotate_turns: i64,
}

impl MotionCommand {
    pub fn rotate(turns: i64) -> Self {
        Self { translate_steps: 0, rotate_turns: turns }
    }

    pub fn translate(steps: i64) -> Self {
        Self { translate_steps: steps, rotate_turns: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub pose: Pose,
    /// Signed steps actually driven; smaller in magnitude than requested when
    /// a wall stopped the robot.
    pub achieved_steps: i64,
}

/// Rotates first, then drives along the new heading, stopping `standoff`
/// short of the first wall. Each axis is rounded to the nearest mm.
pub fn step(world: &World, pose: &Pose, cmd: MotionCommand) -> Result<StepOutcome, SimError> {
    let heading = normalize_heading(pose.heading + cmd.rotate_turns as f64);
    if cmd.translate_steps == 0 {
        return Ok(StepOutcome { pose: Pose { heading, ..*pose }, achieved_steps: 0 });
    }
    let travel_bearing = if cmd.translate_steps > 0 { heading } else { heading + 180.0 };
    let origin = pose.position();
    if !world.room.contains(&origin) {
        return Err(SimError::OutsideRoom { x: origin.x, y: origin.y });
    }
    let free = world
        .room
        .ray_cast(&origin, travel_bearing)
        .ok_or(SimError::NoHit { x: origin.x, y: origin.y, bearing: travel_bearing })?;
    let limit = (free - world.robot.standoff_mm + 1e-9).floor().max(0.0) as i64;
    let achieved = cmd.translate_steps.abs().min(limit);
    let (dx, dy) = unit_vector(heading);
    let d = (achieved * cmd.translate_steps.signum()) as f64;
    let moved = Pose {
        x: (pose.x + (d * dx).round()).round(),
        y: (pose.y + (d * dy).round()).round(),
        heading,
    };
    Ok(StepOutcome {
        pose: moved,
        achieved_steps: achieved * cmd.translate_steps.signum(),
    })
}

/// Stateful wrapper that refuses motion while halted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Robot {
    pub pose: Pose,
    pub halted: bool,
}

impl Robot {
    pub fn new(pose: Pose) -> Self {
        Self { pose, halted: false }
    }

    pub fn execute(&mut self, world: &World, cmd: MotionCommand) -> Result<StepOutcome, SimError> {
        if self.halted {
            return Err(SimError::Halted);
        }
        let out = step(world, &self.pose, cmd)?;
        self.pose = out.pose;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Room;
    use proptest::prelude::*;

    fn open_world() -> World {
        World::new(
            Room::new(vec![
                Point::new(-10_000.0, -10_000.0),
                Point::new(10_000.0, -10_000.0),
                Point::new(10_000.0, 10_000.0),
                Point::new(-10_000.0, 10_000.0),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn straight_translation() {
        let out = step(&open_world(), &Pose::new(0.0, 0.0, 0.0), MotionCommand::translate(1000)).unwrap();
        assert_eq!(out.pose, Pose::new(1000.0, 0.0, 0.0));
        assert_eq!(out.achieved_steps, 1000);
    }

    #[test]
    fn pure_rotation() {
        let out = step(&open_world(), &Pose::new(0.0, 0.0, 0.0), MotionCommand::rotate(90)).unwrap();
        assert_eq!(out.pose, Pose::new(0.0, 0.0, 90.0));
        let out = step(&open_world(), &Pose::new(0.0, 0.0, 10.0), MotionCommand::rotate(-20)).unwrap();
        assert_eq!(out.pose.heading, 350.0);
    }

    #[test]
    fn diagonal_rounds_each_axis() {
        // 1000/√2 = 707.1067... on both axes
        let out = step(&open_world(), &Pose::new(0.0, 0.0, 45.0), MotionCommand::translate(1000)).unwrap();
        assert_eq!(out.pose, Pose::new(707.0, 707.0, 45.0));
    }

    #[test]
    fn wall_stops_at_standoff() {
        let w = World::new(Room::rectangle(4000.0, 3000.0).unwrap());
        let out = step(&w, &Pose::new(2000.0, 1500.0, 0.0), MotionCommand::translate(5000)).unwrap();
        assert_eq!(out.pose.x, 3950.0);
        assert_eq!(out.achieved_steps, 1950);
        let back = step(&w, &out.pose, MotionCommand::translate(-5000)).unwrap();
        assert_eq!(back.pose.x, 50.0);
        assert_eq!(back.achieved_steps, -3900);
    }

    #[test]
    fn halted_robot_rejects_commands() {
        let w = open_world();
        let mut r = Robot::new(Pose::default());
        r.halted = true;
        assert_eq!(r.execute(&w, MotionCommand::translate(1)), Err(SimError::Halted));
        r.halted = false;
        assert!(r.execute(&w, MotionCommand::translate(1)).is_ok());
    }

    proptest! {
        #[test]
        fn command_sequence_and_inverse_close(
            cmds in prop::collection::vec((-400i64..400, -180i64..180), 1..12)
        ) {
            let w = open_world();
            let start = Pose::new(0.0, 0.0, 0.0);
            let mut pose = start;
            let mut done = Vec::new();
            for (steps, turns) in cmds {
                let out = step(&w, &pose, MotionCommand { translate_steps: steps, rotate_turns: turns }).unwrap();
                done.push((out.achieved_steps, turns));
                pose = out.pose;
            }
            for (steps, turns) in done.into_iter().rev() {
                pose = step(&w, &pose, MotionCommand::translate(-steps)).unwrap().pose;
                pose = step(&w, &pose, MotionCommand::rotate(-turns)).unwrap().pose;
            }
            prop_assert!(pose.position().distance(&start.position()) <= 1.0);
            prop_assert_eq!(pose.heading, start.heading);
        }

        #[test]
        fn robot_stays_inside(
            cmds in prop::collection::vec((-6000i64..6000, -180i64..180), 1..20)
        ) {
            let w = World::new(Room::rectangle(4000.0, 3000.0).unwrap());
            let mut pose = Pose::new(50.0, 50.0, 0.0);
            for (steps, turns) in cmds {
                pose = step(&w, &pose, MotionCommand { translate_steps: steps, rotate_turns: turns }).unwrap().pose;
                prop_assert!(w.room.contains(&pose.position()));
            }
        }
    }
}
