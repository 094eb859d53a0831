//! Room simulator: gas field, sensors with calibrated noise, quantized robot
//! kinematics and the boustrophedon sweep mission.

mod kinematics;
mod mission;
mod noise;
mod sensors;

pub use kinematics::{step, MotionCommand, Pose, Robot, StepOutcome};
pub use mission::{
    home, plan_waypoints, run_sweep, HomeOutcome, Mission, Phase, Progress, SeededMission, SweepPlan,
    Waypoint,
};
pub use noise::{apply_noise, noise_sigma};
pub use sensors::{gas_field, sense_distance, sense_gas};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Point, Room};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("point ({x}, {y}) is outside the room")]
    OutsideRoom { x: f64, y: f64 },
    #[error("ray from ({x}, {y}) at {bearing}° found no wall")]
    NoHit { x: f64, y: f64, bearing: f64 },
    #[error("robot is halted")]
    Halted,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Voc,
    Co2,
    Smoke,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::Voc, Species::Co2, Species::Smoke];

    pub fn channel(self) -> Channel {
        match self {
            Species::Voc => Channel::Voc,
            Species::Co2 => Channel::Co2,
            Species::Smoke => Channel::Smoke,
        }
    }
}

/// Every noisy measurement channel on the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Voc,
    Co2,
    Smoke,
    Temperature,
    Humidity,
    Battery,
    Distance,
}

impl Channel {
    pub const ALL: [Channel; 7] = [
        Channel::Voc,
        Channel::Co2,
        Channel::Smoke,
        Channel::Temperature,
        Channel::Humidity,
        Channel::Battery,
        Channel::Distance,
    ];

    /// Physical range noisy readings are clamped to.
    pub fn physical_range(self) -> (f64, f64) {
        match self {
            Channel::Humidity => (0.0, 100.0),
            Channel::Temperature => (-40.0, 125.0),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Voc => "voc",
            Channel::Co2 => "co2",
            Channel::Smoke => "smoke",
            Channel::Temperature => "temperature",
            Channel::Humidity => "humidity",
            Channel::Battery => "battery",
            Channel::Distance => "distance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasSource {
    pub position: Point,
    pub species: Species,
    /// Peak concentration above ambient, in the species' unit.
    pub amplitude: f64,
    /// Gaussian sigma in mm.
    pub spread_mm: f64,
    /// Constant advection offset applied to the plume centre.
    #[serde(default)]
    pub drift_mm: Point,
}

/// Relative error targets (mean absolute relative error) per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub voc: f64,
    pub co2: f64,
    pub smoke: f64,
    pub temperature: f64,
    pub humidity: f64,
    pub battery: f64,
    pub distance: f64,
}

impl Default for NoiseConfig {
    /// Average errors measured against reference instruments on the real robot.
    fn default() -> Self {
        Self {
            voc: 0.1095,
            co2: 0.1063,
            smoke: 0.1168,
            temperature: 0.0961,
            humidity: 0.0446,
            battery: 0.0244,
            distance: 0.2006,
        }
    }
}

impl NoiseConfig {
    pub fn zero() -> Self {
        Self {
            voc: 0.0,
            co2: 0.0,
            smoke: 0.0,
            temperature: 0.0,
            humidity: 0.0,
            battery: 0.0,
            distance: 0.0,
        }
    }

    pub fn get(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Voc => self.voc,
            Channel::Co2 => self.co2,
            Channel::Smoke => self.smoke,
            Channel::Temperature => self.temperature,
            Channel::Humidity => self.humidity,
            Channel::Battery => self.battery,
            Channel::Distance => self.distance,
        }
    }

    pub fn set(&mut self, channel: Channel, value: f64) {
        match channel {
            Channel::Voc => self.voc = value,
            Channel::Co2 => self.co2 = value,
            Channel::Smoke => self.smoke = value,
            Channel::Temperature => self.temperature = value,
            Channel::Humidity => self.humidity = value,
            Channel::Battery => self.battery = value,
            Channel::Distance => self.distance = value,
        }
    }

    /// Keeps only `channel`, zeroing the rest.
    pub fn only(&self, channel: Channel) -> Self {
        let mut out = Self::zero();
        out.set(channel, self.get(channel));
        out
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for c in Channel::ALL {
            let v = self.get(c);
            if !(0.0..1.0).contains(&v) {
                return Err(SimError::Config(format!(
                    "noise target for {} must be in [0, 1), got {v}",
                    c.name()
                )));
            }
        }
        Ok(())
    }
}

/// Noise-free background values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ambient {
    pub voc: f64,
    pub co2: f64,
    pub smoke: f64,
    pub temperature: f64,
    pub humidity: f64,
}

impl Default for Ambient {
    fn default() -> Self {
        Self {
            voc: 100.0,
            co2: 420.0,
            smoke: 20.0,
            temperature: 24.0,
            humidity: 50.0,
        }
    }
}

impl Ambient {
    pub fn species(&self, s: Species) -> f64 {
        match s {
            Species::Voc => self.voc,
            Species::Co2 => self.co2,
            Species::Smoke => self.smoke,
        }
    }
}

/// Linear pack discharge over the configured mission duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub full_v: f64,
    pub empty_v: f64,
    pub duration_ms: u64,
}

impl Default for Battery {
    fn default() -> Self {
        Self {
            full_v: 12.6,
            empty_v: 11.1,
            duration_ms: 1_800_000,
        }
    }
}

impl Battery {
    pub fn voltage_at(&self, t_ms: u64) -> f64 {
        if self.duration_ms == 0 {
            return self.empty_v;
        }
        let f = (t_ms as f64 / self.duration_ms as f64).min(1.0);
        self.full_v + (self.empty_v - self.full_v) * f
    }
}

/// Motion and sensing durations used by the simulated clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub ms_per_mm: u64,
    pub ms_per_degree: u64,
    pub sample_ms: u64,
    pub range_reading_ms: u64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            ms_per_mm: 5,
            ms_per_degree: 5,
            sample_ms: 500,
            range_reading_ms: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    /// Clearance kept from walls, in mm.
    pub standoff_mm: f64,
    #[serde(default)]
    pub timing: Timing,
}

impl Default for RobotSpec {
    fn default() -> Self {
        Self {
            standoff_mm: 50.0,
            timing: Timing::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub room: Room,
    #[serde(default)]
    pub gas_sources: Vec<GasSource>,
    #[serde(default)]
    pub ambient: Ambient,
    #[serde(default)]
    pub battery: Battery,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub robot: RobotSpec,
}

impl World {
    pub fn new(room: Room) -> Self {
        Self {
            room,
            gas_sources: Vec::new(),
            ambient: Ambient::default(),
            battery: Battery::default(),
            noise: NoiseConfig::default(),
            robot: RobotSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.noise.validate()?;
        if !(self.robot.standoff_mm >= 0.0) {
            return Err(SimError::Config("standoff must be non-negative".into()));
        }
        for (i, s) in self.gas_sources.iter().enumerate() {
            if !(s.amplitude >= 0.0) {
                return Err(SimError::Config(format!("gas source {i}: amplitude must be >= 0")));
            }
            if !(s.spread_mm > 0.0) {
                return Err(SimError::Config(format!("gas source {i}: spread must be > 0")));
            }
            if !self.room.contains(&s.position) || self.room.boundary_distance(&s.position) == 0.0
            {
                return Err(SimError::Config(format!(
                    "gas source {i} must lie strictly inside the room"
                )));
            }
        }
        Ok(())
    }

    pub fn dock_pose(&self) -> Pose {
        let p = self.room.dock(self.robot.standoff_mm);
        Pose::new(p.x, p.y, 0.0)
    }
}

/// One timestamped reading of the environmental channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    /// ms since mission start
    pub timestamp: u64,
    /// ppb
    pub voc: f64,
    /// ppm
    pub co2: f64,
    /// µg/m³
    pub smoke: f64,
    /// °C
    pub temperature: f64,
    /// %RH
    pub humidity: f64,
    /// V
    pub battery: f64,
}

impl SensorFrame {
    pub fn species(&self, s: Species) -> f64 {
        match s {
            Species::Voc => self.voc,
            Species::Co2 => self.co2,
            Species::Smoke => self.smoke,
        }
    }

    pub fn channel(&self, c: Channel) -> Option<f64> {
        Some(match c {
            Channel::Voc => self.voc,
            Channel::Co2 => self.co2,
            Channel::Smoke => self.smoke,
            Channel::Temperature => self.temperature,
            Channel::Humidity => self.humidity,
            Channel::Battery => self.battery,
            Channel::Distance => return None,
        })
    }
}
