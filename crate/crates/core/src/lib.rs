//! Core of the aeromap stack: a desk-scale simulation of an indoor air-quality
//! mapping robot, the wall reconstruction pipeline that turns its range scans
//! into a room outline, and the Mamdani fuzzy classifier for air quality.
//!
//! The crate is split along the lines of the running system:
//!
//! - [`geometry`] rectilinear rooms, ray casting and clearance queries
//! - [`sim`] gas field, noisy sensors, quantized kinematics and the sweep mission
//! - [`log`] the mission log that is streamed, stored and replayed
//! - [`mapper`] orientation sorting, least-squares wall fitting and corner recovery
//! - [`fuzzy`] Mamdani inference, centroid defuzzification and the crisp baseline
//! - [`config`] loading of the structured text configuration files

pub mod config;
pub mod fuzzy;
pub mod geometry;
pub mod log;
pub mod mapper;
pub mod sim;
pub mod units;

pub use config::{ConfigError, MappingConfig, SimConfig};
pub use geometry::{Point, Room};
pub use log::{Event, EventKind, MapPoint, MissionLog, PosedFrame, ScanRecord};
pub use sim::{Pose, SensorFrame, World};

/// Random stream used throughout: every run is reproducible from its seed.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
