//! Mission log: everything a sweep produced, in capture order.
//!
//! The same structure is written by `simulate`, served by the telemetry
//! service at `/api/log` and read back by `extract-walls` and `replay`.

use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Room};
use crate::sim::{Pose, SensorFrame, SweepPlan};

/// Version tag carried by every log document.
pub const LOG_VERSION: u32 = 1;

/// A wall hit in room coordinates, traceable to the scan that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub x: f64,
    pub y: f64,
    pub source_pose_id: usize,
}

impl MapPoint {
    pub fn new(x: f64, y: f64, source_pose_id: usize) -> Self {
        Self { x, y, source_pose_id }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosedFrame {
    pub pose: Pose,
    pub frame: SensorFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub id: usize,
    pub t: u64,
    pub pose: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Start,
    Halt,
    Resume,
    HomeBegin,
    HomeEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub kind: EventKind,
    #[serde(default)]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionMeta {
    pub seed: Option<u64>,
    pub noise_enabled: bool,
    pub room: Room,
    pub dock: Pose,
    pub plan: SweepPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionLog {
    pub v: u32,
    pub meta: MissionMeta,
    pub frames: Vec<PosedFrame>,
    pub scans: Vec<ScanRecord>,
    pub points: Vec<MapPoint>,
    pub events: Vec<Event>,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("log is not valid JSON for schema v{LOG_VERSION}: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported log version {0}")]
    Version(u32),
    #[error("log invariant violated: {0}")]
    Invariant(String),
}

impl MissionLog {
    pub fn new(meta: MissionMeta) -> Self {
        Self {
            v: LOG_VERSION,
            meta,
            frames: Vec::new(),
            scans: Vec::new(),
            points: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("log serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LogError> {
        let log: MissionLog = serde_json::from_str(text)?;
        if log.v != LOG_VERSION {
            return Err(LogError::Version(log.v));
        }
        log.check()?;
        Ok(log)
    }

    /// Frame timestamps strictly increase and every point names a known scan.
    pub fn check(&self) -> Result<(), LogError> {
        for w in self.frames.windows(2) {
            if w[1].frame.timestamp <= w[0].frame.timestamp {
                return Err(LogError::Invariant(format!(
                    "frame timestamps not increasing at t={}",
                    w[1].frame.timestamp
                )));
            }
        }
        for (i, s) in self.scans.iter().enumerate() {
            if s.id != i {
                return Err(LogError::Invariant(format!("scan {i} has id {}", s.id)));
            }
        }
        if let Some(p) = self.points.iter().find(|p| p.source_pose_id >= self.scans.len()) {
            return Err(LogError::Invariant(format!(
                "point references unknown scan {}",
                p.source_pose_id
            )));
        }
        Ok(())
    }

    /// Point cloud for wall extraction, dropping hits farther than
    /// `max_range_mm` from their scan pose.
    pub fn point_cloud(&self, max_range_mm: Option<f64>) -> Vec<MapPoint> {
        match max_range_mm {
            None => self.points.clone(),
            Some(limit) => self
                .points
                .iter()
                .filter(|p| {
                    self.scans
                        .get(p.source_pose_id)
                        .map(|s| s.pose.position().distance(&p.position()) <= limit)
                        .unwrap_or(false)
                })
                .copied()
                .collect(),
        }
    }

    pub fn last_event(&self) -> Option<&Event> {
        self.events.last()
    }

    /// Homing displacement recorded by the last successful `home_end` event.
    pub fn homing_error_mm(&self) -> Option<f64> {
        self.events
            .iter()
            .rev()
            .find(|e| e.kind == EventKind::HomeEnd)
            .and_then(|e| e.detail.strip_prefix("displacement_error_mm="))
            .and_then(|v| v.parse().ok())
    }
}
