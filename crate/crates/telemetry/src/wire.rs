//! Wire schema v1.
//!
//! Every message is one JSON document. Server frames look like
//! `{"payload": {..}, "seq": 12, "t": 3400, "type": "sensor", "v": 1}` with
//! keys sorted at every level. Millimetres, sensor channels and scores are
//! rounded to 3 decimals on encode. Client commands are tagged by `kind`.

use std::collections::BTreeMap;

use aeromap_core::fuzzy::{IaqClass, InputVar};
use aeromap_core::log::PosedFrame;
use aeromap_core::mapper::WallModel;
use aeromap_core::sim::{Pose, SweepPlan};
use aeromap_core::units::quantize;
use aeromap_core::{MapPoint, Point};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const WIRE_VERSION: u64 = 1;

/// Largest number of map points carried by one `map` frame.
pub const MAP_BATCH: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum WireError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("missing required field `{0}`")]
    Schema(String),
    #[error("unsupported wire version {0}")]
    Version(u64),
    #[error("unknown frame type `{0}`")]
    UnknownType(String),
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("bad command: {0}")]
    BadCommand(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotState {
    Idle,
    Sweeping,
    Homing,
    Halted,
}

impl RobotState {
    pub fn is_moving(self) -> bool {
        matches!(self, RobotState::Sweeping | RobotState::Homing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapBatch {
    pub points: Vec<MapPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    pub robot_state: RobotState,
    pub pose: Pose,
    /// Simulated mission clock.
    pub mission_ms: u64,
    pub frames: usize,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// Timestamp of the classified sensor frame.
    pub timestamp: u64,
    pub class: IaqClass,
    /// Absent when no rule fired and the crisp baseline stood in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crisp_score: Option<f64>,
    pub fallback: bool,
    pub term_strengths: BTreeMap<IaqClass, f64>,
    #[serde(default)]
    pub clamped: Vec<InputVar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Sensor(PosedFrame),
    Map(MapBatch),
    Status(Status),
    WallModel(WallModel),
    Classification(ClassificationReport),
    Ack(Ack),
    Error(ErrorBody),
}

impl Payload {
    pub fn type_name(&self) -> &'static str {
        match self {
            Payload::Sensor(_) => "sensor",
            Payload::Map(_) => "map",
            Payload::Status(_) => "status",
            Payload::WallModel(_) => "wall_model",
            Payload::Classification(_) => "classification",
            Payload::Ack(_) => "ack",
            Payload::Error(_) => "error",
        }
    }

    fn from_value(kind: &str, v: Value) -> Result<Self, WireError> {
        fn de<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, WireError> {
            serde_json::from_value(v).map_err(|e| schema_error("payload", &e))
        }
        Ok(match kind {
            "sensor" => Payload::Sensor(de(v)?),
            "map" => {
                let b: MapBatch = de(v)?;
                if b.points.len() > MAP_BATCH {
                    return Err(WireError::Invalid {
                        field: "payload.points".into(),
                        message: format!("{} points exceed the batch limit of {MAP_BATCH}", b.points.len()),
                    });
                }
                Payload::Map(b)
            }
            "status" => Payload::Status(de(v)?),
            "wall_model" => Payload::WallModel(de(v)?),
            "classification" => Payload::Classification(de(v)?),
            "ack" => Payload::Ack(de(v)?),
            "error" => Payload::Error(de(v)?),
            other => return Err(WireError::UnknownType(other.into())),
        })
    }

    fn quantized(&self) -> Payload {
        let q = quantize;
        let pose = |p: &Pose| Pose::new(q(p.x), q(p.y), q(p.heading));
        let point = |p: &Point| Point::new(q(p.x), q(p.y));
        match self {
            Payload::Sensor(pf) => {
                let f = pf.frame;
                Payload::Sensor(PosedFrame {
                    pose: pose(&pf.pose),
                    frame: aeromap_core::SensorFrame {
                        timestamp: f.timestamp,
                        voc: q(f.voc),
                        co2: q(f.co2),
                        smoke: q(f.smoke),
                        temperature: q(f.temperature),
                        humidity: q(f.humidity),
                        battery: q(f.battery),
                    },
                })
            }
            Payload::Map(b) => Payload::Map(MapBatch {
                points: b.points.iter().map(|p| MapPoint::new(q(p.x), q(p.y), p.source_pose_id)).collect(),
            }),
            Payload::Status(s) => Payload::Status(Status { pose: pose(&s.pose), ..s.clone() }),
            Payload::WallModel(m) => {
                let mut m = m.clone();
                for l in &mut m.lines {
                    l.a = q(l.a);
                    l.extent = [q(l.extent[0]), q(l.extent[1])];
                }
                m.corners = m.corners.iter().map(point).collect();
                m.wall_lengths = m.wall_lengths.iter().map(|v| q(*v)).collect();
                Payload::WallModel(m)
            }
            Payload::Classification(c) => Payload::Classification(ClassificationReport {
                crisp_score: c.crisp_score.map(q),
                ..c.clone()
            }),
            Payload::Ack(_) | Payload::Error(_) => self.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub seq: u64,
    /// Milliseconds since the session started.
    pub t: u64,
    pub payload: Payload,
}

impl Frame {
    pub fn new(seq: u64, t: u64, payload: Payload) -> Self {
        Self { seq, t, payload }
    }

    pub fn type_name(&self) -> &'static str {
        self.payload.type_name()
    }

    /// The frame as it reads back after a trip over the wire.
    pub fn quantized(&self) -> Frame {
        Frame { payload: self.payload.quantized(), ..self.clone() }
    }

    pub fn to_value(&self) -> Value {
        let payload = serde_json::to_value(self.payload.quantized()).expect("payload serializes");
        let mut obj = serde_json::Map::new();
        obj.insert("v".into(), WIRE_VERSION.into());
        obj.insert("type".into(), self.type_name().into());
        obj.insert("seq".into(), self.seq.into());
        obj.insert("t".into(), self.t.into());
        obj.insert("payload".into(), payload);
        Value::Object(obj)
    }
}

/// Message text for the serde error, with missing fields reported by name.
fn schema_error(prefix: &str, e: &serde_json::Error) -> WireError {
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(end) = rest.find('`') {
            return WireError::Schema(format!("{prefix}.{}", &rest[..end]));
        }
    }
    WireError::Invalid { field: prefix.into(), message: msg }
}

pub fn encode_frame(f: &Frame) -> String {
    // serde_json maps are ordered, so keys come out sorted
    serde_json::to_string(&f.to_value()).expect("frame serializes")
}

pub fn decode_frame(text: &str) -> Result<Frame, WireError> {
    let v: Value = serde_json::from_str(text).map_err(|e| WireError::Json(e.to_string()))?;
    let Value::Object(mut obj) = v else {
        return Err(WireError::Json("frame must be a JSON object".into()));
    };
    for field in ["v", "type", "seq", "t", "payload"] {
        if !obj.contains_key(field) {
            return Err(WireError::Schema(field.into()));
        }
    }
    let uint = |field: &str, v: &Value| {
        v.as_u64().ok_or_else(|| WireError::Invalid {
            field: field.into(),
            message: format!("expected a non-negative integer, got {v}"),
        })
    };
    let version = uint("v", &obj["v"])?;
    if version != WIRE_VERSION {
        return Err(WireError::Version(version));
    }
    let seq = uint("seq", &obj["seq"])?;
    let t = uint("t", &obj["t"])?;
    let kind = obj["type"]
        .as_str()
        .ok_or_else(|| WireError::Invalid { field: "type".into(), message: "expected a string".into() })?
        .to_owned();
    let payload = Payload::from_value(&kind, obj.remove("payload").expect("checked above"))?;
    Ok(Frame { seq, t, payload })
}

/// Operator commands, one JSON object tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Command {
    Start,
    Stop,
    Home,
    SetPlan { plan: SweepPlan },
    Ping,
    Download,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Start => "start",
            Command::Stop => "stop",
            Command::Home => "home",
            Command::SetPlan { .. } => "set_plan",
            Command::Ping => "ping",
            Command::Download => "download",
        }
    }
}

pub fn encode_command(c: &Command) -> String {
    serde_json::to_value(c).expect("command serializes").to_string()
}

pub fn decode_command(text: &str) -> Result<Command, WireError> {
    serde_json::from_str(text).map_err(|e| WireError::BadCommand(e.to_string()))
}
