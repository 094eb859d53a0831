//! Telemetry service for the air-quality mapping robot.
//!
//! A single engine task owns the simulated mission. Clients connect over a
//! WebSocket at `/ws` to receive frames and send commands; `/api/state`,
//! `/api/log` and `/api/command` offer the same over plain HTTP.

pub mod engine;
pub mod server;
pub mod session;
pub mod wire;

pub use engine::{Engine, EngineOptions};
pub use server::{serve, ServeConfig, ServeError, ServerHandle};
pub use session::{watchdog_tick, SessionState, DEFAULT_WATCHDOG_MS, TICK_MS};
pub use wire::{decode_command, decode_frame, encode_command, encode_frame, Command, Frame, Payload, RobotState, WireError};
