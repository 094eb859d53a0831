//! Connection-loss watchdog.

use serde::{Deserialize, Serialize};

use crate::wire::RobotState;

pub const DEFAULT_WATCHDOG_MS: u64 = 2000;

/// Engine tick period.
pub const TICK_MS: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub robot_state: RobotState,
    /// Session clock (ms) of the last message from any client.
    pub last_client_contact: u64,
    pub watchdog_timeout: u64,
}

impl SessionState {
    pub fn new(watchdog_timeout: u64) -> Self {
        Self { robot_state: RobotState::Idle, last_client_contact: 0, watchdog_timeout }
    }

    pub fn contact(&mut self, now: u64) {
        self.last_client_contact = self.last_client_contact.max(now);
    }
}

/// Halts a moving robot whose clients have been silent for longer than the
/// timeout. Idle and halted robots are left alone.
pub fn watchdog_tick(mut state: SessionState, now: u64) -> SessionState {
    if state.robot_state.is_moving() && now.saturating_sub(state.last_client_contact) > state.watchdog_timeout {
        state.robot_state = RobotState::Halted;
    }
    state
}
