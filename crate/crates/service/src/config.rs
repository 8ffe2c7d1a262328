use std::path::Path;

use glam::DVec2;
use serde::{Deserialize, Serialize};
use telewalk_core::crowd::Scenario;
use telewalk_core::haptics::HapticsConfig;
use telewalk_core::motion::{MotionConfig, RoomSpec};
use telewalk_core::Pose;

use crate::Result;

/// Everything a session needs beyond the crowd scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub room: RoomSpec,
    pub motion: MotionConfig,
    pub haptics: HapticsConfig,
    pub avatar_start: Pose,
    pub goals: Vec<[f64; 2]>,
    pub avatar_radius: f64,
    /// a goal counts as reached within this distance, m
    pub goal_radius: f64,
    /// silence after which a tick runs on the last pose, ms
    pub dropout_ms: f64,
    pub neighbor_search: String,
    /// minimum ticks between two re-plans
    pub replan_min_ticks: u64,
    pub crowd_seed: u64,
    /// crowd rows go to trajectory.csv every this many ticks
    pub trajectory_every: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            room: RoomSpec::default(),
            motion: MotionConfig::default(),
            haptics: HapticsConfig::default(),
            avatar_start: Pose::new(6.0, 6.0, 0.0),
            goals: vec![[18.0, 6.0]],
            avatar_radius: 0.3,
            goal_radius: 0.3,
            dropout_ms: 200.0,
            neighbor_search: "grid".into(),
            replan_min_ticks: 25,
            crowd_seed: 7,
            trajectory_every: 5,
        }
    }
}

impl SessionConfig {
    pub fn goal_points(&self) -> Vec<DVec2> {
        self.goals.iter().map(|&g| DVec2::from(g)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        if !(self.avatar_radius > 0.0 && self.goal_radius > 0.0 && self.dropout_ms > 0.0) {
            anyhow::bail!("avatar radius, goal radius and dropout interval must be positive");
        }
        if !self.avatar_start.is_finite() || self.goals.iter().flatten().any(|v| !v.is_finite()) {
            anyhow::bail!("avatar start and goals must be finite");
        }
        if self.trajectory_every == 0 {
            anyhow::bail!("trajectory decimation must be at least 1");
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct SessionBlock {
    #[serde(default)]
    session: Option<SessionConfig>,
}

/// Scenario file plus the session block it may carry. A separate config file
/// replaces that block.
pub fn load_session_inputs(scenario: &Path, config: Option<&Path>) -> Result<(Scenario, SessionConfig)> {
    let text = std::fs::read_to_string(scenario)?;
    let parsed = Scenario::from_json(&text)?;
    let session = match config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => serde_json::from_str::<SessionBlock>(&text)?.session.unwrap_or_default(),
    };
    session.validate()?;
    Ok((parsed, session))
}
