//! Motion compression: predict where the avatar is heading, bend that path
//! so it fits inside the physical room while keeping its length and total
//! turning, and nudge the walker back onto the bent path.

mod guidance;
mod mapping;
mod predict;
mod room;
mod transform;

use serde::{Deserialize, Serialize};

pub use guidance::{guidance_from_projection, guidance_step, GuidanceConfig, GuidanceState};
pub use mapping::{map_pose, Correspondence, CorrespondenceDump, MappedPose};
pub use predict::{
    predict_target_path, predictor_registry, GoalSnapPredictor, PathPredictor, PredictorConfig,
    ViewRayPredictor,
};
pub use room::RoomSpec;
pub use transform::{transform_path, TransformConfig};

use crate::geometry::DEFAULT_DS;

/// Tunables for the whole pipeline, as they appear in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionConfig {
    pub ds: f64,
    pub horizon: f64,
    /// Half-width of the goal-snap window around the heading, radians.
    pub goal_window: f64,
    pub predictor: String,
    pub guidance: GuidanceConfig,
    pub transform: TransformConfig,
    /// Re-plan once the walker strays this far from the user path (m).
    pub replan_deviation: f64,
    /// Re-plan once this fraction of the user path is consumed.
    pub replan_consumed: f64,
    /// A tracked walker is projected within this arc-length window around
    /// its previous position on the user path (m).
    pub track_window: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            ds: DEFAULT_DS,
            horizon: 3.0,
            goal_window: 30f64.to_radians(),
            predictor: "goal".into(),
            guidance: GuidanceConfig::default(),
            transform: TransformConfig::default(),
            replan_deviation: 0.5,
            replan_consumed: 0.7,
            track_window: 1.0,
        }
    }
}
