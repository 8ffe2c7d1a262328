use serde::{Deserialize, Serialize};

use super::mapping::Correspondence;
use crate::geometry::{normalize_angle, Pose, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidanceConfig {
    /// rad per metre of cross-track error
    pub gain_cross: f64,
    pub gain_heading: f64,
    pub offset_max: f64,
    /// rad/s
    pub rate_max: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            gain_cross: 0.1,
            gain_heading: 0.3,
            offset_max: 0.0349,
            rate_max: 0.0175,
        }
    }
}

/// Steering state. `injected_offset` rotates the displayed scene; the
/// displayed avatar heading is `raw − injected_offset`, so a walker who
/// drifted left (positive cross-track error) sees a negative offset and
/// corrects to the right.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GuidanceState {
    pub cross_track_error: f64,
    pub heading_error: f64,
    pub injected_offset: f64,
}

impl GuidanceState {
    pub fn displayed_heading(&self, raw: f64) -> f64 {
        normalize_angle(raw - self.injected_offset)
    }
}

pub fn guidance_step(
    user_pose: &Pose,
    corr: &Correspondence,
    prev: &GuidanceState,
    dt: f64,
    config: &GuidanceConfig,
) -> GuidanceState {
    let proj = corr.user_frame().project(user_pose.position());
    guidance_from_projection(user_pose.heading, &proj, prev, dt, config)
}

/// Guidance for a walker whose projection onto the user path is known.
pub fn guidance_from_projection(
    user_heading: f64,
    proj: &Projection,
    prev: &GuidanceState,
    dt: f64,
    config: &GuidanceConfig,
) -> GuidanceState {
    let heading_error = normalize_angle(user_heading - proj.tangent);
    command(proj.d, heading_error, prev, dt, config)
}

pub(crate) fn command(
    cross_track_error: f64,
    heading_error: f64,
    prev: &GuidanceState,
    dt: f64,
    config: &GuidanceConfig,
) -> GuidanceState {
    let demanded = -(config.gain_cross * cross_track_error + config.gain_heading * heading_error);
    let demanded = if demanded.is_finite() {
        demanded.clamp(-config.offset_max, config.offset_max)
    } else {
        prev.injected_offset
    };
    let max_change = config.rate_max * dt.max(0.0);
    let change = (demanded - prev.injected_offset).clamp(-max_change, max_change);
    let injected_offset =
        (prev.injected_offset + change).clamp(-config.offset_max, config.offset_max);
    GuidanceState {
        cross_track_error,
        heading_error,
        injected_offset,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolyPath;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn straight() -> Correspondence {
        Correspondence::identity(PolyPath::straight(Pose::new(0.0, 0.0, 0.0), 0.1, 50).unwrap())
    }

    #[test]
    fn on_path_and_aligned_gives_zero() {
        let st = guidance_step(
            &Pose::new(2.0, 0.0, 0.0),
            &straight(),
            &GuidanceState::default(),
            0.02,
            &GuidanceConfig::default(),
        );
        assert_eq!(st.injected_offset, 0.0);
        assert_abs_diff_eq!(st.cross_track_error, 0.0);
    }

    #[test]
    fn cross_track_gain() {
        let cfg = GuidanceConfig {
            gain_cross: 0.1,
            gain_heading: 0.0,
            ..GuidanceConfig::default()
        };
        let st = guidance_step(&Pose::new(2.0, 0.2, 0.0), &straight(), &GuidanceState::default(), 100.0, &cfg);
        assert_abs_diff_eq!(st.cross_track_error, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(st.injected_offset, -0.02, epsilon = 1e-12);
    }

    #[test]
    fn demand_is_clamped() {
        let cfg = GuidanceConfig::default();
        let st = command(-1.0, 0.0, &GuidanceState::default(), 100.0, &cfg);
        assert_abs_diff_eq!(st.injected_offset, 0.0349);
        let st = command(1.0, 0.0, &GuidanceState::default(), 100.0, &cfg);
        assert_abs_diff_eq!(st.injected_offset, -0.0349);
    }

    #[test]
    fn offset_is_slew_limited() {
        let cfg = GuidanceConfig::default();
        let st = command(1.0, 0.0, &GuidanceState::default(), 0.02, &cfg);
        assert_abs_diff_eq!(st.injected_offset, -0.0175 * 0.02, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn bounded_and_rate_limited(
            e in -1e3f64..1e3, h in -10f64..10.0, prev in -0.0349f64..0.0349, dt in 1e-4f64..5.0
        ) {
            let cfg = GuidanceConfig::default();
            let prev = GuidanceState { injected_offset: prev, ..GuidanceState::default() };
            let st = command(e, h, &prev, dt, &cfg);
            prop_assert!(st.injected_offset.abs() <= cfg.offset_max);
            prop_assert!((st.injected_offset - prev.injected_offset).abs() <= cfg.rate_max * dt + 1e-15);
        }
    }
}
