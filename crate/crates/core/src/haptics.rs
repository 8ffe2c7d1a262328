//! Avatar contact force and its transfer into the user's frame.

use glam::{DMat2, DVec2};
use serde::{Deserialize, Serialize};

use crate::crowd::{driving_force, overlaps, overlaps_wall, pair_force, wall_force, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Target,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceSample {
    pub fx: f64,
    pub fy: f64,
    pub in_contact: bool,
    pub frame: Frame,
    pub t: f64,
}

impl ForceSample {
    pub fn zero(frame: Frame, t: f64) -> Self {
        Self {
            fx: 0.0,
            fy: 0.0,
            in_contact: false,
            frame,
            t,
        }
    }

    pub fn vector(&self) -> DVec2 {
        DVec2::new(self.fx, self.fy)
    }

    pub fn magnitude(&self) -> f64 {
        self.fx.hypot(self.fy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HapticsConfig {
    /// Adds the avatar's own driving term, taken along its heading.
    pub include_driving: bool,
    pub desired_speed: f64,
}

impl Default for HapticsConfig {
    fn default() -> Self {
        Self {
            include_driving: false,
            desired_speed: 1.2,
        }
    }
}

/// Resultant interaction force on the avatar in the target frame, or exactly
/// zero when nothing overlaps it.
pub fn avatar_force(world: &World, config: &HapticsConfig) -> ForceSample {
    let Some(avatar) = world.avatar else {
        return ForceSample::zero(Frame::Target, world.t);
    };
    let me = avatar.body();
    let params = world.scenario.params;
    let contact = world.walking().any(|p| overlaps(&me, &p.body()))
        || world.scenario.walls.iter().any(|w| overlaps_wall(&me, w));
    if !contact {
        return ForceSample::zero(Frame::Target, world.t);
    }
    let mut total = DVec2::ZERO;
    for p in world.walking() {
        total += pair_force(&me, &p.body(), &params).0;
    }
    for w in &world.scenario.walls {
        total += wall_force(&me, w, &params).0;
    }
    if config.include_driving {
        let ahead = avatar.position + DVec2::from_angle(avatar.heading);
        total += driving_force(avatar.position, avatar.velocity, config.desired_speed, ahead, &params);
    }
    ForceSample {
        fx: total.x,
        fy: total.y,
        in_contact: true,
        frame: Frame::Target,
        t: world.t,
    }
}

/// Re-expresses `f` so it keeps its magnitude and its angle to the path
/// tangent when the tangent changes from `from_tangent` to `to_tangent`.
pub fn rotate_force(f: DVec2, from_tangent: f64, to_tangent: f64) -> DVec2 {
    let magnitude = f.length();
    if magnitude == 0.0 {
        return DVec2::ZERO;
    }
    let rotated = DMat2::from_angle(to_tangent - from_tangent) * f;
    rotated * (magnitude / rotated.length())
}

/// Target-frame sample to user frame.
pub fn transform_force(f: &ForceSample, target_tangent: f64, user_tangent: f64) -> ForceSample {
    let (v, frame) = match f.frame {
        Frame::Target => (rotate_force(f.vector(), target_tangent, user_tangent), Frame::User),
        Frame::User => (rotate_force(f.vector(), user_tangent, target_tangent), Frame::Target),
    };
    ForceSample {
        fx: v.x,
        fy: v.y,
        in_contact: f.in_contact,
        frame,
        t: f.t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crowd::{Avatar, ForceParams, Scenario, Wall};
    use std::f64::consts::FRAC_PI_2;

    fn world(a: f64) -> World {
        let mut s = Scenario::four_gate_hall();
        s.spawn_count = 0;
        s.walls = vec![Wall::from([0.0, 0.0, 20.0, 0.0])];
        s.params = ForceParams { a, ..ForceParams::default() };
        let gc = s.gate_choice;
        let mut w = World::new(s, gc, &[0.0; 4], 1, "grid").unwrap();
        w.set_avatar(Some(Avatar {
            position: DVec2::new(5.0, 3.0),
            velocity: DVec2::ZERO,
            heading: 0.0,
            radius: 0.3,
        }));
        w
    }

    #[test]
    fn distant_pedestrian_gives_zero() {
        let mut w = world(2000.0);
        w.add_pedestrian(DVec2::new(6.0, 3.0), DVec2::ZERO, 0.3, 1.2, None);
        let f = avatar_force(&w, &HapticsConfig::default());
        assert_eq!(f, ForceSample::zero(Frame::Target, 0.0));
    }

    #[test]
    fn single_overlap_is_compression_only() {
        let mut w = world(0.0);
        w.add_pedestrian(DVec2::new(5.59, 3.0), DVec2::ZERO, 0.3, 1.2, None);
        let f = avatar_force(&w, &HapticsConfig::default());
        assert!(f.in_contact);
        assert!((f.fx + 1200.0).abs() < 1e-6 && f.fy.abs() < 1e-9);
    }

    #[test]
    fn wall_and_pedestrian_superpose() {
        let mut w = world(2000.0);
        w.avatar.as_mut().unwrap().position = DVec2::new(5.0, 0.28);
        w.add_pedestrian(DVec2::new(5.55, 0.5), DVec2::new(0.3, 0.0), 0.3, 1.2, None);
        let f = avatar_force(&w, &HapticsConfig::default()).vector();
        let me = w.avatar.unwrap().body();
        let p = w.scenario.params;
        let expected = pair_force(&me, &w.pedestrians[0].body(), &p).0 + wall_force(&me, &w.scenario.walls[0], &p).0;
        assert!((f - expected).length() <= 1e-12);
    }

    #[test]
    fn rotation_example() {
        let f = ForceSample {
            fx: 5.0 * 30f64.to_radians().cos(),
            fy: 5.0 * 30f64.to_radians().sin(),
            in_contact: true,
            frame: Frame::Target,
            t: 0.0,
        };
        let out = transform_force(&f, 0.0, FRAC_PI_2);
        assert_eq!(out.frame, Frame::User);
        let angle = out.fy.atan2(out.fx);
        assert!((angle - 120f64.to_radians()).abs() < 1e-12);
        assert!((out.magnitude() - 5.0).abs() < 1e-12);
        let back = transform_force(&out, 0.0, FRAC_PI_2);
        assert!((back.vector() - f.vector()).length() < 1e-12);
        assert_eq!(back.frame, Frame::Target);
    }
}
