//! Virtual walker that stands in for a human in headless sessions.

use glam::DVec2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use telewalk_core::geometry::normalize_angle;
use telewalk_core::motion::Correspondence;
use telewalk_core::Pose;

use crate::protocol::TrackerSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParticipantConfig {
    /// room-frame starting pose
    pub start: Pose,
    /// target-frame goal
    pub goal: [f64; 2],
    /// m/s
    pub speed: f64,
    pub heading_noise: f64,
    pub speed_noise: f64,
    /// rad/s
    pub max_turn_rate: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Default for ParticipantConfig {
    fn default() -> Self {
        Self {
            start: Pose::new(2.0, 2.0, 0.0),
            goal: [18.0, 6.0],
            speed: 1.2,
            heading_noise: 2f64.to_radians(),
            speed_noise: 0.05,
            max_turn_rate: 180f64.to_radians(),
            dt: 0.02,
            seed: 7,
        }
    }
}

/// What the walker perceives of the avatar: where it is and which way the
/// display says it faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvatarView {
    pub position: DVec2,
    pub displayed_heading: f64,
}

#[derive(Debug, Clone)]
pub struct ScriptedParticipant {
    config: ParticipantConfig,
    pose: Pose,
    seq: u64,
    t: f64,
    rng: ChaCha8Rng,
    heading_noise: Option<Normal<f64>>,
    speed_noise: Option<Normal<f64>>,
    arrived: bool,
    /// displayed heading seen at the previous step and the turn made then
    last_view: Option<(f64, f64)>,
}

impl ScriptedParticipant {
    pub fn new(config: ParticipantConfig, start: Pose) -> Self {
        let normal = |sigma: f64| (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("positive sigma"));
        Self {
            heading_noise: normal(config.heading_noise),
            speed_noise: normal(config.speed_noise),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            pose: start,
            seq: 0,
            t: 0.0,
            arrived: false,
            last_view: None,
        }
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn arrived(&self) -> bool {
        self.arrived
    }

    pub fn goal(&self) -> DVec2 {
        DVec2::from(self.config.goal)
    }

    /// Current pose as a sample, without moving.
    pub fn sample(&self) -> TrackerSample {
        TrackerSample {
            seq: self.seq,
            t: self.t,
            pose: self.pose,
        }
    }

    /// Walks one step toward the goal as perceived through `view` and
    /// returns the next sample. After arrival the walker stands still.
    pub fn step(&mut self, view: AvatarView) -> TrackerSample {
        let dt = self.config.dt;
        let to_goal = self.goal() - view.position;
        let step_len = self.config.speed * dt;
        if !self.arrived && to_goal.length() <= 0.5 * step_len {
            self.arrived = true;
        }
        if !self.arrived && self.config.speed > 0.0 {
            let bearing = to_goal.y.atan2(to_goal.x);
            let error = normalize_angle(bearing - view.displayed_heading);
            // rotation of the view not caused by our own turning, expected
            // to continue over the next step
            let drift = self
                .last_view
                .map_or(0.0, |(seen, turned)| normalize_angle(view.displayed_heading - seen) - turned);
            let max_turn = self.config.max_turn_rate * dt;
            let turn = (error - drift).clamp(-max_turn, max_turn);
            let mut heading = self.pose.heading + turn;
            if let Some(n) = &self.heading_noise {
                heading += n.sample(&mut self.rng);
            }
            let mut speed = self.config.speed;
            if let Some(n) = &self.speed_noise {
                speed = (speed + n.sample(&mut self.rng)).max(0.0);
            }
            // do not overshoot the goal
            let advance = (speed * dt).min(to_goal.length());
            let heading = normalize_angle(heading);
            self.last_view = Some((view.displayed_heading, normalize_angle(heading - self.pose.heading)));
            let p = self.pose.position() + advance * DVec2::from_angle(heading);
            self.pose = Pose::from_point(p, heading);
        }
        self.seq += 1;
        self.t = self.seq as f64 * dt;
        self.sample()
    }

    /// Open-loop walk through a fixed correspondence with no guidance offset.
    pub fn walk(&mut self, corr: &Correspondence, max_samples: usize) -> Vec<TrackerSample> {
        let mut out = Vec::new();
        let mut s = 0.0;
        while out.len() < max_samples {
            let mapped = corr.map_near(&self.pose, s, 1.0);
            s = mapped.user.s;
            let avatar = mapped.pose;
            if (self.goal() - avatar.position()).length() <= 0.5 * self.config.speed * self.config.dt {
                self.arrived = true;
                break;
            }
            out.push(self.step(AvatarView {
                position: avatar.position(),
                displayed_heading: avatar.heading,
            }));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use telewalk_core::PolyPath;

    fn quiet(goal: [f64; 2], speed: f64) -> ParticipantConfig {
        ParticipantConfig {
            goal,
            speed,
            heading_noise: 0.0,
            speed_noise: 0.0,
            ..ParticipantConfig::default()
        }
    }

    #[test]
    fn straight_ahead_three_metres() {
        let path = PolyPath::straight(Pose::new(1.0, 2.0, 0.0), 0.05, 60).unwrap();
        let corr = Correspondence::identity(path);
        let mut p = ScriptedParticipant::new(quiet([4.0, 2.0], 1.0), Pose::new(1.0, 2.0, 0.0));
        let samples = p.walk(&corr, 1000);
        assert_eq!(samples.len(), 150);
        let last = samples.last().unwrap().pose.position();
        assert!((last - DVec2::new(4.0, 2.0)).length() < 0.05);
    }

    #[test]
    fn zero_speed_holds_pose() {
        let start = Pose::new(1.0, 1.0, 0.3);
        let mut p = ScriptedParticipant::new(quiet([4.0, 2.0], 0.0), start);
        for _ in 0..10 {
            let s = p.step(AvatarView { position: DVec2::new(5.0, 5.0), displayed_heading: 0.0 });
            assert_eq!(s.pose, start);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let path = PolyPath::straight(Pose::new(1.0, 2.0, 0.0), 0.05, 60).unwrap();
        let corr = Correspondence::identity(path);
        let run = || ScriptedParticipant::new(ParticipantConfig { goal: [3.5, 2.0], ..Default::default() }, Pose::new(1.0, 2.0, 0.0)).walk(&corr, 400);
        assert_eq!(run(), run());
    }
}
