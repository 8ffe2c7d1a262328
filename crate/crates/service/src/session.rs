//! One telepresence session: tracker ingest and the per-tick pipeline
//! map → guide → crowd step → force → broadcast.

use glam::DVec2;
use telewalk_core::crowd::{Avatar, Scenario, World};
use telewalk_core::haptics::{avatar_force, transform_force, ForceSample};
use telewalk_core::motion::{
    guidance_from_projection, predictor_registry, transform_path, Correspondence, GuidanceState, PredictorConfig,
};
use telewalk_core::Pose;
use thiserror::Error;

use crate::config::SessionConfig;
use crate::protocol::{
    EventKind, EventMessage, GuidanceMsg, PedMsg, StateMessage, TrackerSample,
};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Rejection {
    #[error("sequence {seq} does not follow {last}")]
    OutOfOrder { seq: u64, last: u64 },
    #[error("time {t} precedes {last}")]
    TimeRegression { t: f64, last: f64 },
    #[error("pose is not finite")]
    NonFinite,
}

/// What drives one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TickInput {
    Sample(TrackerSample),
    /// no sample arrived in time; reuse the last pose
    Dropout,
}

/// Inputs of a re-plan, captured when it was requested.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplanRequest {
    pub requested_tick: u64,
    pub avatar: Pose,
    pub user: Pose,
    pub goals: Vec<DVec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub state: StateMessage,
    pub force_target: ForceSample,
    pub force_user: ForceSample,
    pub events: Vec<EventMessage>,
    pub replan: Option<ReplanRequest>,
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SessionSummary {
    pub ticks: u64,
    pub dropouts: u64,
    pub rejected: u64,
    pub replans: u64,
    pub completion_time: Option<f64>,
    pub covered_distance: f64,
    pub chosen_gate: Option<u32>,
}

/// Plans a new correspondence. Pure, so it can run on any thread.
pub fn plan(config: &SessionConfig, request: &ReplanRequest) -> telewalk_core::Result<Correspondence> {
    let predictor = predictor_registry().create(
        &config.motion.predictor,
        &PredictorConfig {
            goal_window: config.motion.goal_window,
        },
    )?;
    let target = predictor.predict(&request.avatar, &request.goals, config.motion.horizon, config.motion.ds)?;
    transform_path(&target, &config.room, request.user, &config.motion.transform)
}

fn segment_crossing(p0: DVec2, p1: DVec2, a: DVec2, b: DVec2) -> bool {
    let o1 = (p1 - p0).perp_dot(a - p0);
    let o2 = (p1 - p0).perp_dot(b - p0);
    let o3 = (b - a).perp_dot(p0 - a);
    let o4 = (b - a).perp_dot(p1 - a);
    o1 * o2 <= 0.0 && o3 * o4 < 0.0
}

pub struct Session {
    config: SessionConfig,
    world: World,
    corr: Option<Correspondence>,
    /// arc length of the walker on the current user path, last tick
    track_s: f64,
    guidance: GuidanceState,
    goals: Vec<DVec2>,
    avatar: Pose,
    user: Option<Pose>,
    last_seq: Option<u64>,
    last_t: Option<f64>,
    tick: u64,
    pending_replan: bool,
    last_replan_tick: u64,
    summary: SessionSummary,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("tick", &self.tick)
            .field("avatar", &self.avatar)
            .field("user", &self.user)
            .finish()
    }
}

impl Session {
    pub fn new(scenario: Scenario, config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let costs = vec![0.0; scenario.gates.len()];
        let choice = scenario.gate_choice;
        let mut world = World::new(scenario, choice, &costs, config.crowd_seed, &config.neighbor_search)?;
        world.set_avatar(Some(Avatar {
            position: config.avatar_start.position(),
            velocity: DVec2::ZERO,
            heading: config.avatar_start.heading,
            radius: config.avatar_radius,
        }));
        Ok(Self {
            goals: config.goal_points(),
            avatar: config.avatar_start,
            world,
            corr: None,
            track_s: 0.0,
            guidance: GuidanceState::default(),
            user: None,
            last_seq: None,
            last_t: None,
            tick: 0,
            pending_replan: false,
            last_replan_tick: 0,
            summary: SessionSummary::default(),
            config,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    /// For staging scenes, e.g. placing pedestrians by hand.
    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn correspondence(&self) -> Option<&Correspondence> {
        self.corr.as_ref()
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn avatar(&self) -> Pose {
        self.avatar
    }

    pub fn replan_pending(&self) -> bool {
        self.pending_replan
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            ticks: self.tick,
            ..self.summary.clone()
        }
    }

    /// Validates a sample and clamps it into the walkable rectangle.
    pub fn ingest(&mut self, sample: TrackerSample) -> std::result::Result<(TrackerSample, Vec<EventMessage>), Rejection> {
        let mut events = Vec::new();
        if !sample.pose.is_finite() || !sample.t.is_finite() {
            self.summary.rejected += 1;
            return Err(Rejection::NonFinite);
        }
        if let Some(last) = self.last_seq {
            if sample.seq <= last {
                self.summary.rejected += 1;
                return Err(Rejection::OutOfOrder { seq: sample.seq, last });
            }
        }
        if let Some(last) = self.last_t {
            if sample.t < last {
                self.summary.rejected += 1;
                return Err(Rejection::TimeRegression { t: sample.t, last });
            }
            if (sample.t - last) * 1000.0 > self.config.dropout_ms {
                events.push(EventMessage::new(
                    EventKind::Dropout,
                    self.tick,
                    format!("tracker gap of {:.3} s before seq {}", sample.t - last, sample.seq),
                ));
            }
        }
        self.last_seq = Some(sample.seq);
        self.last_t = Some(sample.t);
        let mut accepted = sample;
        let p = sample.pose.position();
        if !self.config.room.contains(p) {
            let c = self.config.room.clamp(p);
            accepted.pose = Pose::from_point(c, sample.pose.heading);
            events.push(EventMessage::new(
                EventKind::Clamped,
                self.tick,
                format!("pose ({:.3}, {:.3}) clamped to ({:.3}, {:.3})", p.x, p.y, c.x, c.y),
            ));
        }
        Ok((accepted, events))
    }

    /// Installs a planned correspondence between ticks.
    pub fn apply_plan(
        &mut self,
        requested_tick: u64,
        result: telewalk_core::Result<Correspondence>,
    ) -> EventMessage {
        self.pending_replan = false;
        let mut event = match result {
            Ok(corr) => {
                self.corr = Some(corr);
                self.track_s = 0.0;
                self.summary.replans += 1;
                EventMessage::new(EventKind::ReplanApplied, self.tick, "")
            }
            Err(e) => EventMessage::new(EventKind::ReplanFailed, self.tick, e.to_string()),
        };
        event.requested_tick = Some(requested_tick);
        event.applied_before_tick = Some(self.tick + 1);
        event
    }

    fn request(&self, user: Pose) -> ReplanRequest {
        ReplanRequest {
            requested_tick: self.tick,
            avatar: self.avatar,
            user,
            goals: self.goals.clone(),
        }
    }

    /// Runs one tick. A sample must have gone through [`Session::ingest`].
    pub fn tick(&mut self, input: TickInput) -> Result<TickOutput> {
        let mut events = Vec::new();
        let (user, seq) = match input {
            TickInput::Sample(s) => (s.pose, Some(s.seq)),
            TickInput::Dropout => {
                let Some(u) = self.user else {
                    anyhow::bail!("dropout before the first tracker sample");
                };
                self.summary.dropouts += 1;
                events.push(EventMessage::new(EventKind::Dropout, self.tick, "no tracker sample, holding last pose"));
                (u, None)
            }
        };
        if self.corr.is_none() {
            let corr = plan(&self.config, &self.request(user))?;
            self.corr = Some(corr);
            self.track_s = 0.0;
            self.last_replan_tick = self.tick;
        }
        let corr = self.corr.as_ref().expect("planned above");
        let dt = self.world.scenario.dt;

        // (1) map the user pose into the target environment
        let mapped = corr.map_near(&user, self.track_s, self.config.motion.track_window);
        self.track_s = mapped.user.s;
        let previous = self.avatar;
        self.avatar = Pose::new(mapped.pose.x, mapped.pose.y, mapped.pose.heading);
        // (2) guidance
        self.guidance =
            guidance_from_projection(user.heading, &mapped.user, &self.guidance, dt, &self.config.motion.guidance);
        let displayed_heading = self.guidance.displayed_heading(self.avatar.heading);
        // (3) crowd step with the avatar as a kinematic body
        let velocity = (self.avatar.position() - previous.position()) / dt;
        self.world.set_avatar(Some(Avatar {
            position: self.avatar.position(),
            velocity,
            heading: self.avatar.heading,
            radius: self.config.avatar_radius,
        }));
        self.world.step()?;
        self.tick += 1;
        // (4) force on the avatar, carried into the user frame
        let force_target = avatar_force(&self.world, &self.config.haptics);
        let force_user = transform_force(&force_target, mapped.target_tangent, mapped.user.tangent);

        let step = self.avatar.position() - previous.position();
        self.summary.covered_distance += step.length();
        for gate in &self.world.scenario.gates {
            if segment_crossing(previous.position(), self.avatar.position(), gate.a(), gate.b()) {
                if self.summary.chosen_gate.is_none() {
                    self.summary.chosen_gate = Some(gate.id);
                }
                events.push(EventMessage::new(EventKind::GatePassed, self.tick, format!("gate {}", gate.id)));
            }
        }
        let here = self.avatar.position();
        let before = self.goals.len();
        let radius = self.config.goal_radius;
        self.goals.retain(|g| (*g - here).length() > radius);
        if self.goals.len() < before {
            events.push(EventMessage::new(EventKind::GoalReached, self.tick, format!("at t = {:.2} s", self.world.t)));
            if self.goals.is_empty() && self.summary.completion_time.is_none() {
                self.summary.completion_time = Some(self.world.t);
            }
        }
        self.user = Some(user);

        // (5) snapshot
        let state = StateMessage {
            tick: self.tick,
            t: self.world.t,
            seq,
            user: user.into(),
            avatar: self.avatar.into(),
            displayed_heading,
            peds: self
                .world
                .walking()
                .map(|p| PedMsg {
                    id: p.id,
                    x: p.position.x,
                    y: p.position.y,
                    vx: p.velocity.x,
                    vy: p.velocity.y,
                    r: p.radius,
                })
                .collect(),
            force: force_user.into(),
            guidance: GuidanceMsg::from(self.guidance),
        };

        // re-plan triggers, evaluated on this tick's projection
        let mut replan = None;
        let consumed = mapped.user.s / corr.length();
        let strayed = mapped.user.d.abs() > self.config.motion.replan_deviation;
        if !self.pending_replan
            && self.tick >= self.last_replan_tick + self.config.replan_min_ticks
            && (consumed > self.config.motion.replan_consumed || strayed)
        {
            let request = self.request(user);
            let mut e = EventMessage::new(
                EventKind::ReplanRequested,
                self.tick,
                format!("consumed {:.2}, offset {:.3} m", consumed, mapped.user.d),
            );
            e.requested_tick = Some(self.tick);
            events.push(e);
            self.pending_replan = true;
            self.last_replan_tick = self.tick;
            replan = Some(request);
        }
        Ok(TickOutput {
            state,
            force_target,
            force_user,
            events,
            replan,
        })
    }
}
