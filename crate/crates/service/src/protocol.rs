//! Newline-delimited JSON messages exchanged with clients.

use serde::{Deserialize, Serialize};
use telewalk_core::crowd::Scenario;
use telewalk_core::haptics::{ForceSample, Frame};
use telewalk_core::motion::{GuidanceState, RoomSpec};
use telewalk_core::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Viewer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    Hello {
        role: Role,
        /// viewers receive every n-th state
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decimation: Option<u32>,
    },
    Pose {
        seq: u64,
        t: f64,
        x: f64,
        y: f64,
        heading: f64,
    },
}

/// One tracker measurement in the room frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerSample {
    pub seq: u64,
    pub t: f64,
    pub pose: Pose,
}

impl TrackerSample {
    pub fn message(&self) -> ClientMessage {
        ClientMessage::Pose {
            seq: self.seq,
            t: self.t,
            x: self.pose.x,
            y: self.pose.y,
            heading: self.pose.heading,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseMsg {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl From<Pose> for PoseMsg {
    fn from(p: Pose) -> Self {
        Self {
            x: p.x,
            y: p.y,
            heading: p.heading,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedMsg {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// body radius, m
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceMsg {
    pub fx: f64,
    pub fy: f64,
    pub contact: bool,
    pub frame: Frame,
}

impl From<ForceSample> for ForceMsg {
    fn from(f: ForceSample) -> Self {
        Self {
            fx: f.fx,
            fy: f.fy,
            contact: f.in_contact,
            frame: f.frame,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceMsg {
    pub offset: f64,
    pub cross_track_error: f64,
    pub heading_error: f64,
}

impl From<GuidanceState> for GuidanceMsg {
    fn from(g: GuidanceState) -> Self {
        Self {
            offset: g.injected_offset,
            cross_track_error: g.cross_track_error,
            heading_error: g.heading_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub tick: u64,
    pub t: f64,
    /// tracker sample behind this tick; absent on dropout ticks
    pub seq: Option<u64>,
    pub user: PoseMsg,
    pub avatar: PoseMsg,
    pub displayed_heading: f64,
    pub peds: Vec<PedMsg>,
    pub force: ForceMsg,
    pub guidance: GuidanceMsg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Dropout,
    Clamped,
    Rejected,
    ReplanRequested,
    ReplanApplied,
    ReplanFailed,
    GoalReached,
    GatePassed,
    Connected,
    Disconnected,
    SessionEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMessage {
    pub kind: EventKind,
    /// last processed tick when the event was raised
    pub tick: u64,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested_tick: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applied_before_tick: Option<u64>,
}

impl EventMessage {
    pub fn new(kind: EventKind, tick: u64, detail: impl Into<String>) -> Self {
        Self {
            kind,
            tick,
            detail: detail.into(),
            requested_tick: None,
            applied_before_tick: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigMessage {
    pub scenario: Scenario,
    pub room: RoomSpec,
    pub goals: Vec<[f64; 2]>,
    /// current user path, if one is planned
    pub user_path: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    State(StateMessage),
    Event(EventMessage),
    Config(Box<ConfigMessage>),
}

/// Serializes a message as one protocol line, without the trailing newline.
pub fn encode(msg: &ServerMessage) -> String {
    serde_json::to_string(msg).expect("server messages always serialize")
}
