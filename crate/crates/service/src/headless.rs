//! In-process session driven by the scripted participant.

use std::path::{Path, PathBuf};

use telewalk_core::crowd::Scenario;

use crate::config::SessionConfig;
use crate::log::{LogKind, Manifest, SessionLogger};
use crate::participant::{AvatarView, ParticipantConfig, ScriptedParticipant};
use crate::protocol::{encode, EventKind, EventMessage, ServerMessage};
use crate::session::{plan, Session, SessionSummary, TickInput};
use crate::Result;

#[derive(Debug, Clone)]
pub struct HeadlessOutcome {
    pub dir: PathBuf,
    pub summary: SessionSummary,
    pub samples: usize,
    /// the scripted walker reached its own goal point
    pub arrived: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadlessOptions {
    pub max_samples: usize,
    /// end the stream once the last goal is reached or the walker arrives;
    /// otherwise an arrived walker keeps standing until `max_samples`
    pub stop_when_done: bool,
}

impl HeadlessOptions {
    pub fn until_done(max_samples: usize) -> Self {
        Self {
            max_samples,
            stop_when_done: true,
        }
    }

    pub fn exactly(samples: usize) -> Self {
        Self {
            max_samples: samples,
            stop_when_done: false,
        }
    }
}

/// Streams samples through a session, re-planning inline so the next tick
/// already sees the new correspondence.
pub fn run_scripted(
    scenario: Scenario,
    config: SessionConfig,
    participant: ParticipantConfig,
    options: HeadlessOptions,
    dir: &Path,
) -> Result<HeadlessOutcome> {
    let max_samples = options.max_samples;
    let manifest = Manifest {
        kind: LogKind::Session,
        scenario: scenario.clone(),
        session: Some(config.clone()),
        participant: Some(participant),
        seed: config.crowd_seed,
    };
    let mut logger = SessionLogger::create(dir, &manifest)?;
    let mut session = Session::new(scenario, config.clone())?;
    let mut walker = ScriptedParticipant::new(participant, participant.start);
    let mut sample = walker.sample();
    let mut samples = 0;
    while samples < max_samples {
        samples += 1;
        let (accepted, events) = session
            .ingest(sample)
            .map_err(|e| anyhow::anyhow!("scripted sample rejected: {e}"))?;
        for e in &events {
            logger.event(e)?;
        }
        let out = match session.tick(TickInput::Sample(accepted)) {
            Ok(out) => out,
            Err(e) => {
                logger.event(&EventMessage::new(EventKind::ReplanFailed, session.tick_count(), e.to_string()))?;
                logger.finish(&session.summary())?;
                return Err(e.context("scripted session aborted"));
            }
        };
        let line = encode(&ServerMessage::State(out.state.clone()));
        logger.tick(Some(sample), &out, &line, session.world())?;
        if let Some(request) = &out.replan {
            let applied = session.apply_plan(request.requested_tick, plan(&config, request));
            logger.event(&applied)?;
        }
        let completed = out.events.iter().any(|e| e.kind == EventKind::GoalReached) && session.summary().completion_time.is_some();
        if samples == max_samples || (options.stop_when_done && completed) {
            break;
        }
        sample = walker.step(AvatarView {
            position: glam::DVec2::new(out.state.avatar.x, out.state.avatar.y),
            displayed_heading: out.state.displayed_heading,
        });
        if options.stop_when_done && walker.arrived() {
            break;
        }
    }
    let summary = session.summary();
    logger.event(&EventMessage::new(EventKind::SessionEnd, session.tick_count(), ""))?;
    let dir = logger.finish(&summary)?;
    Ok(HeadlessOutcome {
        dir,
        summary,
        samples,
        arrived: walker.arrived(),
    })
}
