//! Re-feeds a session log through the pipeline and compares broadcasts.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::log::{read_json, read_jsonl, read_lines, LogKind, Manifest, TickRecord};
use crate::protocol::{encode, EventKind, EventMessage, ServerMessage};
use crate::session::{plan, Session, TickInput};
use crate::trial;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub kind: LogKind,
    /// ticks (sessions) or trajectory rows (trials) compared
    pub compared: usize,
    pub mismatches: usize,
    pub first_mismatch: Option<u64>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.compared > 0
    }
}

pub fn replay(dir: &Path) -> Result<ReplayReport> {
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    match manifest.kind {
        LogKind::Session => replay_session(dir, manifest),
        LogKind::Trial => trial::verify_trial(dir, &manifest),
    }
}

fn replay_session(dir: &Path, manifest: Manifest) -> Result<ReplayReport> {
    let config = manifest
        .session
        .ok_or_else(|| anyhow::anyhow!("session manifest has no session config"))?;
    let ticks: Vec<TickRecord> = read_jsonl(&dir.join("ticks.jsonl"))?;
    let broadcast = read_lines(&dir.join("broadcast.jsonl"))?;
    let events: Vec<EventMessage> = read_jsonl(&dir.join("events.jsonl"))?;
    if broadcast.len() != ticks.len() {
        anyhow::bail!("log has {} ticks but {} broadcasts", ticks.len(), broadcast.len());
    }

    // replans keyed by the tick they were installed before
    let mut applies: HashMap<u64, Vec<u64>> = HashMap::new();
    for e in &events {
        if matches!(e.kind, EventKind::ReplanApplied | EventKind::ReplanFailed) {
            if let (Some(r), Some(a)) = (e.requested_tick, e.applied_before_tick) {
                applies.entry(a).or_default().push(r);
            }
        }
    }

    let mut session = Session::new(manifest.scenario, config.clone())?;
    let mut requests = HashMap::new();
    let mut mismatches = 0;
    let mut first_mismatch = None;
    for (record, logged) in ticks.iter().zip(&broadcast) {
        for requested in applies.remove(&record.tick).unwrap_or_default() {
            let request = requests
                .remove(&requested)
                .ok_or_else(|| anyhow::anyhow!("replan requested at tick {requested} was never raised"))?;
            session.apply_plan(requested, plan(&config, &request));
        }
        let input = match record.sample {
            Some(sample) => {
                let (accepted, _) = session
                    .ingest(sample)
                    .map_err(|e| anyhow::anyhow!("logged sample rejected on replay: {e}"))?;
                TickInput::Sample(accepted)
            }
            None => TickInput::Dropout,
        };
        let out = session.tick(input)?;
        if let Some(request) = out.replan {
            requests.insert(request.requested_tick, request);
        }
        let line = encode(&ServerMessage::State(out.state));
        if line != *logged {
            mismatches += 1;
            first_mismatch.get_or_insert(record.tick);
        }
    }
    Ok(ReplayReport {
        kind: LogKind::Session,
        compared: ticks.len(),
        mismatches,
        first_mismatch,
    })
}
