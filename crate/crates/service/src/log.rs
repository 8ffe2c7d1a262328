//! Session and trial log directories.
//!
//! A session directory holds `manifest.json`, `ticks.jsonl`,
//! `broadcast.jsonl` (state lines exactly as sent), `events.jsonl`,
//! `trajectory.csv` and `summary.json`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use telewalk_core::crowd::{trajectory_rows, Scenario, World};
use telewalk_core::haptics::ForceSample;
use telewalk_core::motion::GuidanceState;

use crate::config::SessionConfig;
use crate::participant::ParticipantConfig;
use crate::protocol::{EventMessage, PoseMsg, TrackerSample};
use crate::session::{SessionSummary, TickOutput};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogKind {
    Session,
    Trial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: LogKind,
    pub scenario: Scenario,
    #[serde(default)]
    pub session: Option<SessionConfig>,
    #[serde(default)]
    pub participant: Option<ParticipantConfig>,
    /// trial seed; sessions use `session.crowd_seed`
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub t: f64,
    /// the sample as received, before clamping; `None` on dropout ticks
    pub sample: Option<TrackerSample>,
    pub user: PoseMsg,
    pub avatar: PoseMsg,
    pub displayed_heading: f64,
    pub guidance: GuidanceState,
    pub force_target: ForceSample,
    pub force_user: ForceSample,
}

fn jsonl(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let f = File::open(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    Ok(BufReader::new(f).lines().collect::<std::io::Result<_>>()?)
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    read_lines(path)?
        .iter()
        .filter(|l| !l.is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

pub struct SessionLogger {
    dir: PathBuf,
    ticks: BufWriter<File>,
    broadcast: BufWriter<File>,
    events: BufWriter<File>,
    trajectory: csv::Writer<BufWriter<File>>,
    every: u64,
}

impl SessionLogger {
    pub fn create(dir: &Path, manifest: &Manifest) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("manifest.json"), manifest)?;
        let every = manifest.session.as_ref().map_or(5, |s| s.trajectory_every);
        Ok(Self {
            dir: dir.to_path_buf(),
            ticks: jsonl(&dir.join("ticks.jsonl"))?,
            broadcast: jsonl(&dir.join("broadcast.jsonl"))?,
            events: jsonl(&dir.join("events.jsonl"))?,
            trajectory: csv::Writer::from_writer(BufWriter::new(File::create(dir.join("trajectory.csv"))?)),
            every,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn tick(&mut self, sample: Option<TrackerSample>, out: &TickOutput, line: &str, world: &World) -> Result<()> {
        let record = TickRecord {
            tick: out.state.tick,
            t: out.state.t,
            sample,
            user: out.state.user,
            avatar: out.state.avatar,
            displayed_heading: out.state.displayed_heading,
            guidance: GuidanceState {
                cross_track_error: out.state.guidance.cross_track_error,
                heading_error: out.state.guidance.heading_error,
                injected_offset: out.state.guidance.offset,
            },
            force_target: out.force_target,
            force_user: out.force_user,
        };
        serde_json::to_writer(&mut self.ticks, &record)?;
        self.ticks.write_all(b"\n")?;
        self.broadcast.write_all(line.as_bytes())?;
        self.broadcast.write_all(b"\n")?;
        for e in &out.events {
            self.event(e)?;
        }
        if out.state.tick % self.every == 0 {
            for row in trajectory_rows(world) {
                self.trajectory.serialize(row)?;
            }
        }
        Ok(())
    }

    pub fn event(&mut self, e: &EventMessage) -> Result<()> {
        serde_json::to_writer(&mut self.events, e)?;
        self.events.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self, summary: &SessionSummary) -> Result<PathBuf> {
        self.ticks.flush()?;
        self.broadcast.flush()?;
        self.events.flush()?;
        self.trajectory.flush()?;
        write_json(&self.dir.join("summary.json"), summary)?;
        Ok(self.dir)
    }
}
