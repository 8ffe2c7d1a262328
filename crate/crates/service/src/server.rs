//! TCP server speaking the NDJSON protocol.
//!
//! One task owns the session and runs every tick; connection tasks only parse
//! lines and forward them, and re-planning runs on a plain thread whose result
//! is handed back to the tick task and installed between two ticks.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use telewalk_core::crowd::Scenario;
use telewalk_core::motion::Correspondence;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::Instant;

use crate::config::SessionConfig;
use crate::log::{LogKind, Manifest, SessionLogger};
use crate::protocol::{encode, ClientMessage, ConfigMessage, EventKind, EventMessage, Role, ServerMessage, TrackerSample};
use crate::session::{plan, Session, SessionSummary, TickInput};
use crate::Result;

#[derive(Debug, Clone)]
pub struct CompletedSession {
    pub dir: PathBuf,
    pub summary: SessionSummary,
}

enum Inbound {
    Hello {
        conn: u64,
        role: Role,
        reply: oneshot::Sender<std::result::Result<ConfigMessage, String>>,
    },
    Sample {
        conn: u64,
        sample: TrackerSample,
    },
    Gone {
        conn: u64,
    },
    Planned {
        generation: u64,
        requested_tick: u64,
        result: telewalk_core::Result<Correspondence>,
    },
}

#[derive(Debug, Clone)]
enum Outbound {
    State { tick: u64, line: Arc<str> },
    Event(Arc<str>),
}

pub struct ServerHandle {
    pub addr: SocketAddr,
    completed: mpsc::UnboundedReceiver<CompletedSession>,
    tasks: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    /// Waits for the next user session to end.
    pub async fn next_session(&mut self) -> Option<CompletedSession> {
        self.completed.recv().await
    }

    pub fn shutdown(self) {
        for t in self.tasks {
            t.abort();
        }
    }
}

/// Binds `addr` and starts serving. Session logs go to `out/session-NNN`.
pub async fn start(addr: SocketAddr, scenario: Scenario, config: SessionConfig, out: PathBuf) -> Result<ServerHandle> {
    config.validate()?;
    scenario.validate()?;
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (inbound, rx) = mpsc::unbounded_channel();
    let (bcast, _) = broadcast::channel(1024);
    let (done_tx, completed) = mpsc::unbounded_channel();
    let ticker = TickLoop {
        scenario,
        config,
        out,
        inbound: inbound.clone(),
        bcast: bcast.clone(),
        done: done_tx,
        live: None,
        sessions: 0,
    };
    let tick_task = tokio::spawn(ticker.run(rx));
    let accept_task = tokio::spawn(async move {
        let mut next_id = 0u64;
        loop {
            match listener.accept().await {
                Ok((stream, peer)) => {
                    next_id += 1;
                    if let Err(e) = stream.set_nodelay(true) {
                        tracing::warn!("cannot disable Nagle: {e}");
                    }
                    tracing::info!(%peer, conn = next_id, "client connected");
                    tokio::spawn(connection(stream, next_id, inbound.clone(), bcast.clone()));
                }
                Err(e) => tracing::warn!("accept failed: {e}"),
            }
        }
    });
    Ok(ServerHandle {
        addr,
        completed,
        tasks: vec![tick_task, accept_task],
    })
}

fn event_line(e: &EventMessage) -> String {
    encode(&ServerMessage::Event(e.clone()))
}

async fn write_line(w: &mut tokio::net::tcp::OwnedWriteHalf, line: &str) -> std::io::Result<()> {
    w.write_all(line.as_bytes()).await?;
    w.write_all(b"\n").await
}

async fn connection(stream: TcpStream, conn: u64, inbound: mpsc::UnboundedSender<Inbound>, bcast: broadcast::Sender<Outbound>) {
    let (read, mut write) = stream.into_split();
    let mut lines = BufReader::new(read).lines();
    let reject = |detail: String| event_line(&EventMessage::new(EventKind::Rejected, 0, detail));

    let Ok(Some(first)) = lines.next_line().await else {
        return;
    };
    let (role, decimation) = match serde_json::from_str::<ClientMessage>(&first) {
        Ok(ClientMessage::Hello { role, decimation }) => (role, u64::from(decimation.unwrap_or(1).max(1))),
        _ => {
            let _ = write_line(&mut write, &reject("expected a hello message first".into())).await;
            return;
        }
    };
    // subscribe before the session can start so no tick is missed
    let mut feed = bcast.subscribe();
    let (reply, answer) = oneshot::channel();
    if inbound.send(Inbound::Hello { conn, role, reply }).is_err() {
        return;
    }
    match answer.await {
        Ok(Ok(config)) => {
            if write_line(&mut write, &encode(&ServerMessage::Config(Box::new(config)))).await.is_err() {
                let _ = inbound.send(Inbound::Gone { conn });
                return;
            }
        }
        Ok(Err(reason)) => {
            let _ = write_line(&mut write, &reject(reason)).await;
            return;
        }
        Err(_) => return,
    }

    let (private, mut private_rx) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        loop {
            let line: Arc<str> = tokio::select! {
                Some(line) = private_rx.recv() => line.into(),
                msg = feed.recv() => match msg {
                    Ok(Outbound::State { tick, line }) => {
                        if role == Role::Viewer && tick % decimation != 0 {
                            continue;
                        }
                        line
                    }
                    Ok(Outbound::Event(line)) => line,
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        tracing::warn!(conn, skipped = n, "client lagging");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
                else => break,
            };
            if write_line(&mut write, &line).await.is_err() {
                break;
            }
        }
    });

    while let Ok(Some(line)) = lines.next_line().await {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ClientMessage>(&line) {
            Ok(ClientMessage::Pose { seq, t, x, y, heading }) if role == Role::User => {
                let sample = TrackerSample {
                    seq,
                    t,
                    pose: telewalk_core::Pose { x, y, heading },
                };
                if inbound.send(Inbound::Sample { conn, sample }).is_err() {
                    break;
                }
            }
            Ok(ClientMessage::Pose { .. }) => {
                let _ = private.send(reject("viewers cannot send poses".into()));
            }
            Ok(ClientMessage::Hello { .. }) => {
                let _ = private.send(reject("already greeted".into()));
            }
            Err(e) => {
                let _ = private.send(reject(format!("malformed message: {e}")));
            }
        }
    }
    let _ = inbound.send(Inbound::Gone { conn });
    drop(private);
    writer.abort();
}

struct Live {
    user: u64,
    session: Session,
    logger: SessionLogger,
    generation: u64,
    /// last sample or dropout tick
    last_activity: Instant,
    in_dropout: bool,
}

struct TickLoop {
    scenario: Scenario,
    config: SessionConfig,
    out: PathBuf,
    inbound: mpsc::UnboundedSender<Inbound>,
    bcast: broadcast::Sender<Outbound>,
    done: mpsc::UnboundedSender<CompletedSession>,
    live: Option<Live>,
    sessions: u64,
}

impl TickLoop {
    async fn run(mut self, mut rx: mpsc::UnboundedReceiver<Inbound>) {
        let dropout = Duration::from_secs_f64(self.config.dropout_ms / 1000.0);
        let cadence = Duration::from_secs_f64(self.scenario.dt);
        loop {
            let deadline = self.live.as_ref().filter(|l| l.session.tick_count() > 0).map(|l| {
                l.last_activity + if l.in_dropout { cadence } else { dropout }
            });
            let msg = match deadline {
                Some(d) => match tokio::time::timeout_at(d, rx.recv()).await {
                    Ok(m) => m,
                    Err(_) => {
                        self.dropout_tick();
                        continue;
                    }
                },
                None => rx.recv().await,
            };
            let Some(msg) = msg else { break };
            if let Err(e) = self.handle(msg) {
                tracing::error!("session error: {e:#}");
                self.broadcast_event(&EventMessage::new(EventKind::ReplanFailed, 0, format!("{e:#}")));
            }
        }
    }

    fn broadcast_event(&self, e: &EventMessage) {
        let _ = self.bcast.send(Outbound::Event(event_line(e).into()));
    }

    fn emit(&mut self, e: EventMessage) -> Result<()> {
        if let Some(live) = &mut self.live {
            live.logger.event(&e)?;
        }
        self.broadcast_event(&e);
        Ok(())
    }

    fn config_message(&self) -> ConfigMessage {
        let user_path = self
            .live
            .as_ref()
            .and_then(|l| l.session.correspondence())
            .map(|c| c.user_path().point_pairs())
            .unwrap_or_default();
        ConfigMessage {
            scenario: self.scenario.clone(),
            room: self.config.room,
            goals: self.config.goals.clone(),
            user_path,
        }
    }

    fn handle(&mut self, msg: Inbound) -> Result<()> {
        match msg {
            Inbound::Hello { conn, role, reply } => {
                if role == Role::User {
                    if self.live.is_some() {
                        let _ = reply.send(Err("a user session is already running".into()));
                        return Ok(());
                    }
                    self.open(conn)?;
                }
                let _ = reply.send(Ok(self.config_message()));
                let tick = self.live.as_ref().map_or(0, |l| l.session.tick_count());
                self.emit(EventMessage::new(EventKind::Connected, tick, format!("{role:?} {conn}").to_lowercase()))?;
            }
            Inbound::Sample { conn, sample } => {
                let Some(live) = self.live.as_mut().filter(|l| l.user == conn) else {
                    return Ok(());
                };
                match live.session.ingest(sample) {
                    Ok((accepted, events)) => {
                        for e in events {
                            self.emit(e)?;
                        }
                        self.tick(Some(sample), TickInput::Sample(accepted))?;
                    }
                    Err(reason) => {
                        let tick = live.session.tick_count();
                        self.emit(EventMessage::new(EventKind::Rejected, tick, reason.to_string()))?;
                    }
                }
            }
            Inbound::Gone { conn } => {
                if self.live.as_ref().is_some_and(|l| l.user == conn) {
                    self.close()?;
                } else {
                    self.broadcast_event(&EventMessage::new(EventKind::Disconnected, 0, format!("client {conn}")));
                }
            }
            Inbound::Planned {
                generation,
                requested_tick,
                result,
            } => {
                let Some(live) = self.live.as_mut().filter(|l| l.generation == generation) else {
                    return Ok(());
                };
                let e = live.session.apply_plan(requested_tick, result);
                self.emit(e)?;
            }
        }
        Ok(())
    }

    fn open(&mut self, user: u64) -> Result<()> {
        self.sessions += 1;
        let dir = self.out.join(format!("session-{:03}", self.sessions));
        let manifest = Manifest {
            kind: LogKind::Session,
            scenario: self.scenario.clone(),
            session: Some(self.config.clone()),
            participant: None,
            seed: self.config.crowd_seed,
        };
        self.live = Some(Live {
            user,
            session: Session::new(self.scenario.clone(), self.config.clone())?,
            logger: SessionLogger::create(&dir, &manifest)?,
            generation: self.sessions,
            last_activity: Instant::now(),
            in_dropout: false,
        });
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        let Some(live) = self.live.take() else { return Ok(()) };
        let tick = live.session.tick_count();
        let summary = live.session.summary();
        let mut logger = live.logger;
        for e in [
            EventMessage::new(EventKind::Disconnected, tick, "user"),
            EventMessage::new(EventKind::SessionEnd, tick, ""),
        ] {
            logger.event(&e)?;
            self.broadcast_event(&e);
        }
        let dir = logger.finish(&summary)?;
        tracing::info!(dir = %dir.display(), ticks = summary.ticks, "session finished");
        let _ = self.done.send(CompletedSession { dir, summary });
        Ok(())
    }

    fn dropout_tick(&mut self) {
        if let Some(live) = &mut self.live {
            live.in_dropout = true;
        }
        if let Err(e) = self.tick(None, TickInput::Dropout) {
            tracing::error!("dropout tick failed: {e:#}");
        }
    }

    fn tick(&mut self, raw: Option<TrackerSample>, input: TickInput) -> Result<()> {
        let live = self.live.as_mut().expect("tick without a session");
        live.last_activity = Instant::now();
        if raw.is_some() {
            live.in_dropout = false;
        }
        let out = live.session.tick(input)?;
        let line: Arc<str> = encode(&ServerMessage::State(out.state.clone())).into();
        live.logger.tick(raw, &out, &line, live.session.world())?;
        let _ = self.bcast.send(Outbound::State {
            tick: out.state.tick,
            line,
        });
        for e in &out.events {
            let _ = self.bcast.send(Outbound::Event(event_line(e).into()));
        }
        if let Some(request) = out.replan {
            let config = live.session.config().clone();
            let inbound = self.inbound.clone();
            let generation = live.generation;
            std::thread::spawn(move || {
                let result = plan(&config, &request);
                let _ = inbound.send(Inbound::Planned {
                    generation,
                    requested_tick: request.requested_tick,
                    result,
                });
            });
        }
        Ok(())
    }
}
