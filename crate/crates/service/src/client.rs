//! Scripted participant speaking the wire protocol, for driving `serve`
//! without a UI.

use std::net::SocketAddr;

use glam::DVec2;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpStream;

use crate::participant::{AvatarView, ParticipantConfig, ScriptedParticipant};
use crate::protocol::{ClientMessage, ConfigMessage, EventMessage, Role, ServerMessage, StateMessage};
use crate::Result;

#[derive(Debug, Clone, Default)]
pub struct ClientRun {
    pub config: Option<ConfigMessage>,
    pub states: Vec<StateMessage>,
    pub events: Vec<EventMessage>,
}

pub struct Connection {
    lines: tokio::io::Lines<BufReader<tokio::net::tcp::OwnedReadHalf>>,
    write: tokio::net::tcp::OwnedWriteHalf,
}

impl Connection {
    pub async fn open(addr: SocketAddr, role: Role, decimation: Option<u32>) -> Result<(Self, ServerMessage)> {
        let stream = TcpStream::connect(addr).await?;
        stream.set_nodelay(true)?;
        let (read, write) = stream.into_split();
        let mut conn = Self {
            lines: BufReader::new(read).lines(),
            write,
        };
        conn.send(&ClientMessage::Hello { role, decimation }).await?;
        let first = conn
            .recv()
            .await?
            .ok_or_else(|| anyhow::anyhow!("server closed the connection during the handshake"))?;
        Ok((conn, first))
    }

    pub async fn send(&mut self, msg: &ClientMessage) -> Result<()> {
        let mut line = serde_json::to_string(msg)?;
        line.push('\n');
        self.write.write_all(line.as_bytes()).await?;
        Ok(())
    }

    pub async fn send_raw(&mut self, line: &str) -> Result<()> {
        self.write.write_all(line.as_bytes()).await?;
        self.write.write_all(b"\n").await?;
        Ok(())
    }

    /// Next server message, or `None` once the server hangs up.
    pub async fn recv(&mut self) -> Result<Option<ServerMessage>> {
        match self.lines.next_line().await? {
            Some(line) => Ok(Some(serde_json::from_str(&line)?)),
            None => Ok(None),
        }
    }

    /// Reads until the next state message, collecting events on the way.
    pub async fn next_state(&mut self, events: &mut Vec<EventMessage>) -> Result<StateMessage> {
        loop {
            match self.recv().await? {
                Some(ServerMessage::State(s)) => return Ok(s),
                Some(ServerMessage::Event(e)) => events.push(e),
                Some(ServerMessage::Config(_)) => {}
                None => anyhow::bail!("server closed the connection"),
            }
        }
    }

    pub async fn close(mut self) -> Result<()> {
        self.write.shutdown().await?;
        Ok(())
    }
}

/// Connects as the user and walks in lock step: send a sample, wait for the
/// state it produced, steer by what that state shows. Sends exactly
/// `samples` samples (an arrived walker stands still), then disconnects.
pub async fn drive_scripted(addr: SocketAddr, participant: ParticipantConfig, samples: usize) -> Result<ClientRun> {
    let (mut conn, first) = Connection::open(addr, Role::User, None).await?;
    let mut run = ClientRun::default();
    match first {
        ServerMessage::Config(c) => run.config = Some(*c),
        other => anyhow::bail!("expected a config message, got {other:?}"),
    }
    let mut walker = ScriptedParticipant::new(participant, participant.start);
    let mut sample = walker.sample();
    for i in 0..samples {
        conn.send(&sample.message()).await?;
        let state = conn.next_state(&mut run.events).await?;
        let view = AvatarView {
            position: DVec2::new(state.avatar.x, state.avatar.y),
            displayed_heading: state.displayed_heading,
        };
        run.states.push(state);
        if i + 1 == samples {
            break;
        }
        sample = walker.step(view);
    }
    conn.close().await?;
    Ok(run)
}
