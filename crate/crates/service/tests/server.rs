use std::net::SocketAddr;
use std::time::Duration;

use telewalk_core::crowd::Scenario;
use telewalk_service::client::{drive_scripted, Connection};
use telewalk_service::config::SessionConfig;
use telewalk_service::participant::ParticipantConfig;
use telewalk_service::protocol::{ClientMessage, EventKind, Role, ServerMessage};
use telewalk_service::replay::replay;
use telewalk_service::server::{self, ServerHandle};

async fn start(dir: &std::path::Path, spawn_count: usize) -> ServerHandle {
    let mut scenario = Scenario::four_gate_hall();
    scenario.spawn_count = spawn_count;
    let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
    server::start(addr, scenario, SessionConfig::default(), dir.to_path_buf()).await.unwrap()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn scripted_session_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let mut handle = start(dir.path(), 150).await;
    let addr = handle.addr;

    let viewer = tokio::spawn(async move {
        let (mut conn, first) = Connection::open(addr, Role::Viewer, Some(5)).await.unwrap();
        assert!(matches!(first, ServerMessage::Config(_)));
        let mut ticks = Vec::new();
        while let Ok(Some(msg)) = conn.recv().await {
            match msg {
                ServerMessage::State(s) => ticks.push(s.tick),
                ServerMessage::Event(e) if e.kind == EventKind::SessionEnd => break,
                _ => {}
            }
        }
        ticks
    });
    tokio::time::sleep(Duration::from_millis(50)).await;

    let run = drive_scripted(addr, ParticipantConfig::default(), 500).await.unwrap();
    let config = run.config.unwrap();
    assert_eq!(config.scenario.gates.len(), 4);
    assert_eq!(run.states.len(), 500);
    assert!(run.states.iter().enumerate().all(|(i, s)| s.tick == i as u64 + 1 && s.seq == Some(i as u64)));

    let done = tokio::time::timeout(Duration::from_secs(10), handle.next_session()).await.unwrap().unwrap();
    assert_eq!(done.summary.ticks, 500);
    assert_eq!(done.summary.dropouts, 0);
    assert_eq!(done.summary.rejected, 0);
    let report = tokio::task::spawn_blocking(move || replay(&done.dir)).await.unwrap().unwrap();
    assert!(report.passed(), "{report:?}");

    let seen = viewer.await.unwrap();
    assert_eq!(seen, (1..=100).map(|k| 5 * k).collect::<Vec<u64>>());
    handle.shutdown();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn silence_produces_dropout_ticks() {
    let dir = tempfile::tempdir().unwrap();
    let mut handle = start(dir.path(), 0).await;
    let (mut conn, _) = Connection::open(handle.addr, Role::User, None).await.unwrap();
    conn.send(&ClientMessage::Pose { seq: 0, t: 0.0, x: 2.0, y: 2.0, heading: 0.0 }).await.unwrap();
    let mut events = Vec::new();
    let first = conn.next_state(&mut events).await.unwrap();
    assert_eq!(first.seq, Some(0));
    let second = tokio::time::timeout(Duration::from_secs(2), conn.next_state(&mut events)).await.unwrap().unwrap();
    assert_eq!(second.seq, None);
    assert_eq!(second.user, first.user);
    conn.close().await.unwrap();
    let done = tokio::time::timeout(Duration::from_secs(5), handle.next_session()).await.unwrap().unwrap();
    assert!(done.summary.dropouts >= 1);
    let report = tokio::task::spawn_blocking(move || replay(&done.dir)).await.unwrap().unwrap();
    assert!(report.passed(), "{report:?}");
    handle.shutdown();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn protocol_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut handle = start(dir.path(), 0).await;
    let (mut user, _) = Connection::open(handle.addr, Role::User, None).await.unwrap();

    // a second user is turned away
    let (_, reply) = Connection::open(handle.addr, Role::User, None).await.unwrap();
    assert!(matches!(reply, ServerMessage::Event(e) if e.kind == EventKind::Rejected));

    user.send_raw("{not json").await.unwrap();
    user.send(&ClientMessage::Pose { seq: 5, t: 0.1, x: 2.0, y: 2.0, heading: 0.0 }).await.unwrap();
    user.send(&ClientMessage::Pose { seq: 4, t: 0.12, x: 2.0, y: 2.0, heading: 0.0 }).await.unwrap();
    let mut rejected = 0;
    let mut states = 0;
    while rejected < 2 || states < 1 {
        match tokio::time::timeout(Duration::from_secs(2), user.recv()).await.unwrap().unwrap().unwrap() {
            ServerMessage::Event(e) if e.kind == EventKind::Rejected => rejected += 1,
            ServerMessage::State(_) => states += 1,
            _ => {}
        }
    }
    user.close().await.unwrap();
    let done = tokio::time::timeout(Duration::from_secs(5), handle.next_session()).await.unwrap().unwrap();
    assert_eq!(done.summary.rejected, 1);
    handle.shutdown();
}
