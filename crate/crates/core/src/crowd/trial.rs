use std::io::Write;

use serde::{Deserialize, Serialize};

use super::world::{PedState, World, AVATAR_ID};
use super::{GateChoiceParams, Scenario};
use crate::Result;

/// Outcome for one simulated pedestrian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianRecord {
    pub id: u64,
    pub gate: u32,
    /// spawn to exit, seconds; `None` if still walking at the time cap
    pub completion_time: Option<f64>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub pedestrians: Vec<PedestrianRecord>,
    /// pedestrians assigned to each gate, in scenario gate order
    pub gate_counts: Vec<usize>,
    /// mean completion time per gate; `None` if nobody finished through it
    pub gate_costs: Vec<Option<f64>>,
    pub duration: f64,
    /// the time cap was hit with pedestrians still walking or unspawned
    pub incomplete: bool,
}

impl TrialMetrics {
    pub fn from_world(world: &World) -> Self {
        let gates = world.scenario.gates.len();
        let mut gate_counts = vec![0usize; gates];
        let mut sums = vec![(0.0, 0usize); gates];
        let mut pedestrians = Vec::new();
        for p in &world.pedestrians {
            if p.fixed_goal.is_some() {
                continue;
            }
            gate_counts[p.gate] += 1;
            let completion_time = p.exit_time.map(|t| t - p.spawn_time);
            if let Some(c) = completion_time {
                sums[p.gate].0 += c;
                sums[p.gate].1 += 1;
            }
            pedestrians.push(PedestrianRecord {
                id: p.id,
                gate: world.scenario.gates[p.gate].id,
                completion_time,
                distance: p.distance,
            });
        }
        let gate_costs = sums
            .iter()
            .map(|&(s, n)| (n > 0).then(|| s / n as f64))
            .collect();
        Self {
            pedestrians,
            gate_counts,
            gate_costs,
            duration: world.t,
            incomplete: !world.finished(),
        }
    }

    /// Share of pedestrians per gate.
    pub fn gate_distribution(&self) -> Vec<f64> {
        let total: usize = self.gate_counts.iter().sum();
        self.gate_counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect()
    }
}

/// One row of the trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub id: u64,
    pub kind: String,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub gate: Option<u32>,
    pub state: PedState,
}

pub fn trajectory_rows(world: &World) -> Vec<TrajectoryRow> {
    let mut rows: Vec<TrajectoryRow> = world
        .walking()
        .map(|p| TrajectoryRow {
            t: world.t,
            id: p.id,
            kind: "ped".into(),
            x: p.position.x,
            y: p.position.y,
            vx: p.velocity.x,
            vy: p.velocity.y,
            gate: p.fixed_goal.is_none().then(|| world.scenario.gates[p.gate].id),
            state: p.state,
        })
        .collect();
    if let Some(a) = &world.avatar {
        rows.push(TrajectoryRow {
            t: world.t,
            id: AVATAR_ID,
            kind: "avatar".into(),
            x: a.position.x,
            y: a.position.y,
            vx: a.velocity.x,
            vy: a.velocity.y,
            gate: None,
            state: PedState::Walking,
        });
    }
    rows
}

/// Runs a crowd-only trial until everyone has exited or the time cap.
pub fn run_trial(
    scenario: &Scenario,
    params: &GateChoiceParams,
    costs: &[f64],
    seed: u64,
) -> Result<TrialMetrics> {
    run_trial_logged::<std::io::Sink>(scenario, params, costs, seed, "grid", None)
}

/// [`run_trial`] with a choice of neighbor search and an optional trajectory
/// CSV sink.
pub fn run_trial_logged<W: Write>(
    scenario: &Scenario,
    params: &GateChoiceParams,
    costs: &[f64],
    seed: u64,
    search: &str,
    mut trajectory: Option<&mut csv::Writer<W>>,
) -> Result<TrialMetrics> {
    let mut world = World::new(scenario.clone(), *params, costs, seed, search)?;
    let cap_ticks = (scenario.time_cap / scenario.dt).round() as u64;
    let every = u64::from(scenario.trajectory_every);
    while !world.finished() && world.tick < cap_ticks {
        world.step()?;
        if let Some(w) = trajectory.as_deref_mut() {
            if world.tick % every == 0 {
                for row in trajectory_rows(&world) {
                    w.serialize(row)?;
                }
            }
        }
    }
    if let Some(w) = trajectory {
        w.flush()?;
    }
    Ok(TrialMetrics::from_world(&world))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_pedestrians_gives_empty_metrics() {
        let mut s = Scenario::four_gate_hall();
        s.spawn_count = 0;
        let m = run_trial(&s, &GateChoiceParams::default(), &[0.0; 4], 1).unwrap();
        assert!(m.pedestrians.is_empty());
        assert_eq!(m.gate_counts, vec![0; 4]);
        assert_eq!(m.duration, 0.0);
        assert!(!m.incomplete);
    }

    #[test]
    fn time_cap_flags_incomplete() {
        let mut s = Scenario::four_gate_hall();
        s.spawn_count = 5;
        s.time_cap = 1.0;
        let m = run_trial(&s, &GateChoiceParams::default(), &[0.0; 4], 1).unwrap();
        assert!(m.incomplete);
        assert!(m.pedestrians.iter().all(|p| p.completion_time.is_none()));
    }
}
