use glam::DVec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forces::{driving_force, pair_force, wall_force, Body};
use super::neighbors::{neighbor_registry, NeighborSearch};
use super::{choose_gate, GateChoiceParams, Scenario};
use crate::geometry::perp;
use crate::{Error, Result};

/// Id reserved for the user's avatar.
pub const AVATAR_ID: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PedState {
    Walking,
    Exited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pedestrian {
    pub id: u64,
    pub position: DVec2,
    pub velocity: DVec2,
    pub radius: f64,
    pub mass: f64,
    pub desired_speed: f64,
    pub tau: f64,
    /// index into the scenario's gate list
    pub gate: usize,
    pub state: PedState,
    pub passed_gate: bool,
    /// Replaces gate and goal routing when set; such pedestrians never exit.
    pub fixed_goal: Option<DVec2>,
    pub spawn_time: f64,
    pub exit_time: Option<f64>,
    pub distance: f64,
}

impl Pedestrian {
    pub fn body(&self) -> Body {
        Body {
            id: self.id,
            position: self.position,
            velocity: self.velocity,
            radius: self.radius,
        }
    }

    pub fn is_walking(&self) -> bool {
        self.state == PedState::Walking
    }
}

/// The user's embodiment: moved by the tracker, never by forces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Avatar {
    pub position: DVec2,
    pub velocity: DVec2,
    pub heading: f64,
    pub radius: f64,
}

impl Avatar {
    pub fn body(&self) -> Body {
        Body {
            id: AVATAR_ID,
            position: self.position,
            velocity: self.velocity,
            radius: self.radius,
        }
    }
}

/// The other party in a pairwise interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partner {
    Pedestrian(u64),
    Wall(usize),
    Avatar,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepDiagnostics {
    pub tick: u64,
    pub t: f64,
    /// ids of walking pedestrians overlapping a pedestrian, wall or the avatar
    pub contacts: Vec<u64>,
    /// pairs whose centres coincided and used the fallback normal
    pub coincident: Vec<(u64, Partner)>,
    pub spawned: Vec<u64>,
    pub exited: Vec<u64>,
    /// total force per pedestrian index, zero for inactive ones
    pub forces: Vec<DVec2>,
    pub max_displacement: f64,
    /// a displacement exceeded half the smallest radius
    pub tunneling: bool,
}

pub struct World {
    pub scenario: Scenario,
    pub pedestrians: Vec<Pedestrian>,
    pub avatar: Option<Avatar>,
    pub t: f64,
    pub tick: u64,
    choice: GateChoiceParams,
    costs: Vec<f64>,
    rng: ChaCha8Rng,
    search: Box<dyn NeighborSearch>,
    spawned: usize,
    spawn_credit: f64,
    cutoff: f64,
    min_radius: f64,
    scratch: Vec<usize>,
}

impl std::fmt::Debug for World {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("World")
            .field("t", &self.t)
            .field("tick", &self.tick)
            .field("pedestrians", &self.pedestrians.len())
            .field("search", &self.search.name())
            .finish()
    }
}

impl World {
    /// `costs` are the anticipated per-gate costs fed to gate choice.
    pub fn new(
        scenario: Scenario,
        choice: GateChoiceParams,
        costs: &[f64],
        seed: u64,
        search: &str,
    ) -> Result<Self> {
        scenario.validate()?;
        choice.validate()?;
        if costs.len() != scenario.gates.len() {
            return Err(Error::GateMismatch {
                observed: costs.len(),
                simulated: scenario.gates.len(),
            });
        }
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid("anticipated costs must be finite and non-negative"));
        }
        let search = neighbor_registry().create(search, &())?;
        let max_radius = scenario.params.radius[1].max(0.5);
        let cutoff = scenario.params.cutoff_distance(max_radius);
        let min_radius = scenario.params.radius[0];
        Ok(Self {
            pedestrians: Vec::new(),
            avatar: None,
            t: 0.0,
            tick: 0,
            choice,
            costs: costs.to_vec(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            search,
            spawned: 0,
            spawn_credit: 0.0,
            cutoff,
            min_radius,
            scratch: Vec::new(),
            scenario,
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn search_name(&self) -> &'static str {
        self.search.name()
    }

    pub fn spawned(&self) -> usize {
        self.spawned
    }

    pub fn walking(&self) -> impl Iterator<Item = &Pedestrian> {
        self.pedestrians.iter().filter(|p| p.is_walking())
    }

    /// Everyone scheduled has spawned and left.
    pub fn finished(&self) -> bool {
        self.spawned >= self.scenario.spawn_count && self.walking().next().is_none()
    }

    /// Places a pedestrian by hand. It does not count toward `spawn_count`.
    pub fn add_pedestrian(
        &mut self,
        position: DVec2,
        velocity: DVec2,
        radius: f64,
        desired_speed: f64,
        fixed_goal: Option<DVec2>,
    ) -> u64 {
        let id = self.pedestrians.len() as u64;
        self.pedestrians.push(Pedestrian {
            id,
            position,
            velocity,
            radius,
            mass: self.scenario.params.mass,
            desired_speed,
            tau: self.scenario.params.tau,
            gate: 0,
            state: PedState::Walking,
            passed_gate: false,
            fixed_goal,
            spawn_time: self.t,
            exit_time: None,
            distance: 0.0,
        });
        id
    }

    pub fn set_avatar(&mut self, avatar: Option<Avatar>) {
        self.avatar = avatar;
    }

    fn free_spot(&self, p: DVec2, r: f64) -> bool {
        let clear_of_peds = self
            .walking()
            .all(|q| (q.position - p).length() >= q.radius + r);
        let clear_of_avatar = self
            .avatar
            .is_none_or(|a| (a.position - p).length() >= a.radius + r);
        let clear_of_walls = self
            .scenario
            .walls
            .iter()
            .all(|w| (w.closest_point(p) - p).length() >= r);
        clear_of_peds && clear_of_avatar && clear_of_walls
    }

    fn try_spawn(&mut self) -> Result<Option<u64>> {
        let params = self.scenario.params;
        let radius = self.rng.random_range(params.radius[0]..=params.radius[1]);
        let desired_speed = self
            .rng
            .random_range(params.desired_speed[0]..=params.desired_speed[1]);
        let (lo, hi) = self.scenario.spawn_surface.bounds();
        let mut spot = None;
        for _ in 0..100 {
            let p = DVec2::new(self.rng.random_range(lo.x..=hi.x), self.rng.random_range(lo.y..=hi.y));
            if self.scenario.spawn_surface.contains(p) && self.free_spot(p, radius) {
                spot = Some(p);
                break;
            }
        }
        let Some(position) = spot else {
            return Ok(None);
        };
        let walk_times: Vec<f64> = self
            .scenario
            .gates
            .iter()
            .map(|g| (g.midpoint() - position).length() / desired_speed)
            .collect();
        let gate = choose_gate(&walk_times, &self.costs, &self.choice, &mut self.rng)?;
        let id = self.pedestrians.len() as u64;
        self.pedestrians.push(Pedestrian {
            id,
            position,
            velocity: DVec2::ZERO,
            radius,
            mass: params.mass,
            desired_speed,
            tau: params.tau,
            gate,
            state: PedState::Walking,
            passed_gate: false,
            fixed_goal: None,
            spawn_time: self.t,
            exit_time: None,
            distance: 0.0,
        });
        self.spawned += 1;
        Ok(Some(id))
    }

    fn goal_point(&self, p: &Pedestrian) -> DVec2 {
        if let Some(goal) = p.fixed_goal {
            return goal;
        }
        if p.passed_gate {
            self.scenario.goal_surface.centroid()
        } else {
            self.scenario.gates[p.gate].midpoint()
        }
    }

    fn gate_normal(&self, gate: usize) -> DVec2 {
        let g = &self.scenario.gates[gate];
        let n = perp(g.b() - g.a()).normalize();
        if (self.scenario.goal_surface.centroid() - g.midpoint()).dot(n) >= 0.0 {
            n
        } else {
            -n
        }
    }

    /// Total force on every walking pedestrian for the current state.
    pub fn compute_forces(&mut self, diag: &mut StepDiagnostics) -> Result<Vec<DVec2>> {
        let points: Vec<Option<DVec2>> = self
            .pedestrians
            .iter()
            .map(|p| p.is_walking().then_some(p.position))
            .collect();
        self.search.rebuild(&points, self.cutoff);
        let params = self.scenario.params;
        let cutoff2 = self.cutoff * self.cutoff;
        let mut forces = vec![DVec2::ZERO; self.pedestrians.len()];
        let mut candidates = std::mem::take(&mut self.scratch);
        for (i, ped) in self.pedestrians.iter().enumerate() {
            if !ped.is_walking() {
                continue;
            }
            let me = ped.body();
            let mut total = driving_force(
                ped.position,
                ped.velocity,
                ped.desired_speed,
                self.goal_point(ped),
                &params,
            );
            let mut touching = false;
            candidates.clear();
            self.search.candidates(i, &mut candidates);
            for &j in &candidates {
                let other = &self.pedestrians[j];
                let d2 = (other.position - ped.position).length_squared();
                if d2 >= cutoff2 {
                    continue;
                }
                let (f, coincident) = pair_force(&me, &other.body(), &params);
                if !f.is_finite() {
                    return Err(Error::NonFiniteForce {
                        a: ped.id,
                        b: format!("pedestrian {}", other.id),
                    });
                }
                if coincident && ped.id < other.id {
                    diag.coincident.push((ped.id, Partner::Pedestrian(other.id)));
                }
                touching |= d2.sqrt() < ped.radius + other.radius;
                total += f;
            }
            for (k, wall) in self.scenario.walls.iter().enumerate() {
                let (f, coincident) = wall_force(&me, wall, &params);
                if !f.is_finite() {
                    return Err(Error::NonFiniteForce {
                        a: ped.id,
                        b: format!("wall {k}"),
                    });
                }
                if coincident {
                    diag.coincident.push((ped.id, Partner::Wall(k)));
                }
                touching |= (wall.closest_point(ped.position) - ped.position).length() < ped.radius;
                total += f;
            }
            if let Some(avatar) = &self.avatar {
                let d2 = (avatar.position - ped.position).length_squared();
                if d2 < cutoff2 {
                    let (f, coincident) = pair_force(&me, &avatar.body(), &params);
                    if !f.is_finite() {
                        return Err(Error::NonFiniteForce {
                            a: ped.id,
                            b: "avatar".into(),
                        });
                    }
                    if coincident {
                        diag.coincident.push((ped.id, Partner::Avatar));
                    }
                    touching |= d2.sqrt() < ped.radius + avatar.radius;
                    total += f;
                }
            }
            if !total.is_finite() {
                return Err(Error::NonFiniteForce {
                    a: ped.id,
                    b: "resultant".into(),
                });
            }
            if touching {
                diag.contacts.push(ped.id);
            }
            forces[i] = total;
        }
        self.scratch = candidates;
        Ok(forces)
    }

    /// Advances the world by one scenario time step.
    pub fn step(&mut self) -> Result<StepDiagnostics> {
        let dt = self.scenario.dt;
        let mut diag = StepDiagnostics::default();

        if self.spawned < self.scenario.spawn_count {
            self.spawn_credit += self.scenario.spawn_rate * dt;
            while self.spawn_credit >= 1.0 && self.spawned < self.scenario.spawn_count {
                match self.try_spawn()? {
                    Some(id) => {
                        diag.spawned.push(id);
                        self.spawn_credit -= 1.0;
                    }
                    None => break,
                }
            }
        }

        let forces = self.compute_forces(&mut diag)?;
        let t_next = (self.tick + 1) as f64 * dt;
        let goal = self.scenario.goal_surface.clone();
        for i in 0..self.pedestrians.len() {
            if !self.pedestrians[i].is_walking() {
                continue;
            }
            let gate_normal = self.gate_normal(self.pedestrians[i].gate);
            let gate_mid = self.scenario.gates[self.pedestrians[i].gate].midpoint();
            let p = &mut self.pedestrians[i];
            p.velocity += forces[i] / p.mass * dt;
            let step = p.velocity * dt;
            p.position += step;
            let moved = step.length();
            p.distance += moved;
            diag.max_displacement = diag.max_displacement.max(moved);
            if p.fixed_goal.is_some() {
                continue;
            }
            if !p.passed_gate && (p.position - gate_mid).dot(gate_normal) > 0.0 {
                p.passed_gate = true;
            }
            if p.passed_gate && goal.contains(p.position) {
                p.state = PedState::Exited;
                p.velocity = DVec2::ZERO;
                p.exit_time = Some(t_next);
                diag.exited.push(p.id);
            }
        }
        diag.tunneling = diag.max_displacement > 0.5 * self.min_radius;
        diag.forces = forces;
        self.tick += 1;
        self.t = t_next;
        diag.tick = self.tick;
        diag.t = self.t;
        Ok(diag)
    }
}
