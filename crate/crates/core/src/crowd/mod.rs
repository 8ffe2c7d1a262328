//! Social-force pedestrian crowd with gates, spawn and goal surfaces.

mod forces;
mod gate;
pub mod neighbors;
mod params;
mod scenario;
mod trial;
mod world;

pub use forces::{driving_force, overlaps, overlaps_wall, pair_force, wall_force, Body, Wall};
pub use gate::{choose_gate, gate_probabilities, sample_index, GateChoiceParams};
pub use neighbors::{neighbor_registry, NeighborSearch};
pub use params::ForceParams;
pub use scenario::{Gate, Polygon, Scenario};
pub use trial::{run_trial, run_trial_logged, trajectory_rows, PedestrianRecord, TrajectoryRow, TrialMetrics};
pub use world::{Avatar, Partner, PedState, Pedestrian, StepDiagnostics, World, AVATAR_ID};
