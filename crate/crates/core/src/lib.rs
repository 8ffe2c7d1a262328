//! Walking-telepresence workbench core.
//!
//! The crate maps a walker confined to a small room onto an avatar in a large
//! virtual hall (`motion`), simulates the hall's pedestrian crowd with a
//! social-force model (`crowd`), turns contact forces on the avatar into
//! user-frame haptic samples (`haptics`) and calibrates the crowd's gate
//! choice against observed route choices (`calibration`).
//!
//! Interchangeable algorithms (path predictors, neighbor search, assignment
//! schemes, trial runners) sit behind traits and are looked up by name in a
//! [`registry::Registry`].

pub mod calibration;
pub mod crowd;
pub mod error;
pub mod geometry;
pub mod haptics;
pub mod motion;
pub mod registry;

pub use error::{Error, Result};
pub use geometry::{Pose, PolyPath};
