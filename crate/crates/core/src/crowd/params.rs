use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Social-force constants and the ranges pedestrian attributes are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForceParams {
    /// psychological repulsion strength, N
    pub a: f64,
    /// repulsion range, m
    pub b: f64,
    /// body compression, kg/s²
    pub k: f64,
    /// sliding friction, kg/(m·s)
    pub kappa: f64,
    pub mass: f64,
    pub tau: f64,
    pub desired_speed: [f64; 2],
    pub radius: [f64; 2],
    /// magnitude below which the repulsion is neglected between pedestrians
    pub force_cutoff: f64,
}

impl Default for ForceParams {
    fn default() -> Self {
        Self {
            a: 2000.0,
            b: 0.08,
            k: 1.2e5,
            kappa: 2.4e5,
            mass: 80.0,
            tau: 0.5,
            desired_speed: [1.0, 1.4],
            radius: [0.25, 0.35],
            force_cutoff: 0.1,
        }
    }
}

impl ForceParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.k, self.kappa, self.mass, self.tau, self.force_cutoff]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.a < 0.0 || self.b <= 0.0 || self.k < 0.0 || self.kappa < 0.0 {
            return Err(Error::invalid("force constants must be finite, A, k, κ ≥ 0 and B > 0"));
        }
        if self.mass <= 0.0 || self.tau <= 0.0 || self.force_cutoff <= 0.0 {
            return Err(Error::invalid("mass, τ and force cutoff must be positive"));
        }
        let [v_lo, v_hi] = self.desired_speed;
        if !(v_lo > 0.0 && v_lo <= v_hi && v_hi <= 3.0) {
            return Err(Error::invalid(format!("desired speed range {v_lo}..{v_hi} outside (0, 3]")));
        }
        let [r_lo, r_hi] = self.radius;
        if !(r_lo >= 0.2 && r_lo <= r_hi && r_hi <= 0.5) {
            return Err(Error::invalid(format!("radius range {r_lo}..{r_hi} outside [0.2, 0.5]")));
        }
        Ok(())
    }

    /// Centre distance beyond which pair forces are neglected.
    pub fn cutoff_distance(&self, max_radius: f64) -> f64 {
        let reach = if self.a > self.force_cutoff {
            self.b * (self.a / self.force_cutoff).ln()
        } else {
            0.0
        };
        2.0 * max_radius + reach
    }
}
