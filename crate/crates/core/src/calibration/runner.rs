use serde::{Deserialize, Serialize};

use crate::crowd::{gate_probabilities, run_trial, GateChoiceParams, PedestrianRecord, Scenario, TrialMetrics};
use crate::registry::Registry;
use crate::{Error, Result};

/// Produces one trial's measurements for given anticipated costs.
pub trait TrialRunner: Send + Sync {
    fn name(&self) -> &'static str;

    fn gate_ids(&self) -> Vec<u32>;

    fn run(&self, params: &GateChoiceParams, costs: &[f64], seed: u64) -> Result<TrialMetrics>;
}

/// Full social-force trial of a scenario.
#[derive(Debug, Clone)]
pub struct CrowdRunner {
    pub scenario: Scenario,
}

impl TrialRunner for CrowdRunner {
    fn name(&self) -> &'static str {
        "crowd"
    }

    fn gate_ids(&self) -> Vec<u32> {
        self.scenario.gates.iter().map(|g| g.id).collect()
    }

    fn run(&self, params: &GateChoiceParams, costs: &[f64], seed: u64) -> Result<TrialMetrics> {
        run_trial(&self.scenario, params, costs, seed)
    }
}

/// Closed-form queueing stand-in for a trial: `demand` walkers split by the
/// softmax over `free_time + γ·cost` and each gate's measured cost is
/// `free_time + share·demand / (2·capacity)`. Deterministic and stationary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticQueue {
    /// free walking time to each gate, seconds
    pub free_times: Vec<f64>,
    pub demand: usize,
    /// number of walker records a trial reports; only sets the resolution of
    /// the reported gate split
    pub population: usize,
    /// walkers per second per gate
    pub capacity: f64,
    /// m/s, converts free time into covered distance
    pub walk_speed: f64,
}

impl SyntheticQueue {
    /// Two gates, one much farther; the cost map has a single fixed point.
    pub fn two_gate() -> Self {
        Self {
            free_times: vec![10.0, 60.0],
            demand: 65,
            population: 1000,
            capacity: 1.0,
            walk_speed: 1.2,
        }
    }

    pub fn four_gate() -> Self {
        Self {
            free_times: vec![10.0, 12.0, 15.0, 20.0],
            demand: 60,
            population: 1000,
            capacity: 1.0,
            walk_speed: 1.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.free_times.is_empty() || self.free_times.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::invalid("free times must be non-empty, finite and non-negative"));
        }
        if !(self.capacity > 0.0 && self.walk_speed > 0.0) {
            return Err(Error::invalid("capacity and walk speed must be positive"));
        }
        Ok(())
    }

    pub fn shares(&self, params: &GateChoiceParams, costs: &[f64]) -> Result<Vec<f64>> {
        let totals: Vec<f64> = self
            .free_times
            .iter()
            .zip(costs)
            .map(|(f, c)| f + params.gamma * c)
            .collect();
        gate_probabilities(&totals, params.lambda)
    }

    pub fn measured(&self, params: &GateChoiceParams, costs: &[f64]) -> Result<Vec<f64>> {
        let shares = self.shares(params, costs)?;
        Ok(self
            .free_times
            .iter()
            .zip(&shares)
            .map(|(f, p)| f + p * self.demand as f64 / (2.0 * self.capacity))
            .collect())
    }
}

/// Integer split of `total` by `shares`, largest remainder first.
pub fn apportion(shares: &[f64], total: usize) -> Vec<usize> {
    let raw: Vec<f64> = shares.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = raw[a] - raw[a].floor();
        let rb = raw[b] - raw[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

impl TrialRunner for SyntheticQueue {
    fn name(&self) -> &'static str {
        "synthetic"
    }

    fn gate_ids(&self) -> Vec<u32> {
        (0..self.free_times.len() as u32).collect()
    }

    fn run(&self, params: &GateChoiceParams, costs: &[f64], _seed: u64) -> Result<TrialMetrics> {
        self.validate()?;
        if costs.len() != self.free_times.len() {
            return Err(Error::GateMismatch {
                observed: costs.len(),
                simulated: self.free_times.len(),
            });
        }
        let measured = self.measured(params, costs)?;
        let gate_counts = apportion(&self.shares(params, costs)?, self.population);
        let mut pedestrians = Vec::with_capacity(self.population);
        for (g, &count) in gate_counts.iter().enumerate() {
            for _ in 0..count {
                pedestrians.push(PedestrianRecord {
                    id: pedestrians.len() as u64,
                    gate: g as u32,
                    completion_time: Some(measured[g]),
                    distance: self.free_times[g] * self.walk_speed,
                });
            }
        }
        Ok(TrialMetrics {
            pedestrians,
            gate_counts,
            gate_costs: measured.into_iter().map(Some).collect(),
            duration: 0.0,
            incomplete: false,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunnerConfig {
    pub scenario: Scenario,
    pub synthetic: SyntheticQueue,
}

pub fn runner_registry() -> Registry<dyn TrialRunner, RunnerConfig> {
    Registry::new("trial runner")
        .with("crowd", make_crowd)
        .with("synthetic", make_synthetic)
}

fn make_crowd(c: &RunnerConfig) -> Box<dyn TrialRunner> {
    Box::new(CrowdRunner {
        scenario: c.scenario.clone(),
    })
}

fn make_synthetic(c: &RunnerConfig) -> Box<dyn TrialRunner> {
    Box::new(c.synthetic.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_sums_to_total() {
        assert_eq!(apportion(&[0.5, 0.25, 0.25], 10), vec![5, 3, 2]);
        assert_eq!(apportion(&[1.0 / 3.0; 3], 100).iter().sum::<usize>(), 100);
    }

    #[test]
    fn synthetic_measured_cost() {
        let q = SyntheticQueue::two_gate();
        let params = GateChoiceParams { lambda: 0.0, gamma: 1.0 };
        // λ = 0 splits evenly: each gate gets 32.5 walkers, queue 16.25 s.
        let m = q.measured(&params, &[0.0, 0.0]).unwrap();
        assert_eq!(m, vec![26.25, 76.25]);
        let t = q.run(&params, &[0.0, 0.0], 0).unwrap();
        assert_eq!(t.gate_counts.iter().sum::<usize>(), 1000);
    }
}
