use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crowd::TrialMetrics;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedParticipant {
    pub gate: u32,
    pub completion_time_s: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObservedData {
    pub participants: Vec<ObservedParticipant>,
}

impl ObservedData {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Synthetic participants matching a gate distribution.
    pub fn from_counts(counts: &[usize], gate_ids: &[u32]) -> Self {
        let participants = counts
            .iter()
            .zip(gate_ids)
            .flat_map(|(&n, &gate)| {
                std::iter::repeat_n(
                    ObservedParticipant {
                        gate,
                        completion_time_s: 0.0,
                        distance_m: 0.0,
                    },
                    n,
                )
            })
            .collect();
        Self { participants }
    }

    pub fn distribution(&self, gate_ids: &[u32]) -> Result<Vec<f64>> {
        if self.participants.is_empty() {
            return Err(Error::EmptyObservations);
        }
        let mut counts = vec![0usize; gate_ids.len()];
        for p in &self.participants {
            let g = gate_ids
                .iter()
                .position(|&id| id == p.gate)
                .ok_or_else(|| Error::invalid(format!("observed gate {} is not in the scenario", p.gate)))?;
            counts[g] += 1;
        }
        let n = self.participants.len() as f64;
        Ok(counts.into_iter().map(|c| c as f64 / n).collect())
    }
}

/// Half the L1 distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub tv_distance: f64,
    pub observed_distribution: Vec<f64>,
    pub simulated_distribution: Vec<f64>,
    /// mean |observed − simulated gate mean| over matched participants
    pub completion_time_mad: Option<f64>,
    pub distance_mad: Option<f64>,
    /// participants whose gate had no finished simulated pedestrian
    pub unmatched: usize,
}

pub fn compare_user(observed: &ObservedData, trial: &TrialMetrics, gate_ids: &[u32]) -> Result<DeviationReport> {
    let observed_distribution = observed.distribution(gate_ids)?;
    if trial.gate_counts.len() != gate_ids.len() {
        return Err(Error::GateMismatch {
            observed: gate_ids.len(),
            simulated: trial.gate_counts.len(),
        });
    }
    let simulated_distribution = trial.gate_distribution();
    let mut means = vec![(0.0, 0.0, 0usize); gate_ids.len()];
    for p in &trial.pedestrians {
        if let (Some(t), Some(g)) = (p.completion_time, gate_ids.iter().position(|&id| id == p.gate)) {
            means[g].0 += t;
            means[g].1 += p.distance;
            means[g].2 += 1;
        }
    }
    let (mut time_dev, mut dist_dev, mut matched) = (0.0, 0.0, 0usize);
    for p in &observed.participants {
        let g = gate_ids.iter().position(|&id| id == p.gate).expect("checked by distribution");
        let (t, d, n) = means[g];
        if n == 0 {
            continue;
        }
        time_dev += (p.completion_time_s - t / n as f64).abs();
        dist_dev += (p.distance_m - d / n as f64).abs();
        matched += 1;
    }
    let mad = |sum: f64| (matched > 0).then(|| sum / matched as f64);
    Ok(DeviationReport {
        tv_distance: total_variation(&observed_distribution, &simulated_distribution),
        observed_distribution,
        simulated_distribution,
        completion_time_mad: mad(time_dev),
        distance_mad: mad(dist_dev),
        unmatched: observed.participants.len() - matched,
    })
}
