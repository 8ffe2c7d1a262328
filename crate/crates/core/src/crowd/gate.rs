use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Softmax route choice: P(g) ∝ exp(−λ·c_g).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateChoiceParams {
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for GateChoiceParams {
    fn default() -> Self {
        Self { lambda: 5.0, gamma: 1.0 }
    }
}

impl GateChoiceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite() && self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "gate choice needs finite λ ≥ 0 and γ ≥ 0, got λ = {}, γ = {}",
                self.lambda, self.gamma
            )));
        }
        Ok(())
    }
}

/// Choice probabilities for total costs `costs` (seconds). Infinite costs get
/// probability zero.
pub fn gate_probabilities(costs: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if costs.is_empty() {
        return Err(Error::UnreachableGates);
    }
    if costs.iter().any(|c| c.is_nan()) {
        return Err(Error::invalid("gate cost is NaN"));
    }
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    if best == f64::INFINITY {
        return Err(Error::UnreachableGates);
    }
    let weights: Vec<f64> = costs
        .iter()
        .map(|&c| if c == f64::INFINITY { 0.0 } else { (-lambda * (c - best)).exp() })
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Samples an index from `probabilities`.
pub fn sample_index<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Picks a gate given free-walk times and anticipated costs (both seconds).
pub fn choose_gate<R: Rng + ?Sized>(
    walk_times: &[f64],
    anticipated: &[f64],
    params: &GateChoiceParams,
    rng: &mut R,
) -> Result<usize> {
    if walk_times.len() != anticipated.len() {
        return Err(Error::invalid("walk times and anticipated costs differ in length"));
    }
    let totals: Vec<f64> = walk_times
        .iter()
        .zip(anticipated)
        .map(|(w, c)| if params.gamma == 0.0 { *w } else { w + params.gamma * c })
        .collect();
    let probabilities = gate_probabilities(&totals, params.lambda)?;
    Ok(sample_index(&probabilities, rng))
}
