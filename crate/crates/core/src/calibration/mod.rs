//! Dynamic assignment of anticipated gate costs and parameter fitting
//! against observed route choices.

mod compare;
mod runner;
mod scheme;

pub use compare::{compare_user, total_variation, DeviationReport, ObservedData, ObservedParticipant};
pub use runner::{apportion, runner_registry, CrowdRunner, RunnerConfig, SyntheticQueue, TrialRunner};
pub use scheme::{
    msa_update, scheme, scheme_registry, smooth_update, AssignmentScheme, CalibrationState,
    IterationRecord, Msa, SchemeConfig, Smoothing,
};

use serde::{Deserialize, Serialize};

use crate::crowd::{GateChoiceParams, TrialMetrics};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub max_iter: usize,
    /// seconds
    pub tol: f64,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub state: CalibrationState,
    /// the trial run with the final costs
    pub last_trial: TrialMetrics,
}

fn measured_costs(trial: &TrialMetrics, previous: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut unused = Vec::new();
    let measured = trial
        .gate_costs
        .iter()
        .zip(previous)
        .enumerate()
        .map(|(g, (m, &prev))| {
            m.unwrap_or_else(|| {
                unused.push(g);
                prev
            })
        })
        .collect();
    (measured, unused)
}

/// Iterates trial → measured costs → scheme update until the measured costs
/// reproduce the anticipated ones within `tol`. Every trial uses the same
/// seed so the only thing changing between iterations is the cost vector.
pub fn calibrate(
    runner: &dyn TrialRunner,
    params: &GateChoiceParams,
    scheme: &dyn AssignmentScheme,
    config: &CalibrationConfig,
) -> Result<CalibrationReport> {
    params.validate()?;
    if config.max_iter == 0 || !(config.tol > 0.0) {
        return Err(Error::invalid("calibration needs max_iter ≥ 1 and tol > 0"));
    }
    let gates = runner.gate_ids().len();
    let mut state = CalibrationState::new(scheme, gates);

    // First measurement replaces the zero prior under either scheme.
    let mut trial = runner.run(params, &state.costs, config.seed)?;
    let (measured, unused_gates) = measured_costs(&trial, &state.costs);
    state.history.push(IterationRecord {
        costs: state.costs.clone(),
        residual: residual(&measured, &state.costs),
        distribution: trial.gate_distribution(),
        measured: measured.clone(),
        unused_gates,
    });
    state.costs = measured;
    state.iteration = 1;
    if gates == 1 || params.lambda * params.gamma == 0.0 {
        // costs cannot influence the choice, so the next trial is identical
        state.converged = true;
        return Ok(CalibrationReport { state, last_trial: trial });
    }

    while state.history.len() < config.max_iter {
        trial = runner.run(params, &state.costs, config.seed)?;
        let (measured, unused_gates) = measured_costs(&trial, &state.costs);
        let r = residual(&measured, &state.costs);
        state.history.push(IterationRecord {
            costs: state.costs.clone(),
            measured: measured.clone(),
            distribution: trial.gate_distribution(),
            residual: r,
            unused_gates,
        });
        if r < config.tol {
            state.converged = true;
            break;
        }
        let history = std::mem::take(&mut state.history);
        state = scheme.update(&state, &measured)?;
        state.history = history;
    }
    Ok(CalibrationReport { state, last_trial: trial })
}

fn residual(measured: &[f64], costs: &[f64]) -> f64 {
    measured
        .iter()
        .zip(costs)
        .map(|(m, c)| (m - c).abs())
        .fold(0.0, f64::max)
}

pub fn default_grid() -> Vec<GateChoiceParams> {
    let mut grid = Vec::new();
    for lambda in [0.1, 0.2, 0.5, 1.0, 2.0] {
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            grid.push(GateChoiceParams { lambda, gamma });
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub lambda: f64,
    pub gamma: f64,
    pub tv_distance: f64,
    pub converged: bool,
    pub iterations: usize,
    pub completion_time_mad: Option<f64>,
    pub distance_mad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub best: GateChoiceParams,
    pub best_tv: f64,
    pub table: Vec<GridRow>,
}

/// Grid search for the (λ, γ) whose calibrated trial best matches the
/// observed gate split. Ties go to smaller λ, then smaller γ.
pub fn fit_params(
    runner: &dyn TrialRunner,
    observed: &ObservedData,
    grid: &[GateChoiceParams],
    scheme: &dyn AssignmentScheme,
    config: &CalibrationConfig,
) -> Result<FitReport> {
    if grid.is_empty() {
        return Err(Error::invalid("parameter grid is empty"));
    }
    let ids = runner.gate_ids();
    observed.distribution(&ids)?;
    let mut table = Vec::with_capacity(grid.len());
    for params in grid {
        let report = calibrate(runner, params, scheme, config)?;
        let dev = compare_user(observed, &report.last_trial, &ids)?;
        table.push(GridRow {
            lambda: params.lambda,
            gamma: params.gamma,
            tv_distance: dev.tv_distance,
            converged: report.state.converged,
            iterations: report.state.history.len(),
            completion_time_mad: dev.completion_time_mad,
            distance_mad: dev.distance_mad,
        });
    }
    let best = table
        .iter()
        .min_by(|a, b| {
            a.tv_distance
                .total_cmp(&b.tv_distance)
                .then(a.lambda.total_cmp(&b.lambda))
                .then(a.gamma.total_cmp(&b.gamma))
        })
        .expect("grid is non-empty");
    Ok(FitReport {
        best: GateChoiceParams {
            lambda: best.lambda,
            gamma: best.gamma,
        },
        best_tv: best.tv_distance,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_gate_converges_immediately() {
        let q = SyntheticQueue {
            free_times: vec![12.0],
            ..SyntheticQueue::two_gate()
        };
        let r = calibrate(&q, &GateChoiceParams::default(), &Msa, &CalibrationConfig::default()).unwrap();
        assert!(r.state.converged);
        assert_eq!(r.state.history.len(), 1);
    }

    #[test]
    fn one_point_grid() {
        let q = SyntheticQueue::four_gate();
        let obs = ObservedData::from_counts(&[1, 1, 1, 1], &q.gate_ids());
        let grid = [GateChoiceParams { lambda: 0.7, gamma: 0.3 }];
        let fit = fit_params(&q, &obs, &grid, &Msa, &CalibrationConfig::default()).unwrap();
        assert_eq!(fit.best, grid[0]);
    }

    #[test]
    fn uniform_observation_prefers_small_lambda() {
        let q = SyntheticQueue::four_gate();
        let obs = ObservedData::from_counts(&[25, 25, 25, 25], &q.gate_ids());
        let fit = fit_params(&q, &obs, &default_grid(), &Smoothing { weight: 0.5 }, &CalibrationConfig::default())
            .unwrap();
        assert_eq!(fit.best.lambda, 0.1);
    }
}
