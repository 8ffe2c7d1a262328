use serde::{Deserialize, Serialize};

use crate::registry::Registry;
use crate::{Error, Result};

/// Anticipated per-gate costs and the record of how they got there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationState {
    /// number of measurements folded into `costs`
    pub iteration: usize,
    pub costs: Vec<f64>,
    pub scheme: String,
    /// smoothing weight W; unused by MSA
    pub weight: Option<f64>,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub costs: Vec<f64>,
    pub measured: Vec<f64>,
    pub distribution: Vec<f64>,
    /// max |measured − costs|
    pub residual: f64,
    /// gates nobody used; their measured value is the carried-over cost
    pub unused_gates: Vec<usize>,
}

impl CalibrationState {
    pub fn new(scheme: &dyn AssignmentScheme, gates: usize) -> Self {
        Self {
            iteration: 0,
            costs: vec![0.0; gates],
            scheme: scheme.name().to_string(),
            weight: scheme.weight(),
            history: Vec::new(),
            converged: false,
        }
    }
}

fn check(state: &CalibrationState, measured: &[f64], expected: &'static str) -> Result<()> {
    if state.scheme != expected {
        return Err(Error::SchemeMismatch {
            expected,
            actual: state.scheme.clone(),
        });
    }
    if measured.len() != state.costs.len() {
        return Err(Error::GateMismatch {
            observed: measured.len(),
            simulated: state.costs.len(),
        });
    }
    if measured.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::invalid("measured costs must be finite and non-negative"));
    }
    Ok(())
}

/// Running mean of every measurement so far.
pub fn msa_update(state: &CalibrationState, measured: &[f64]) -> Result<CalibrationState> {
    check(state, measured, "msa")?;
    let mut next = state.clone();
    let n = (state.iteration + 1) as f64;
    for (c, m) in next.costs.iter_mut().zip(measured) {
        *c += (m - *c) / n;
    }
    next.iteration += 1;
    Ok(next)
}

/// `W·measured + (1 − W)·costs`.
pub fn smooth_update(state: &CalibrationState, measured: &[f64]) -> Result<CalibrationState> {
    check(state, measured, "smooth")?;
    let w = state.weight.unwrap_or(0.5);
    let mut next = state.clone();
    for (c, m) in next.costs.iter_mut().zip(measured) {
        *c = w * m + (1.0 - w) * *c;
    }
    next.iteration += 1;
    Ok(next)
}

pub trait AssignmentScheme: Send + Sync {
    fn name(&self) -> &'static str;

    fn weight(&self) -> Option<f64> {
        None
    }

    fn update(&self, state: &CalibrationState, measured: &[f64]) -> Result<CalibrationState>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Msa;

impl AssignmentScheme for Msa {
    fn name(&self) -> &'static str {
        "msa"
    }

    fn update(&self, state: &CalibrationState, measured: &[f64]) -> Result<CalibrationState> {
        msa_update(state, measured)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Smoothing {
    pub weight: f64,
}

impl AssignmentScheme for Smoothing {
    fn name(&self) -> &'static str {
        "smooth"
    }

    fn weight(&self) -> Option<f64> {
        Some(self.weight)
    }

    fn update(&self, state: &CalibrationState, measured: &[f64]) -> Result<CalibrationState> {
        smooth_update(state, measured)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub weight: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self { weight: 0.5 }
    }
}

pub fn scheme_registry() -> Registry<dyn AssignmentScheme, SchemeConfig> {
    Registry::new("assignment scheme")
        .with("msa", make_msa)
        .with("smooth", make_smooth)
}

fn make_msa(_: &SchemeConfig) -> Box<dyn AssignmentScheme> {
    Box::new(Msa)
}

fn make_smooth(c: &SchemeConfig) -> Box<dyn AssignmentScheme> {
    Box::new(Smoothing { weight: c.weight })
}

/// Looks up a scheme, checking the smoothing weight.
pub fn scheme(name: &str, weight: f64) -> Result<Box<dyn AssignmentScheme>> {
    if !(weight > 0.0 && weight <= 1.0) {
        return Err(Error::invalid(format!("smoothing weight must lie in (0, 1], got {weight}")));
    }
    scheme_registry().create(name, &SchemeConfig { weight })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(name: &str, costs: Vec<f64>, iteration: usize, weight: Option<f64>) -> CalibrationState {
        CalibrationState {
            iteration,
            costs,
            scheme: name.into(),
            weight,
            history: Vec::new(),
            converged: false,
        }
    }

    #[test]
    fn msa_examples() {
        let s = msa_update(&state("msa", vec![0.0, 0.0], 0, None), &[10.0, 20.0]).unwrap();
        assert_eq!(s.costs, vec![10.0, 20.0]);
        let s = msa_update(&s, &[20.0, 10.0]).unwrap();
        assert_eq!(s.costs, vec![15.0, 15.0]);
        assert_eq!(s.iteration, 2);
    }

    #[test]
    fn smooth_examples() {
        let s = smooth_update(&state("smooth", vec![10.0], 3, Some(1.0)), &[20.0]).unwrap();
        assert_eq!(s.costs, vec![20.0]);
        let s = smooth_update(&state("smooth", vec![10.0], 3, Some(0.5)), &[20.0]).unwrap();
        assert_eq!(s.costs, vec![15.0]);
    }

    #[test]
    fn wrong_scheme_rejected() {
        let r = smooth_update(&state("msa", vec![1.0], 0, None), &[1.0]);
        assert!(matches!(r, Err(Error::SchemeMismatch { .. })));
        assert!(scheme("smooth", 0.0).is_err());
        assert!(scheme("frank-wolfe", 0.5).is_err());
    }

    proptest! {
        #[test]
        fn msa_is_the_arithmetic_mean(ms in prop::collection::vec(0.0f64..1e3, 1..40)) {
            let mut s = state("msa", vec![0.0], 0, None);
            for m in &ms {
                s = msa_update(&s, &[*m]).unwrap();
            }
            let mean = ms.iter().sum::<f64>() / ms.len() as f64;
            prop_assert!((s.costs[0] - mean).abs() <= 1e-12 * mean.max(1.0));
        }

        #[test]
        fn smoothing_contracts_by_one_minus_w(c in 0.0f64..100.0, m in 0.0f64..100.0, w in 0.01f64..1.0) {
            let s = smooth_update(&state("smooth", vec![c], 1, Some(w)), &[m]).unwrap();
            let expected = (1.0 - w) * (c - m).abs();
            prop_assert!(((s.costs[0] - m).abs() - expected).abs() <= 1e-12 * c.max(m).max(1.0));
        }
    }
}
