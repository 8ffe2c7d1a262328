//! Fit a target path into the room by reshaping its curvature profile.
//!
//! The user path shares the target's segment length and count, so arc length
//! is fixed by construction. Total turning is held fixed by keeping every
//! step on the hyperplane `Σ Δκ = 0`. What remains is
//!
//! ```text
//! min  Σ (κ_u − κ_t)² ds  +  μ Σ_j |p_j − clamp(p_j)|²
//! ```
//!
//! over the user curvatures, with the penalty weight doubled every outer
//! round. The clamp uses the feasible rectangle shrunk by a small buffer, so
//! the residual violation left by a finite penalty weight stays inside the
//! true rectangle.

use std::f64::consts::TAU;

use glam::DVec2;
use serde::{Deserialize, Serialize};

use super::mapping::Correspondence;
use super::room::RoomSpec;
use crate::geometry::{cross, unit, PolyPath, Pose};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformConfig {
    pub penalty_start: f64,
    pub penalty_rounds: usize,
    pub inner_iterations: usize,
    pub boundary_buffer: f64,
    pub gradient_tol: f64,
    /// Largest accepted distance of a user vertex outside the feasible rectangle.
    pub feasibility_tol: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            penalty_start: 10.0,
            penalty_rounds: 8,
            inner_iterations: 500,
            boundary_buffer: 0.02,
            gradient_tol: 1e-6,
            feasibility_tol: 1e-3,
        }
    }
}

struct Problem<'a> {
    target: &'a [f64],
    start: Pose,
    ds: f64,
    lo: DVec2,
    hi: DVec2,
}

impl Problem<'_> {
    fn vertices(&self, ks: &[f64]) -> Vec<DVec2> {
        let mut out = Vec::with_capacity(ks.len() + 1);
        let mut p = self.start.position();
        out.push(p);
        let mut theta = self.start.heading;
        for (i, k) in ks.iter().enumerate() {
            theta += if i == 0 { 0.5 * k * self.ds } else { k * self.ds };
            p += self.ds * unit(theta);
            out.push(p);
        }
        out
    }

    fn curvature_cost(&self, ks: &[f64]) -> f64 {
        ks.iter()
            .zip(self.target)
            .map(|(u, t)| (u - t) * (u - t))
            .sum::<f64>()
            * self.ds
    }

    /// Penalized objective and its gradient projected onto `Σ Δκ = 0`.
    fn evaluate(&self, ks: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
        let n = ks.len();
        let pts = self.vertices(ks);
        let mut penalty = 0.0;
        let mut cross_suffix = 0.0;
        let mut g_suffix = DVec2::ZERO;
        for i in (0..n).rev() {
            let j = i + 1;
            let g = pts[j] - pts[j].clamp(self.lo, self.hi);
            penalty += g.length_squared();
            cross_suffix += cross(pts[j], g);
            g_suffix += g;
            let mut d = 2.0 * mu * self.ds * (cross_suffix - cross(pts[i], g_suffix));
            if i == 0 {
                d *= 0.5;
            }
            grad[i] = 2.0 * self.ds * (ks[i] - self.target[i]) + d;
        }
        let mean = grad.iter().sum::<f64>() / n as f64;
        grad.iter_mut().for_each(|g| *g -= mean);
        self.curvature_cost(ks) + mu * penalty
    }

    fn max_violation(&self, ks: &[f64], room: &RoomSpec) -> f64 {
        self.vertices(ks)
            .into_iter()
            .map(|p| room.violation(p))
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Limited-memory quasi-Newton descent with Armijo backtracking. All
/// gradients are projected, so the search directions stay on the hyperplane.
fn minimize(problem: &Problem, x: &mut [f64], mu: f64, max_iter: usize, gtol: f64) {
    const MEMORY: usize = 8;
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut f = problem.evaluate(x, mu, &mut grad);
    let mut hist_s: Vec<Vec<f64>> = Vec::new();
    let mut hist_y: Vec<Vec<f64>> = Vec::new();
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];

    for _ in 0..max_iter {
        let gnorm = norm(&grad);
        if gnorm <= gtol {
            break;
        }
        // two-loop recursion
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut alphas = Vec::with_capacity(hist_s.len());
        for (s, y) in hist_s.iter().zip(&hist_y).rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &dir);
            dir.iter_mut().zip(y).for_each(|(d, yi)| *d -= a * yi);
            alphas.push((a, rho));
        }
        if let (Some(s), Some(y)) = (hist_s.last(), hist_y.last()) {
            let gamma = dot(s, y) / dot(y, y);
            dir.iter_mut().for_each(|d| *d *= gamma);
        } else {
            let scale = (1.0 / gnorm).min(1.0);
            dir.iter_mut().for_each(|d| *d *= scale);
        }
        for ((s, y), (a, rho)) in hist_s.iter().zip(&hist_y).zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &dir);
            dir.iter_mut().zip(s).for_each(|(d, si)| *d += (a - b) * si);
        }
        let mut slope = dot(&dir, &grad);
        if slope >= 0.0 {
            hist_s.clear();
            hist_y.clear();
            let scale = (1.0 / gnorm).min(1.0);
            dir = grad.iter().map(|g| -g * scale).collect();
            slope = dot(&dir, &grad);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            trial.iter_mut().zip(x.iter()).zip(&dir).for_each(|((t, xi), d)| *t = xi + step * d);
            let ft = problem.evaluate(&trial, mu, &mut trial_grad);
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                accepted = Some(ft);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            break;
        };

        let s: Vec<f64> = trial.iter().zip(x.iter()).map(|(t, xi)| t - xi).collect();
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if hist_s.len() == MEMORY {
                hist_s.remove(0);
                hist_y.remove(0);
            }
            hist_s.push(s);
            hist_y.push(y);
        }
        x.copy_from_slice(&trial);
        grad.copy_from_slice(&trial_grad);
        let decrease = f - f_new;
        f = f_new;
        if decrease <= 1e-15 * (1.0 + f.abs()) {
            break;
        }
    }
}

/// Restores `Σ κ_u = Σ κ_t` exactly up to rounding.
fn fix_turning(x: &mut [f64], target_sum: f64) {
    let shift = (target_sum - x.iter().sum::<f64>()) / x.len() as f64;
    x.iter_mut().for_each(|k| *k += shift);
}

/// Alternating full loops around the start, sized to the nearest wall, on top
/// of the target's mean curvature.
fn looping_profile(problem: &Problem, n: usize) -> Vec<f64> {
    let p = problem.start.position();
    let room_gap = [p.x - problem.lo.x, problem.hi.x - p.x, p.y - problem.lo.y, problem.hi.y - p.y]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let radius = (0.45 * room_gap).max(0.05);
    let per_loop = ((TAU * radius / problem.ds).round() as usize).max(1);
    let mean = problem.target.iter().sum::<f64>() / n as f64;
    (0..n)
        .map(|i| {
            let sign = if (i / per_loop) % 2 == 0 { 1.0 } else { -1.0 };
            mean + sign / radius
        })
        .collect()
}

/// Fits `target` into `room`, starting from `user_start`.
pub fn transform_path(
    target: &PolyPath,
    room: &RoomSpec,
    user_start: Pose,
    config: &TransformConfig,
) -> Result<Correspondence> {
    room.validate()?;
    if target.segments() == 0 || !(target.length() > 0.0) {
        return Err(Error::invalid("target path has zero length"));
    }
    if !user_start.is_finite() || !room.contains(user_start.position()) {
        return Err(Error::invalid(format!(
            "user start ({:.3}, {:.3}) is outside the feasible region",
            user_start.x, user_start.y
        )));
    }
    let extent = (room.width - 2.0 * room.margin).min(room.height - 2.0 * room.margin);
    let (lo, hi) = room.inset(config.boundary_buffer.clamp(0.0, 0.25 * extent));
    let problem = Problem {
        target: &target.curvatures,
        start: user_start,
        ds: target.ds,
        lo,
        hi,
    };
    let n = target.segments();
    let target_sum: f64 = target.curvatures.iter().sum();
    let build = |ks: Vec<f64>| {
        let user = PolyPath::new(user_start, target.ds, ks)?;
        Correspondence::new(target.clone(), user)
    };

    if problem.max_violation(&target.curvatures, room) == 0.0 {
        return build(target.curvatures.clone());
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut residual = f64::INFINITY;
    for init in [target.curvatures.clone(), looping_profile(&problem, n)] {
        let mut x = init;
        fix_turning(&mut x, target_sum);
        let mut mu = config.penalty_start;
        for _ in 0..config.penalty_rounds.max(1) {
            minimize(&problem, &mut x, mu, config.inner_iterations, config.gradient_tol);
            fix_turning(&mut x, target_sum);
            let violation = problem.max_violation(&x, room);
            residual = residual.min(violation);
            if violation <= config.feasibility_tol {
                let cost = problem.curvature_cost(&x);
                if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    best = Some((cost, x.clone()));
                }
            }
            mu *= 2.0;
        }
    }

    match best {
        Some((_, ks)) => build(ks),
        None => Err(Error::Infeasible { residual }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem<'a>(target: &'a [f64], start: Pose) -> Problem<'a> {
        let room = RoomSpec::default();
        let (lo, hi) = room.inset(0.02);
        Problem {
            target,
            start,
            ds: 0.1,
            lo,
            hi,
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let target: Vec<f64> = (0..40).map(|i| 0.3 * (i as f64 * 0.2).sin()).collect();
        let prob = problem(&target, Pose::new(2.5, 2.0, 0.3));
        let x: Vec<f64> = (0..40).map(|i| 0.1 + 0.05 * (i as f64 * 0.4).cos()).collect();
        let mu = 37.0;
        let mut grad = vec![0.0; 40];
        prob.evaluate(&x, mu, &mut grad);

        // central differences along projected unit directions e_i − mean
        let mut scratch = vec![0.0; 40];
        for i in [0, 1, 7, 20, 39] {
            let mut dir = vec![-1.0 / 40.0; 40];
            dir[i] += 1.0;
            let h = 1e-6;
            let plus: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + h * d).collect();
            let minus: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a - h * d).collect();
            let fd = (prob.evaluate(&plus, mu, &mut scratch) - prob.evaluate(&minus, mu, &mut scratch))
                / (2.0 * h);
            let analytic = dot(&grad, &dir);
            assert!(
                (fd - analytic).abs() <= 1e-5 * (1.0 + analytic.abs()),
                "i={i} fd={fd} analytic={analytic}"
            );
        }
    }

    #[test]
    fn feasible_target_is_returned_unchanged() {
        let start = Pose::new(2.0, 2.0, std::f64::consts::FRAC_PI_4);
        let target = PolyPath::straight(start, 0.05, 40).unwrap();
        let corr = transform_path(&target, &RoomSpec::default(), start, &TransformConfig::default()).unwrap();
        assert_eq!(corr.objective_value(), 0.0);
        assert_eq!(corr.user_path().curvatures, target.curvatures);
    }

    #[test]
    fn start_outside_room_is_rejected() {
        let target = PolyPath::straight(Pose::new(0.0, 0.0, 0.0), 0.05, 40).unwrap();
        let err = transform_path(
            &target,
            &RoomSpec::default(),
            Pose::new(0.1, 2.0, 0.0),
            &TransformConfig::default(),
        );
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn impossible_room_reports_residual() {
        // a 4 cm walkable square with the optimizer disabled: neither the
        // straight target nor the smallest loop profile fits.
        let room = RoomSpec::new(0.64, 0.64, 0.3).unwrap();
        let start = Pose::new(0.32, 0.32, 0.0);
        let target = PolyPath::straight(start, 0.05, 40).unwrap();
        let cfg = TransformConfig {
            inner_iterations: 0,
            ..TransformConfig::default()
        };
        match transform_path(&target, &room, start, &cfg) {
            Err(Error::Infeasible { residual }) => assert!(residual > 1e-3),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }
}
