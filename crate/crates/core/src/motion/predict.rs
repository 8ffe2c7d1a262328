use glam::DVec2;

use crate::geometry::{normalize_angle, PolyPath, Pose};
use crate::registry::Registry;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorConfig {
    pub goal_window: f64,
}

/// Forecasts the avatar's intended path in the target environment.
pub trait PathPredictor: Send + Sync {
    fn name(&self) -> &'static str;

    fn predict(&self, avatar: &Pose, goals: &[DVec2], horizon: f64, ds: f64) -> Result<PolyPath>;
}

/// Ignores the environment and extends the view direction.
#[derive(Debug, Clone, Copy, Default)]
pub struct ViewRayPredictor;

impl PathPredictor for ViewRayPredictor {
    fn name(&self) -> &'static str {
        "view"
    }

    fn predict(&self, avatar: &Pose, _goals: &[DVec2], horizon: f64, ds: f64) -> Result<PolyPath> {
        view_ray(avatar, horizon, ds)
    }
}

/// Bends toward the nearest goal when it lies inside the heading window,
/// otherwise falls back to the view ray.
#[derive(Debug, Clone, Copy)]
pub struct GoalSnapPredictor {
    pub window: f64,
}

impl PathPredictor for GoalSnapPredictor {
    fn name(&self) -> &'static str {
        "goal"
    }

    fn predict(&self, avatar: &Pose, goals: &[DVec2], horizon: f64, ds: f64) -> Result<PolyPath> {
        predict_target_path(avatar, goals, horizon, self.window, ds)
    }
}

pub fn predictor_registry() -> Registry<dyn PathPredictor, PredictorConfig> {
    Registry::new("path predictor")
        .with("view", make_view)
        .with("goal", make_goal)
}

fn make_view(_: &PredictorConfig) -> Box<dyn PathPredictor> {
    Box::new(ViewRayPredictor)
}

fn make_goal(c: &PredictorConfig) -> Box<dyn PathPredictor> {
    Box::new(GoalSnapPredictor { window: c.goal_window })
}

fn check_horizon(horizon: f64, ds: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(Error::invalid(format!("segment length must be positive, got {ds}")));
    }
    Ok(())
}

fn view_ray(avatar: &Pose, horizon: f64, ds: f64) -> Result<PolyPath> {
    check_horizon(horizon, ds)?;
    let n = segments_for(horizon, ds);
    PolyPath::straight(*avatar, horizon / n as f64, n)
}

fn segments_for(length: f64, ds: f64) -> usize {
    ((length / ds - 1e-9).ceil() as usize).max(1)
}

/// Predicted target path from the avatar pose.
///
/// With no goal inside `±window` of the heading this is a straight ray of
/// length `horizon`. Otherwise it is the constant-curvature arc tangent to
/// the heading that ends exactly on the nearest goal; the segment length is
/// adjusted (never above `ds`) so the polygon closes on the goal.
pub fn predict_target_path(
    avatar: &Pose,
    goals: &[DVec2],
    horizon: f64,
    window: f64,
    ds: f64,
) -> Result<PolyPath> {
    check_horizon(horizon, ds)?;
    let here = avatar.position();
    let nearest = goals
        .iter()
        .copied()
        .filter(|g| (*g - here).length() > 1e-6)
        .min_by(|a, b| (*a - here).length().total_cmp(&(*b - here).length()));
    let Some(goal) = nearest else {
        return view_ray(avatar, horizon, ds);
    };
    let to_goal = goal - here;
    let dist = to_goal.length();
    let bearing = normalize_angle(to_goal.y.atan2(to_goal.x) - avatar.heading);
    if bearing.abs() > window {
        return view_ray(avatar, horizon, ds);
    }
    if bearing.abs() < 1e-12 {
        let n = segments_for(dist, ds);
        return PolyPath::straight(*avatar, dist / n as f64, n);
    }
    let arc_length = dist * bearing / bearing.sin();
    let n = segments_for(arc_length, ds);
    let turn = 2.0 * bearing / n as f64;
    let seg = dist * (0.5 * turn).sin() / bearing.sin();
    PolyPath::new(*avatar, seg, vec![turn / seg; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn no_goals_gives_view_ray() {
        let path = predict_target_path(&Pose::new(0.0, 0.0, 0.0), &[], 3.0, 0.5, 0.05).unwrap();
        assert_abs_diff_eq!(path.length(), 3.0, epsilon = 1e-12);
        assert!(path.curvatures.iter().all(|&k| k == 0.0));
        let end = *path.vertices().last().unwrap();
        assert_abs_diff_eq!(end.x, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(end.y, 0.0);
    }

    #[test]
    fn goal_on_axis_is_straight() {
        let goals = [DVec2::new(3.0, 0.0)];
        let path = predict_target_path(&Pose::new(0.0, 0.0, 0.0), &goals, 3.0, 30f64.to_radians(), 0.05)
            .unwrap();
        assert!(path.curvatures.iter().all(|&k| k == 0.0));
        assert_abs_diff_eq!(path.length(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn goal_outside_window_falls_back() {
        let goals = [DVec2::new(2.0, 2.0)];
        let avatar = Pose::new(0.0, 0.0, 0.0);
        let narrow = predict_target_path(&avatar, &goals, 3.0, 30f64.to_radians(), 0.05).unwrap();
        assert!(narrow.curvatures.iter().all(|&k| k == 0.0));
        assert_abs_diff_eq!(narrow.length(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn goal_inside_window_closes_on_goal() {
        // closed-form oracle: the circle tangent to the x axis at the origin
        // through (2, 2) has radius 2 and the arc to it is a quarter turn.
        let goals = [DVec2::new(2.0, 2.0)];
        let path = predict_target_path(&Pose::new(0.0, 0.0, 0.0), &goals, 3.0, 60f64.to_radians(), 0.05)
            .unwrap();
        let end = *path.vertices().last().unwrap();
        assert_abs_diff_eq!(end.x, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(end.y, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(path.turning_angle(), std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        for v in path.vertices() {
            assert!(((v - DVec2::new(0.0, 2.0)).length() - 2.0).abs() < 1e-3);
        }
    }

    #[test]
    fn registry_selects_by_name() {
        let reg = predictor_registry();
        let cfg = PredictorConfig { goal_window: 1.0 };
        let goals = [DVec2::new(2.0, 1.0)];
        let avatar = Pose::new(0.0, 0.0, 0.0);
        let view = reg.create("view", &cfg).unwrap().predict(&avatar, &goals, 2.0, 0.1).unwrap();
        assert_eq!(view.turning_angle(), 0.0);
        let goal = reg.create("goal", &cfg).unwrap().predict(&avatar, &goals, 2.0, 0.1).unwrap();
        assert!(goal.turning_angle() > 0.0);
        assert!(reg.create("spline", &cfg).is_err());
    }

    #[test]
    fn rejects_bad_horizon() {
        assert!(predict_target_path(&Pose::new(0.0, 0.0, 0.0), &[], 0.0, 0.5, 0.05).is_err());
    }
}
