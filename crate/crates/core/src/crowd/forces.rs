use glam::DVec2;
use serde::{Deserialize, Serialize};

use super::ForceParams;
use crate::geometry::perp;

/// Straight wall segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Wall {
    pub a: DVec2,
    pub b: DVec2,
}

impl From<[f64; 4]> for Wall {
    fn from(v: [f64; 4]) -> Self {
        Wall::new(DVec2::new(v[0], v[1]), DVec2::new(v[2], v[3]))
    }
}

impl From<Wall> for [f64; 4] {
    fn from(w: Wall) -> Self {
        [w.a.x, w.a.y, w.b.x, w.b.y]
    }
}

impl Wall {
    pub fn new(a: DVec2, b: DVec2) -> Self {
        Self { a, b }
    }

    pub fn closest_point(&self, p: DVec2) -> DVec2 {
        let ab = self.b - self.a;
        let len2 = ab.length_squared();
        if len2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(ab) / len2).clamp(0.0, 1.0);
        self.a + ab * t
    }
}

/// Kinematic state of a disc body as seen by the force laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Body {
    pub id: u64,
    pub position: DVec2,
    pub velocity: DVec2,
    pub radius: f64,
}

fn positive(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// `m·(v⁰·e − v)/τ` with `e` the unit vector toward `goal`.
pub fn driving_force(
    position: DVec2,
    velocity: DVec2,
    desired_speed: f64,
    goal: DVec2,
    params: &ForceParams,
) -> DVec2 {
    let e = (goal - position).normalize_or_zero();
    params.mass * (desired_speed * e - velocity) / params.tau
}

fn interaction(
    normal: DVec2,
    distance: f64,
    radii: f64,
    relative_velocity: DVec2,
    params: &ForceParams,
) -> DVec2 {
    let overlap = positive(radii - distance);
    let tangent = perp(normal);
    let repulsion = if params.a == 0.0 {
        0.0
    } else {
        params.a * ((radii - distance) / params.b).exp()
    };
    let normal_part = (repulsion + params.k * overlap) * normal;
    let sliding = params.kappa * overlap * relative_velocity.dot(tangent);
    normal_part + sliding * tangent
}

/// Force on `a` from `b`. Coincident centres fall back to the ±x normal
/// chosen by id order, so the pair still gets equal and opposite forces.
/// The second value reports whether that fallback was used.
pub fn pair_force(a: &Body, b: &Body, params: &ForceParams) -> (DVec2, bool) {
    let delta = a.position - b.position;
    let distance = delta.length();
    let coincident = distance < 1e-9;
    let normal = if coincident {
        if a.id < b.id {
            DVec2::X
        } else {
            -DVec2::X
        }
    } else {
        delta / distance
    };
    let f = interaction(normal, distance, a.radius + b.radius, b.velocity - a.velocity, params);
    (f, coincident)
}

/// Force on a body from a static wall.
pub fn wall_force(body: &Body, wall: &Wall, params: &ForceParams) -> (DVec2, bool) {
    let closest = wall.closest_point(body.position);
    let delta = body.position - closest;
    let distance = delta.length();
    let coincident = distance < 1e-9;
    let normal = if coincident {
        perp(wall.b - wall.a).normalize_or(DVec2::X)
    } else {
        delta / distance
    };
    let f = interaction(normal, distance, body.radius, -body.velocity, params);
    (f, coincident)
}

pub fn overlaps(a: &Body, b: &Body) -> bool {
    (a.position - b.position).length() < a.radius + b.radius
}

pub fn overlaps_wall(body: &Body, wall: &Wall) -> bool {
    (body.position - wall.closest_point(body.position)).length() < body.radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn body(id: u64, x: f64, y: f64, r: f64) -> Body {
        Body {
            id,
            position: DVec2::new(x, y),
            velocity: DVec2::ZERO,
            radius: r,
        }
    }

    fn contact_only() -> ForceParams {
        ForceParams {
            a: 0.0,
            ..ForceParams::default()
        }
    }

    #[test]
    fn driving_examples() {
        let p = ForceParams::default();
        let f = driving_force(DVec2::ZERO, DVec2::ZERO, 1.0, DVec2::new(5.0, 0.0), &p);
        assert_eq!(f, DVec2::new(160.0, 0.0));
        let f = driving_force(DVec2::ZERO, DVec2::X, 1.0, DVec2::new(5.0, 0.0), &p);
        assert_eq!(f, DVec2::ZERO);
        let f = driving_force(DVec2::ZERO, DVec2::X, 1.0, DVec2::new(0.0, 5.0), &p);
        assert_eq!(f, DVec2::new(-160.0, 160.0));
        let f = driving_force(DVec2::ZERO, DVec2::X, 1.0, DVec2::ZERO, &p);
        assert_eq!(f, DVec2::new(-160.0, 0.0));
    }

    #[test]
    fn no_contact_no_force() {
        let (f, _) = pair_force(&body(0, 0.0, 0.0, 0.3), &body(1, 1.1, 0.0, 0.3), &contact_only());
        assert_eq!(f, DVec2::ZERO);
    }

    #[test]
    fn compression_and_friction() {
        // overlap 0.01: k·0.01 = 1200 N normal, κ·0.01·1 = 2400 N tangential.
        let a = body(0, 0.0, 0.0, 0.3);
        let mut b = body(1, 0.59, 0.0, 0.3);
        let (f, _) = pair_force(&a, &b, &contact_only());
        assert_abs_diff_eq!(f.x, -1200.0, epsilon = 1e-6);
        assert_abs_diff_eq!(f.y, 0.0);
        b.velocity = DVec2::new(0.0, 1.0);
        let (f, _) = pair_force(&a, &b, &contact_only());
        // b slides past a in +y, friction on a drags it along +y.
        assert_abs_diff_eq!(f.y, 2400.0, epsilon = 1e-6);
    }

    #[test]
    fn wall_examples() {
        let w = Wall::new(DVec2::new(-5.0, 0.0), DVec2::new(5.0, 0.0));
        let p = contact_only();
        let (f, _) = wall_force(&body(0, 0.0, 1.0, 0.3), &w, &p);
        assert_eq!(f, DVec2::ZERO);
        let (f, _) = wall_force(&body(0, 0.0, 0.295, 0.3), &w, &p);
        assert_abs_diff_eq!(f.y, 600.0, epsilon = 1e-6);
        assert_abs_diff_eq!(f.x, 0.0);
        let mut slider = body(0, 0.0, 0.295, 0.3);
        slider.velocity = DVec2::new(1.0, 0.0);
        let (f, _) = wall_force(&slider, &w, &p);
        assert!(f.x < 0.0);
    }

    #[test]
    fn coincident_fallback_is_antisymmetric() {
        let a = body(3, 1.0, 1.0, 0.3);
        let b = body(9, 1.0, 1.0, 0.3);
        let p = ForceParams::default();
        let (fa, ca) = pair_force(&a, &b, &p);
        let (fb, cb) = pair_force(&b, &a, &p);
        assert!(ca && cb);
        assert_eq!(fa, -fb);
        assert!(fa.x > 0.0);
    }
}
