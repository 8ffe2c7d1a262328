use std::path::Path;

use glam::DVec2;
use serde::{Deserialize, Serialize};

use super::{ForceParams, GateChoiceParams, Wall};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub id: u32,
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Gate {
    pub fn a(&self) -> DVec2 {
        DVec2::from(self.a)
    }

    pub fn b(&self) -> DVec2 {
        DVec2::from(self.b)
    }

    pub fn midpoint(&self) -> DVec2 {
        0.5 * (self.a() + self.b())
    }

    pub fn width(&self) -> f64 {
        (self.b() - self.a()).length()
    }
}

/// Simple polygon, vertices in order, implicitly closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon(pub Vec<[f64; 2]>);

impl Polygon {
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn points(&self) -> impl Iterator<Item = DVec2> + '_ {
        self.0.iter().map(|&p| DVec2::from(p))
    }

    pub fn area(&self) -> f64 {
        let pts: Vec<DVec2> = self.points().collect();
        let n = pts.len();
        (0..n)
            .map(|i| pts[i].perp_dot(pts[(i + 1) % n]))
            .sum::<f64>()
            .abs()
            * 0.5
    }

    pub fn centroid(&self) -> DVec2 {
        let pts: Vec<DVec2> = self.points().collect();
        let n = pts.len();
        let mut c = DVec2::ZERO;
        let mut twice_area = 0.0;
        for i in 0..n {
            let (p, q) = (pts[i], pts[(i + 1) % n]);
            let w = p.perp_dot(q);
            twice_area += w;
            c += (p + q) * w;
        }
        c / (3.0 * twice_area)
    }

    /// Even-odd point test.
    pub fn contains(&self, p: DVec2) -> bool {
        let pts: Vec<DVec2> = self.points().collect();
        let n = pts.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (pts[i], pts[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    pub fn bounds(&self) -> (DVec2, DVec2) {
        self.points()
            .fold((DVec2::splat(f64::INFINITY), DVec2::splat(f64::NEG_INFINITY)), |(lo, hi), p| {
                (lo.min(p), hi.max(p))
            })
    }
}

fn segments_cross(a: DVec2, b: DVec2, c: DVec2, d: DVec2) -> bool {
    let o1 = (b - a).perp_dot(c - a);
    let o2 = (b - a).perp_dot(d - a);
    let o3 = (d - c).perp_dot(a - c);
    let o4 = (d - c).perp_dot(b - c);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn polygons_disjoint(p: &Polygon, q: &Polygon) -> bool {
    let pe: Vec<DVec2> = p.points().collect();
    let qe: Vec<DVec2> = q.points().collect();
    if pe.iter().any(|&v| q.contains(v)) || qe.iter().any(|&v| p.contains(v)) {
        return false;
    }
    for i in 0..pe.len() {
        for j in 0..qe.len() {
            if segments_cross(pe[i], pe[(i + 1) % pe.len()], qe[j], qe[(j + 1) % qe.len()]) {
                return false;
            }
        }
    }
    true
}

fn default_dt() -> f64 {
    0.02
}
fn default_time_cap() -> f64 {
    600.0
}
fn default_every() -> u32 {
    5
}

/// Crowd scenario as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub walls: Vec<Wall>,
    pub gates: Vec<Gate>,
    pub spawn_surface: Polygon,
    pub goal_surface: Polygon,
    pub spawn_count: usize,
    /// pedestrians per second
    pub spawn_rate: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_time_cap")]
    pub time_cap: f64,
    /// trajectory rows are written every this many ticks
    #[serde(default = "default_every")]
    pub trajectory_every: u32,
    #[serde(default)]
    pub params: ForceParams,
    #[serde(default)]
    pub gate_choice: GateChoiceParams,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.gate_choice.validate()?;
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(Error::invalid(format!("dt must lie in (0, 0.1], got {}", self.dt)));
        }
        if !(self.time_cap > 0.0 && self.time_cap.is_finite()) {
            return Err(Error::invalid("time cap must be positive"));
        }
        if !(self.spawn_rate > 0.0 && self.spawn_rate.is_finite()) {
            return Err(Error::invalid("spawn rate must be positive"));
        }
        if self.trajectory_every == 0 {
            return Err(Error::invalid("trajectory decimation must be at least 1"));
        }
        if self.gates.is_empty() {
            return Err(Error::invalid("scenario has no gates"));
        }
        for (i, g) in self.gates.iter().enumerate() {
            if self.gates[..i].iter().any(|h| h.id == g.id) {
                return Err(Error::invalid(format!("duplicate gate id {}", g.id)));
            }
            if !(g.width() > 0.0) {
                return Err(Error::invalid(format!("gate {} has zero width", g.id)));
            }
        }
        for (label, poly) in [("spawn", &self.spawn_surface), ("goal", &self.goal_surface)] {
            if poly.0.len() < 3 || !(poly.area() > 1e-9) {
                return Err(Error::invalid(format!("{label} surface is degenerate")));
            }
        }
        if !polygons_disjoint(&self.spawn_surface, &self.goal_surface) {
            return Err(Error::invalid("spawn and goal surfaces overlap"));
        }
        Ok(())
    }

    /// Gate indices ordered by distance from the spawn-surface centroid.
    pub fn gate_ranking(&self) -> Vec<usize> {
        let c = self.spawn_surface.centroid();
        let mut order: Vec<usize> = (0..self.gates.len()).collect();
        order.sort_by(|&a, &b| {
            let da = (self.gates[a].midpoint() - c).length();
            let db = (self.gates[b].midpoint() - c).length();
            da.total_cmp(&db).then(a.cmp(&b))
        });
        order
    }

    /// 20 × 12 m hall with four 1 m gates in the right wall.
    pub fn four_gate_hall() -> Self {
        let (w, h) = (20.0, 12.0);
        let gate_centres = [2.0, 4.0, 6.0, 8.0];
        let mut walls = vec![
            Wall::from([0.0, 0.0, w, 0.0]),
            Wall::from([0.0, h, w, h]),
            Wall::from([0.0, 0.0, 0.0, h]),
        ];
        let mut y = 0.0;
        for c in gate_centres {
            walls.push(Wall::from([w, y, w, c - 0.5]));
            y = c + 0.5;
        }
        walls.push(Wall::from([w, y, w, h]));
        let gates = gate_centres
            .iter()
            .enumerate()
            .map(|(i, &c)| Gate {
                id: i as u32,
                a: [w, c - 0.5],
                b: [w, c + 0.5],
            })
            .collect();
        Self {
            name: "four_gate_hall".into(),
            walls,
            gates,
            spawn_surface: Polygon::rect(0.5, 1.0, 4.5, 3.0),
            goal_surface: Polygon::rect(20.5, 0.0, 23.0, 12.0),
            spawn_count: 150,
            spawn_rate: 2.0,
            rng_seed: 7,
            dt: default_dt(),
            time_cap: default_time_cap(),
            trajectory_every: default_every(),
            params: ForceParams::default(),
            gate_choice: GateChoiceParams::default(),
        }
    }
}
