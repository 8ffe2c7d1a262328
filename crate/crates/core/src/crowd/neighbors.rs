use std::collections::HashMap;

use glam::DVec2;

use crate::registry::Registry;

/// Candidate-pair generator. Implementations may over-report; callers filter
/// by distance and visit candidates in ascending index order.
pub trait NeighborSearch: Send {
    fn name(&self) -> &'static str;

    /// Indexes `points`; `None` entries are inactive and never reported.
    fn rebuild(&mut self, points: &[Option<DVec2>], cutoff: f64);

    /// Appends candidate indices for point `i` (excluding `i`) to `out`,
    /// sorted ascending.
    fn candidates(&self, i: usize, out: &mut Vec<usize>);
}

/// Every active point is a candidate.
#[derive(Debug, Default)]
pub struct BruteForce {
    active: Vec<usize>,
}

impl NeighborSearch for BruteForce {
    fn name(&self) -> &'static str {
        "brute"
    }

    fn rebuild(&mut self, points: &[Option<DVec2>], _cutoff: f64) {
        self.active = points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|_| i))
            .collect();
    }

    fn candidates(&self, i: usize, out: &mut Vec<usize>) {
        out.extend(self.active.iter().copied().filter(|&j| j != i));
    }
}

/// Uniform spatial hash with cells one cutoff wide.
#[derive(Debug, Default)]
pub struct SpatialHash {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    keys: Vec<Option<(i64, i64)>>,
}

impl SpatialHash {
    fn key(&self, p: DVec2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }
}

impl NeighborSearch for SpatialHash {
    fn name(&self) -> &'static str {
        "grid"
    }

    fn rebuild(&mut self, points: &[Option<DVec2>], cutoff: f64) {
        self.cell = cutoff.max(1e-6);
        self.cells.clear();
        self.keys.clear();
        for (i, p) in points.iter().enumerate() {
            let key = p.map(|p| self.key(p));
            if let Some(k) = key {
                self.cells.entry(k).or_default().push(i);
            }
            self.keys.push(key);
        }
    }

    fn candidates(&self, i: usize, out: &mut Vec<usize>) {
        let Some((cx, cy)) = self.keys.get(i).copied().flatten() else {
            return;
        };
        let start = out.len();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(members) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend(members.iter().copied().filter(|&j| j != i));
                }
            }
        }
        out[start..].sort_unstable();
    }
}

pub fn neighbor_registry() -> Registry<dyn NeighborSearch, ()> {
    Registry::new("neighbor search")
        .with("grid", make_grid)
        .with("brute", make_brute)
}

fn make_grid(_: &()) -> Box<dyn NeighborSearch> {
    Box::new(SpatialHash::default())
}

fn make_brute(_: &()) -> Box<dyn NeighborSearch> {
    Box::new(BruteForce::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn grid_reports_every_close_pair(
            pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, any::<bool>()), 1..60),
            cutoff in 0.2f64..3.0,
        ) {
            let points: Vec<Option<DVec2>> = pts
                .iter()
                .map(|&(x, y, on)| on.then_some(DVec2::new(x, y)))
                .collect();
            let mut grid = SpatialHash::default();
            grid.rebuild(&points, cutoff);
            let mut out = Vec::new();
            for (i, p) in points.iter().enumerate() {
                out.clear();
                grid.candidates(i, &mut out);
                prop_assert!(out.windows(2).all(|w| w[0] < w[1]));
                let Some(p) = p else { prop_assert!(out.is_empty()); continue };
                for (j, q) in points.iter().enumerate() {
                    if let Some(q) = q {
                        if j != i && (*p - *q).length() < cutoff {
                            prop_assert!(out.contains(&j));
                        }
                    }
                }
            }
        }
    }
}
