use glam::DVec2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The physical room, `[0, width] × [0, height]`, walkable inside `margin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
}

impl Default for RoomSpec {
    fn default() -> Self {
        Self {
            width: 4.0,
            height: 4.0,
            margin: 0.3,
        }
    }
}

impl RoomSpec {
    pub fn new(width: f64, height: f64, margin: f64) -> Result<Self> {
        let room = Self {
            width,
            height,
            margin,
        };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.width.is_finite() && self.height.is_finite() && self.margin.is_finite();
        if !finite || self.margin < 0.0 || self.width <= 2.0 * self.margin || self.height <= 2.0 * self.margin {
            return Err(Error::invalid(format!(
                "room {}x{} with margin {} has no feasible region",
                self.width, self.height, self.margin
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> DVec2 {
        DVec2::new(0.5 * self.width, 0.5 * self.height)
    }

    /// Feasible rectangle, shrunk by an extra `buffer`.
    pub fn inset(&self, buffer: f64) -> (DVec2, DVec2) {
        let m = self.margin + buffer;
        (DVec2::new(m, m), DVec2::new(self.width - m, self.height - m))
    }

    /// Distance from `p` to the feasible rectangle (0 inside).
    pub fn violation(&self, p: DVec2) -> f64 {
        let (lo, hi) = self.inset(0.0);
        (p - p.clamp(lo, hi)).length()
    }

    pub fn contains(&self, p: DVec2) -> bool {
        self.violation(p) == 0.0
    }

    pub fn clamp(&self, p: DVec2) -> DVec2 {
        let (lo, hi) = self.inset(0.0);
        p.clamp(lo, hi)
    }

    pub fn contains_in_rect(&self, p: DVec2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width && p.y <= self.height
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_room_smaller_than_margins() {
        assert!(RoomSpec::new(0.5, 4.0, 0.3).is_err());
        assert!(RoomSpec::new(4.0, 4.0, 0.3).is_ok());
    }

    #[test]
    fn violation_and_clamp() {
        let room = RoomSpec::default();
        assert_eq!(room.violation(DVec2::new(2.0, 2.0)), 0.0);
        assert!((room.violation(DVec2::new(3.9, 2.0)) - 0.2).abs() < 1e-12);
        assert_eq!(room.clamp(DVec2::new(-1.0, 5.0)), DVec2::new(0.3, 3.7));
    }
}
