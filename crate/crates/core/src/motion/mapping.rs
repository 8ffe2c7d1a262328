use serde::{Deserialize, Serialize};

use crate::geometry::{PathFrame, PolyPath, Pose, Projection};
use crate::{Error, Result};

/// A target path paired with the user path it was folded into. Points at
/// equal arc length correspond.
#[derive(Debug, Clone)]
pub struct Correspondence {
    target: PolyPath,
    user: PolyPath,
    objective: f64,
    target_frame: PathFrame,
    user_frame: PathFrame,
}

impl Correspondence {
    pub fn new(target: PolyPath, user: PolyPath) -> Result<Self> {
        if target.ds != user.ds || target.segments() != user.segments() {
            return Err(Error::invalid(format!(
                "paths disagree: ds {} vs {}, {} vs {} segments",
                target.ds,
                user.ds,
                target.segments(),
                user.segments()
            )));
        }
        let objective = target
            .curvatures
            .iter()
            .zip(&user.curvatures)
            .map(|(t, u)| (u - t) * (u - t))
            .sum::<f64>()
            * target.ds;
        Ok(Self {
            target_frame: target.frame(),
            user_frame: user.frame(),
            target,
            user,
            objective,
        })
    }

    /// Both paths equal.
    pub fn identity(path: PolyPath) -> Self {
        Self::new(path.clone(), path).expect("identical paths always correspond")
    }

    pub fn target_path(&self) -> &PolyPath {
        &self.target
    }

    pub fn user_path(&self) -> &PolyPath {
        &self.user
    }

    pub fn target_frame(&self) -> &PathFrame {
        &self.target_frame
    }

    pub fn user_frame(&self) -> &PathFrame {
        &self.user_frame
    }

    /// `Σ (κ_u − κ_t)² ds`.
    pub fn objective_value(&self) -> f64 {
        self.objective
    }

    pub fn length(&self) -> f64 {
        self.user.length()
    }

    /// The same correspondence read from the target side.
    pub fn inverse(&self) -> Self {
        Self {
            target: self.user.clone(),
            user: self.target.clone(),
            objective: self.objective,
            target_frame: self.user_frame.clone(),
            user_frame: self.target_frame.clone(),
        }
    }

    pub fn dump(&self) -> CorrespondenceDump {
        CorrespondenceDump {
            ds: self.target.ds,
            target: self.target.point_pairs(),
            user: self.user.point_pairs(),
            objective: self.objective,
        }
    }
}

/// Debug view of a correspondence: both paths as point arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrespondenceDump {
    pub ds: f64,
    pub target: Vec<[f64; 2]>,
    pub user: Vec<[f64; 2]>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedPose {
    pub pose: Pose,
    /// Where the user pose sits on the user path.
    pub user: Projection,
    /// Tangent of the target path at the same arc length.
    pub target_tangent: f64,
}

impl Correspondence {
    /// Full mapping result, including the projection used.
    pub fn map(&self, user_pose: &Pose) -> MappedPose {
        let proj = self.user_frame.project(user_pose.position());
        self.map_projected(user_pose, proj)
    }

    /// [`Correspondence::map`] for a walker last seen at arc length
    /// `s_hint`: only path points within `window` of it are candidates.
    pub fn map_near(&self, user_pose: &Pose, s_hint: f64, window: f64) -> MappedPose {
        let proj = self
            .user_frame
            .project_near(user_pose.position(), s_hint - window, s_hint + window);
        self.map_projected(user_pose, proj)
    }

    fn map_projected(&self, user_pose: &Pose, proj: Projection) -> MappedPose {
        let relative = user_pose.heading - proj.tangent;
        let (_, target_tangent) = self.target_frame.at(proj.s);
        let p = self.target_frame.point(proj.s, proj.d);
        MappedPose {
            pose: Pose::from_point(p, target_tangent + relative),
            user: proj,
            target_tangent,
        }
    }
}

/// Carries a user-room pose to the target environment, keeping its arc
/// length, lateral offset and heading relative to the path.
pub fn map_pose(user_pose: &Pose, corr: &Correspondence) -> Pose {
    corr.map(user_pose).pose
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::normalize_angle;
    use approx::assert_abs_diff_eq;
    use glam::DVec2;

    #[test]
    fn start_maps_to_start() {
        let target = PolyPath::straight(Pose::new(10.0, 5.0, 1.0), 0.1, 30).unwrap();
        let user = PolyPath::new(Pose::new(2.0, 2.0, 0.0), 0.1, vec![0.5; 30]).unwrap();
        let corr = Correspondence::new(target.clone(), user.clone()).unwrap();
        let mapped = map_pose(&user.start, &corr);
        assert_abs_diff_eq!(mapped.x, target.start.x, epsilon = 1e-12);
        assert_abs_diff_eq!(mapped.y, target.start.y, epsilon = 1e-12);
        assert_abs_diff_eq!(mapped.heading, target.start.heading, epsilon = 1e-12);
    }

    #[test]
    fn identity_correspondence_is_identity() {
        let ks: Vec<f64> = (0..120).map(|i| 0.4 * (i as f64 * 0.03).sin()).collect();
        let path = PolyPath::new(Pose::new(1.0, 1.0, 0.2), 0.05, ks).unwrap();
        let corr = Correspondence::identity(path);
        for pose in [Pose::new(1.5, 1.3, 0.1), Pose::new(3.0, 2.0, -0.4), Pose::new(2.0, 1.0, 2.0)] {
            let out = map_pose(&pose, &corr);
            assert_abs_diff_eq!(out.x, pose.x, epsilon = 1e-9);
            assert_abs_diff_eq!(out.y, pose.y, epsilon = 1e-9);
            assert_abs_diff_eq!(normalize_angle(out.heading - pose.heading), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn lateral_offset_is_preserved() {
        // straight target along x, user path a left arc of radius 2.
        let ds = 0.05;
        let n = 200;
        let target = PolyPath::straight(Pose::new(0.0, 0.0, 0.0), ds, n).unwrap();
        let user = PolyPath::new(Pose::new(0.0, 0.0, 0.0), ds, vec![0.5; n]).unwrap();
        let corr = Correspondence::new(target, user.clone()).unwrap();
        // frame algebra oracle: at s = 5 the user vertex index is 100 and the
        // tangent there is the bisector of the adjacent chords.
        let poses = user.reconstruct();
        let at = poses[100];
        let left = DVec2::new(-at.heading.sin(), at.heading.cos());
        let q = at.position() + 0.1 * left;
        let out = map_pose(&Pose::from_point(q, at.heading), &corr);
        assert_abs_diff_eq!(out.x, 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.y, 0.1, epsilon = 1e-9);
        assert_abs_diff_eq!(out.heading, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn mismatched_paths_rejected() {
        let a = PolyPath::straight(Pose::new(0.0, 0.0, 0.0), 0.1, 10).unwrap();
        let b = PolyPath::straight(Pose::new(0.0, 0.0, 0.0), 0.1, 11).unwrap();
        assert!(Correspondence::new(a, b).is_err());
    }
}
