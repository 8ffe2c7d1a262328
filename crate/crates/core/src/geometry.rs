//! Arc-length paths stored as curvature profiles.
//!
//! A [`PolyPath`] is a start pose, a uniform segment length `ds` and one
//! signed curvature per segment (positive turns left). Points are derived:
//! chord `k` leaves vertex `k` with direction
//!
//! ```text
//! θ_0 = h_0 + κ_0·ds/2,    θ_k = θ_{k-1} + κ_k·ds
//! ```
//!
//! so the polyline has length exactly `n·ds`, constant curvature produces a
//! regular polygon inscribed in the circle of radius `1/κ` tangent to the
//! start heading, and the curvature of every interior segment is recovered
//! locally from the turn between consecutive chords.

use std::f64::consts::{PI, TAU};

use glam::DVec2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_DS: f64 = 0.05;

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

pub fn unit(angle: f64) -> DVec2 {
    let (s, c) = angle.sin_cos();
    DVec2::new(c, s)
}

/// Left normal.
pub fn perp(v: DVec2) -> DVec2 {
    DVec2::new(-v.y, v.x)
}

/// z-component of `a × b`.
pub fn cross(a: DVec2, b: DVec2) -> f64 {
    a.x * b.y - a.y * b.x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn from_point(p: DVec2, heading: f64) -> Self {
        Self::new(p.x, p.y, heading)
    }

    pub fn position(&self) -> DVec2 {
        DVec2::new(self.x, self.y)
    }

    pub fn direction(&self) -> DVec2 {
        unit(self.heading)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyPath {
    pub start: Pose,
    pub ds: f64,
    pub curvatures: Vec<f64>,
}

impl PolyPath {
    pub fn new(start: Pose, ds: f64, curvatures: Vec<f64>) -> Result<Self> {
        if !(ds > 0.0 && ds.is_finite()) {
            return Err(Error::invalid(format!("segment length must be positive, got {ds}")));
        }
        if !start.is_finite() || curvatures.iter().any(|k| !k.is_finite()) {
            return Err(Error::invalid("path contains non-finite values"));
        }
        Ok(Self {
            start: Pose::new(start.x, start.y, start.heading),
            ds,
            curvatures,
        })
    }

    /// Straight path of `segments` pieces.
    pub fn straight(start: Pose, ds: f64, segments: usize) -> Result<Self> {
        Self::new(start, ds, vec![0.0; segments])
    }

    /// Inverse of [`PolyPath::vertices`] when the start heading is known.
    ///
    /// Consecutive vertices must be `ds` apart.
    pub fn from_vertices(vertices: &[DVec2], start_heading: f64, ds: f64) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::invalid("need at least two vertices"));
        }
        let chords = chord_angles(vertices);
        let mut curvatures = Vec::with_capacity(chords.len());
        curvatures.push(2.0 * normalize_angle(chords[0] - start_heading) / ds);
        for w in chords.windows(2) {
            curvatures.push((w[1] - w[0]) / ds);
        }
        Self::new(
            Pose::from_point(vertices[0], start_heading),
            ds,
            curvatures,
        )
    }

    pub fn segments(&self) -> usize {
        self.curvatures.len()
    }

    pub fn length(&self) -> f64 {
        self.segments() as f64 * self.ds
    }

    pub fn turning_angle(&self) -> f64 {
        self.curvatures.iter().map(|k| k * self.ds).sum()
    }

    /// Unwrapped chord directions, one per segment.
    pub fn chord_directions(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments());
        let mut theta = 0.0;
        for (i, k) in self.curvatures.iter().enumerate() {
            theta = if i == 0 {
                self.start.heading + 0.5 * k * self.ds
            } else {
                theta + k * self.ds
            };
            out.push(theta);
        }
        out
    }

    pub fn vertices(&self) -> Vec<DVec2> {
        let mut out = Vec::with_capacity(self.segments() + 1);
        let mut p = self.start.position();
        out.push(p);
        for theta in self.chord_directions() {
            p += self.ds * unit(theta);
            out.push(p);
        }
        out
    }

    /// Unwrapped tangent direction at every vertex: the start heading, the
    /// bisector of adjacent chords in the interior, and the last chord turned
    /// by half its curvature at the end.
    pub fn vertex_tangents(&self) -> Vec<f64> {
        let n = self.segments();
        let chords = self.chord_directions();
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.start.heading);
        for k in 1..n {
            out.push(0.5 * (chords[k - 1] + chords[k]));
        }
        if n > 0 {
            out.push(chords[n - 1] + 0.5 * self.curvatures[n - 1] * self.ds);
        }
        out
    }

    /// Vertex poses; the first equals `start`.
    pub fn reconstruct(&self) -> Vec<Pose> {
        self.vertices()
            .into_iter()
            .zip(self.vertex_tangents())
            .map(|(p, h)| Pose::from_point(p, h))
            .collect()
    }

    pub fn polyline_length(&self) -> f64 {
        self.vertices().windows(2).map(|w| (w[1] - w[0]).length()).sum()
    }

    /// `[x, y]` pairs for JSON interchange.
    pub fn point_pairs(&self) -> Vec<[f64; 2]> {
        self.vertices().into_iter().map(|p| [p.x, p.y]).collect()
    }

    pub fn frame(&self) -> PathFrame {
        PathFrame::new(self)
    }
}

pub fn reconstruct(path: &PolyPath) -> Vec<Pose> {
    path.reconstruct()
}

pub fn turning_angle(path: &PolyPath) -> f64 {
    path.turning_angle()
}

fn chord_angles(points: &[DVec2]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(points.len().saturating_sub(1));
    for w in points.windows(2) {
        let d = w[1] - w[0];
        let raw = d.y.atan2(d.x);
        let theta = match out.last() {
            Some(&prev) => prev + normalize_angle(raw - prev),
            None => raw,
        };
        out.push(theta);
    }
    out
}

/// Resamples a polyline at uniform arc-length spacing `ds`.
///
/// The last sample is extrapolated along the final polyline segment when the
/// length is not a multiple of `ds`. Interior curvatures are the chord turns
/// divided by `ds`; the first segment copies the second (the start heading is
/// not observable from points alone), which makes
/// `resample_path(reconstruct(p))` exact for paths with `κ_0 = κ_1`.
pub fn resample_path(points: &[DVec2], ds: f64) -> Result<PolyPath> {
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(Error::invalid(format!("segment length must be positive, got {ds}")));
    }
    if points.len() < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("non-finite point"));
    }
    let pts: Vec<DVec2> = points
        .iter()
        .copied()
        .fold(Vec::with_capacity(points.len()), |mut acc, p| {
            if acc.last().is_none_or(|&q: &DVec2| q != p) {
                acc.push(p);
            }
            acc
        });
    if pts.len() < 2 {
        return Err(Error::invalid("polyline has zero length"));
    }

    let mut cumulative = Vec::with_capacity(pts.len());
    cumulative.push(0.0);
    for w in pts.windows(2) {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + (w[1] - w[0]).length());
    }
    let total = *cumulative.last().unwrap();

    let ratio = total / ds;
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
    .max(1);

    let mut samples = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for i in 0..=n {
        let s = i as f64 * ds;
        while seg + 2 < pts.len() && cumulative[seg + 1] < s {
            seg += 1;
        }
        let a = pts[seg];
        let b = pts[seg + 1];
        let t = (s - cumulative[seg]) / (cumulative[seg + 1] - cumulative[seg]);
        samples.push(a + (b - a) * t);
    }

    let chords = chord_angles(&samples);
    let mut curvatures = vec![0.0; n];
    for k in 1..n {
        curvatures[k] = (chords[k] - chords[k - 1]) / ds;
    }
    if n > 1 {
        curvatures[0] = curvatures[1];
    }
    let start_heading = chords[0] - 0.5 * curvatures[0] * ds;
    PolyPath::new(Pose::from_point(samples[0], start_heading), ds, curvatures)
}

/// Where a point sits relative to a path: arc length `s`, signed lateral
/// offset `d` (positive left) and the unwrapped tangent direction at `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub s: f64,
    pub d: f64,
    pub tangent: f64,
}

/// Curvilinear chart along a path.
///
/// Within segment `k` the foot point moves linearly along the chord while the
/// tangent rotates linearly between the vertex tangents, so the normal field
/// is continuous across vertices and `(s, d)` maps back to the plane
/// bijectively near the path. Beyond either end the chart continues along the
/// end tangent.
#[derive(Debug, Clone)]
pub struct PathFrame {
    ds: f64,
    vertices: Vec<DVec2>,
    tangents: Vec<f64>,
    tangent_units: Vec<DVec2>,
}

impl PathFrame {
    pub fn new(path: &PolyPath) -> Self {
        let vertices = path.vertices();
        let tangents = path.vertex_tangents();
        let tangent_units = tangents.iter().map(|&t| unit(t)).collect();
        Self {
            ds: path.ds,
            vertices,
            tangents,
            tangent_units,
        }
    }

    pub fn length(&self) -> f64 {
        self.ds * (self.vertices.len() - 1) as f64
    }

    pub fn segments(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Foot point and tangent at arc length `s`.
    pub fn at(&self, s: f64) -> (DVec2, f64) {
        let n = self.segments();
        if s <= 0.0 {
            let t = self.tangents[0];
            return (self.vertices[0] + s * self.tangent_units[0], t);
        }
        if s >= self.length() {
            let t = self.tangents[n];
            return (
                self.vertices[n] + (s - self.length()) * self.tangent_units[n],
                t,
            );
        }
        let k = ((s / self.ds).floor() as usize).min(n - 1);
        let u = s / self.ds - k as f64;
        self.on_segment(k, u)
    }

    fn on_segment(&self, k: usize, u: f64) -> (DVec2, f64) {
        let a = self.vertices[k];
        let b = self.vertices[k + 1];
        let t = self.tangents[k] + u * (self.tangents[k + 1] - self.tangents[k]);
        (a + (b - a) * u, t)
    }

    /// Point at arc length `s`, offset `d` to the left of the tangent.
    pub fn point(&self, s: f64, d: f64) -> DVec2 {
        let (foot, t) = self.at(s);
        foot + d * perp(unit(t))
    }

    /// Chart coordinates of `q`. Candidates are ranked by distance; on exact
    /// ties the smallest arc length wins.
    pub fn project(&self, q: DVec2) -> Projection {
        self.project_segments(q, 0, self.segments(), true, true)
            .unwrap_or_else(|| {
                let rel0 = q - self.vertices[0];
                Projection {
                    s: 0.0,
                    d: cross(self.tangent_units[0], rel0),
                    tangent: self.tangents[0],
                }
            })
    }

    /// Like [`PathFrame::project`] but only considers arc lengths within
    /// `[s_lo, s_hi]`, which keeps a tracked walker on the same lap of a path
    /// that passes close to itself. Falls back to the nearest vertex of the
    /// window.
    pub fn project_near(&self, q: DVec2, s_lo: f64, s_hi: f64) -> Projection {
        let n = self.segments();
        let k0 = ((s_lo / self.ds).floor().max(0.0) as usize).min(n - 1);
        let k1 = ((s_hi / self.ds).ceil().max(1.0) as usize).clamp(k0 + 1, n);
        self.project_segments(q, k0, k1, s_lo <= 0.0, s_hi >= self.length())
            .unwrap_or_else(|| {
                let k = (k0..=k1)
                    .min_by(|&a, &b| {
                        (q - self.vertices[a])
                            .length()
                            .total_cmp(&(q - self.vertices[b]).length())
                    })
                    .expect("window is non-empty");
                Projection {
                    s: k as f64 * self.ds,
                    d: cross(self.tangent_units[k], q - self.vertices[k]),
                    tangent: self.tangents[k],
                }
            })
    }

    fn project_segments(
        &self,
        q: DVec2,
        k0: usize,
        k1: usize,
        before_start: bool,
        past_end: bool,
    ) -> Option<Projection> {
        let n = self.segments();
        let mut best: Option<(f64, Projection)> = None;
        let mut consider = |dist: f64, p: Projection| {
            if best.is_none_or(|(b, _)| dist < b) {
                best = Some((dist, p));
            }
        };

        let rel0 = q - self.vertices[0];
        let along0 = rel0.dot(self.tangent_units[0]);
        if before_start && along0 < 0.0 {
            let d = cross(self.tangent_units[0], rel0);
            consider(
                rel0.length(),
                Projection {
                    s: along0,
                    d,
                    tangent: self.tangents[0],
                },
            );
        }

        for k in k0..k1 {
            let f0 = (q - self.vertices[k]).dot(self.tangent_units[k]);
            let f1 = (q - self.vertices[k + 1]).dot(self.tangent_units[k + 1]);
            if !(f0 >= 0.0 && f1 <= 0.0) {
                continue;
            }
            let f = |u: f64| {
                let (foot, t) = self.on_segment(k, u);
                (q - foot).dot(unit(t))
            };
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if f(mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON {
                    break;
                }
            }
            let u = 0.5 * (lo + hi);
            let (foot, t) = self.on_segment(k, u);
            let d = cross(unit(t), q - foot);
            consider(
                d.abs(),
                Projection {
                    s: (k as f64 + u) * self.ds,
                    d,
                    tangent: t,
                },
            );
        }

        let reln = q - self.vertices[n];
        let alongn = reln.dot(self.tangent_units[n]);
        if past_end && alongn > 0.0 {
            let d = cross(self.tangent_units[n], reln);
            consider(
                reln.length(),
                Projection {
                    s: self.length() + alongn,
                    d,
                    tangent: self.tangents[n],
                },
            );
        }

        best.map(|(_, p)| p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(x: f64, y: f64) -> DVec2 {
        DVec2::new(x, y)
    }

    #[test]
    fn normalize_range() {
        assert_abs_diff_eq!(normalize_angle(PI), PI);
        assert_abs_diff_eq!(normalize_angle(-PI), PI);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_eq!(normalize_angle(-1e-20), -1e-20);
    }

    #[test]
    fn straight_segment_resamples_to_zero_curvature() {
        let path = resample_path(&[p(0.0, 0.0), p(10.0, 0.0)], 1.0).unwrap();
        assert_eq!(path.segments(), 10);
        assert!(path.curvatures.iter().all(|&k| k == 0.0));
        assert_abs_diff_eq!(path.length(), 10.0);
    }

    #[test]
    fn partial_last_segment_is_padded() {
        let path = resample_path(&[p(0.0, 0.0), p(2.3, 0.0)], 1.0).unwrap();
        assert_eq!(path.segments(), 3);
        assert!((path.length() - 2.3).abs() <= 1.0);
        let end = *path.vertices().last().unwrap();
        assert_abs_diff_eq!(end.x, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn polygon_circle_curvature() {
        // 360-gon of radius 2: the turning is concentrated at the polygon
        // vertices, so samples at ds = 0.1 see chord turns that vary by up to
        // the sagitta ratio; the mean is the circle curvature.
        let pts: Vec<DVec2> = (0..=360)
            .map(|k| {
                let a = TAU * k as f64 / 360.0;
                p(2.0 * a.cos(), 2.0 * a.sin())
            })
            .collect();
        let path = resample_path(&pts, 0.1).unwrap();
        let mean = path.curvatures.iter().sum::<f64>() / path.segments() as f64;
        assert_abs_diff_eq!(mean, 0.5, epsilon = 1e-3);
        // sagitta of a polygon side is s²/8R; chord direction error is at most
        // twice that over ds, turn error twice again.
        let side = 4.0 * (PI / 360.0).sin();
        let bound = 4.0 * (side * side / 16.0) / 0.1 / 0.1;
        // 4π/0.1 is not an integer, so the last segment runs along the
        // straight extension past the closing vertex.
        let n = path.segments();
        for &k in &path.curvatures[..n - 1] {
            assert!((k - 0.5).abs() <= bound, "{k} vs bound {bound}");
        }
    }

    #[test]
    fn square_loop_turning_angle() {
        let pts = [
            p(0.0, 0.0),
            p(1.0, 0.0),
            p(1.0, 1.0),
            p(0.0, 1.0),
            p(0.0, 0.0),
            p(1.0, 0.0),
        ];
        // oracle: exterior angles of the input polyline
        let mut exterior = 0.0;
        for w in pts.windows(3) {
            let a = w[1] - w[0];
            let b = w[2] - w[1];
            exterior += cross(a, b).atan2(a.dot(b));
        }
        let path = resample_path(&pts, 0.25).unwrap();
        assert!((path.turning_angle() - exterior).abs() <= 0.05);
        assert!((exterior - TAU).abs() < 1e-12);
    }

    #[test]
    fn resample_rejects_degenerate_input() {
        assert!(resample_path(&[p(0.0, 0.0)], 0.1).is_err());
        assert!(resample_path(&[p(1.0, 1.0), p(1.0, 1.0)], 0.1).is_err());
        assert!(resample_path(&[p(0.0, 0.0), p(1.0, 0.0)], 0.0).is_err());
    }

    #[test]
    fn reconstruct_straight() {
        let path = PolyPath::straight(Pose::new(0.0, 0.0, 0.0), 1.0, 5).unwrap();
        let poses = path.reconstruct();
        assert_eq!(poses.len(), 6);
        for (i, pose) in poses.iter().enumerate() {
            assert_abs_diff_eq!(pose.x, i as f64);
            assert_abs_diff_eq!(pose.y, 0.0);
        }
    }

    #[test]
    fn reconstruct_constant_curvature_lies_on_circle() {
        let ds = 1e-3;
        let n = (PI / ds) as usize;
        let path = PolyPath::new(Pose::new(0.0, 0.0, 0.0), ds, vec![1.0; n]).unwrap();
        for v in path.vertices() {
            let r = (v - p(0.0, 1.0)).length();
            assert!((r - 1.0).abs() < 1e-6, "radius {r}");
        }
    }

    #[test]
    fn reconstruct_first_pose_is_start() {
        let start = Pose::new(1.0, 2.0, 0.3);
        let path = PolyPath::new(start, 0.1, vec![0.2, -0.5, 1.0]).unwrap();
        assert_eq!(path.reconstruct()[0], start);
    }

    #[test]
    fn turning_angle_examples() {
        let straight = PolyPath::straight(Pose::new(0.0, 0.0, 0.0), 0.5, 8).unwrap();
        assert_eq!(straight.turning_angle(), 0.0);

        for radius in [0.5, 1.0, 7.0] {
            let n = 400;
            let ds = PI * radius / n as f64;
            let half = PolyPath::new(Pose::new(0.0, 0.0, 0.0), ds, vec![1.0 / radius; n]).unwrap();
            assert!((half.turning_angle() - PI).abs() <= 1e-9);
        }

        let cancel = PolyPath::new(Pose::new(0.0, 0.0, 0.0), 1.0, vec![0.5, -0.5]).unwrap();
        assert_eq!(cancel.turning_angle(), 0.0);
    }

    #[test]
    fn round_trip_through_points() {
        // linearly varying curvature with κ_0 = κ_1
        let mut ks: Vec<f64> = (0..200).map(|i| 0.8 - 0.01 * i as f64).collect();
        ks[0] = ks[1];
        let path = PolyPath::new(Pose::new(0.5, -1.0, 1.2), 0.05, ks).unwrap();
        let pts: Vec<DVec2> = path.reconstruct().iter().map(Pose::position).collect();
        let again = resample_path(&pts, path.ds).unwrap();
        assert_eq!(again.segments(), path.segments());
        for (a, b) in again.curvatures.iter().zip(&path.curvatures) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn round_trip_with_known_start_heading() {
        let ks: Vec<f64> = (0..300).map(|i| (i as f64 * 0.07).sin() * 1.3).collect();
        let path = PolyPath::new(Pose::new(0.0, 0.0, -2.0), 0.05, ks).unwrap();
        let again = PolyPath::from_vertices(&path.vertices(), path.start.heading, path.ds).unwrap();
        for (a, b) in again.curvatures.iter().zip(&path.curvatures) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn frame_identity_projection() {
        let ks: Vec<f64> = (0..100).map(|i| 0.6 * (i as f64 * 0.05).cos()).collect();
        let path = PolyPath::new(Pose::new(0.0, 0.0, 0.4), 0.05, ks).unwrap();
        let frame = path.frame();
        for &(s, d) in &[(0.3, 0.1), (2.0, -0.2), (4.9, 0.05), (1.234, 0.0)] {
            let q = frame.point(s, d);
            let proj = frame.project(q);
            assert_abs_diff_eq!(proj.s, s, epsilon = 1e-9);
            assert_abs_diff_eq!(proj.d, d, epsilon = 1e-9);
        }
    }

    #[test]
    fn frame_extends_past_ends() {
        let path = PolyPath::straight(Pose::new(0.0, 0.0, 0.0), 0.5, 4).unwrap();
        let frame = path.frame();
        let before = frame.project(p(-1.0, 0.3));
        assert_abs_diff_eq!(before.s, -1.0);
        assert_abs_diff_eq!(before.d, 0.3);
        let after = frame.project(p(3.0, -0.2));
        assert_abs_diff_eq!(after.s, 3.0);
        assert_abs_diff_eq!(after.d, -0.2);
    }
}
