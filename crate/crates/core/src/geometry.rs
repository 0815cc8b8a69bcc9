//! Planar geometry: arc-length parameterized polylines, poses, vehicle
//! footprints and exact distances between oriented rectangles.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum separation between consecutive path waypoints.
pub const MIN_WAYPOINT_SEPARATION: f64 = 1e-9;

/// Slack accepted when an arc-length query lands a hair outside the path.
const ARC_LENGTH_SLACK: f64 = 1e-9;

const CONTACT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (other - self).norm()
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }

    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        self + (other - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(p: [f64; 2]) -> Self {
        Vec2::new(p[0], p[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(p: Vec2) -> Self {
        [p.x, p.y]
    }
}

/// Wrap an angle into (-π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2D {
    pub position: Vec2,
    heading: f64,
}

impl Pose2D {
    pub fn new(position: Vec2, heading: f64) -> Self {
        debug_assert!(heading.is_finite(), "non-finite heading");
        Self {
            position,
            heading: normalize_angle(heading),
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn direction(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }
}

/// Rectangular vehicle outline, centered on the agent's reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    length: f64,
    width: f64,
}

impl Footprint {
    pub fn new(length: f64, width: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite() && width > 0.0 && width.is_finite()) {
            return Err(Error::Config(format!(
                "footprint dimensions must be positive and finite, got {length} x {width}"
            )));
        }
        Ok(Self { length, width })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Length of the rectangle diagonal.
    pub fn diagonal(&self) -> f64 {
        self.length.hypot(self.width)
    }
}

/// A polyline with cumulative arc length at every waypoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    waypoints: Vec<Vec2>,
    cumulative: Vec<f64>,
}

/// Result of [`Path::project`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the closest point.
    pub l: f64,
    /// Signed distance, positive to the left of the travel direction.
    pub lateral_offset: f64,
}

impl Path {
    pub fn new(waypoints: Vec<Vec2>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidPath(format!(
                "need at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        if let Some(p) = waypoints
            .iter()
            .find(|p| !(p.x.is_finite() && p.y.is_finite()))
        {
            return Err(Error::InvalidPath(format!("non-finite waypoint {p:?}")));
        }
        let mut cumulative = Vec::with_capacity(waypoints.len());
        cumulative.push(0.0);
        for (i, w) in waypoints.windows(2).enumerate() {
            let seg = w[0].distance(w[1]);
            if seg <= MIN_WAYPOINT_SEPARATION {
                return Err(Error::InvalidPath(format!(
                    "waypoints {i} and {} coincide",
                    i + 1
                )));
            }
            cumulative.push(cumulative[i] + seg);
        }
        Ok(Self {
            waypoints,
            cumulative,
        })
    }

    pub fn from_points(points: &[[f64; 2]]) -> Result<Self> {
        Self::new(points.iter().copied().map(Vec2::from).collect())
    }

    pub fn waypoints(&self) -> &[Vec2] {
        &self.waypoints
    }

    pub fn cumulative_arclength(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("path has waypoints")
    }

    pub fn segment_count(&self) -> usize {
        self.waypoints.len() - 1
    }

    /// Unit direction of segment `i`.
    pub fn segment_direction(&self, i: usize) -> Vec2 {
        (self.waypoints[i + 1] - self.waypoints[i]).normalized()
    }

    /// Index of the segment containing arc length `l` (the later segment
    /// at interior waypoints, the last segment at the path end).
    fn segment_index(&self, l: f64) -> usize {
        let n = self.segment_count();
        // cumulative is strictly increasing, so partition_point is a binary search.
        let idx = self.cumulative.partition_point(|&c| c <= l);
        idx.saturating_sub(1).min(n - 1)
    }

    /// Pose on the polyline at arc length `l`.
    pub fn position_at(&self, l: f64) -> Result<Pose2D> {
        let len = self.length();
        if !l.is_finite() || l < -ARC_LENGTH_SLACK || l > len + ARC_LENGTH_SLACK {
            return Err(Error::ArcLengthOutOfRange { l, length: len });
        }
        Ok(self.pose_clamped(l))
    }

    /// Like [`Path::position_at`] but clamps `l` into `[0, length]`.
    pub fn pose_clamped(&self, l: f64) -> Pose2D {
        let l = l.clamp(0.0, self.length());
        let i = self.segment_index(l);
        let a = self.waypoints[i];
        let b = self.waypoints[i + 1];
        let seg_len = self.cumulative[i + 1] - self.cumulative[i];
        let t = ((l - self.cumulative[i]) / seg_len).clamp(0.0, 1.0);
        Pose2D::new(a.lerp(b, t), (b - a).angle())
    }

    /// Pose at arc length `l`, continuing straight along the first or last
    /// segment when `l` falls outside the path.
    pub fn pose_extrapolated(&self, l: f64) -> Pose2D {
        let len = self.length();
        if l < 0.0 {
            let dir = self.segment_direction(0);
            Pose2D::new(self.waypoints[0] + dir * l, dir.angle())
        } else if l > len {
            let dir = self.segment_direction(self.segment_count() - 1);
            let end = *self.waypoints.last().unwrap();
            Pose2D::new(end + dir * (l - len), dir.angle())
        } else {
            self.pose_clamped(l)
        }
    }

    /// Closest point on the polyline to `p`. Ties go to the smaller arc length.
    pub fn project(&self, p: Vec2) -> Projection {
        let mut best_d2 = f64::INFINITY;
        let mut best = Projection {
            l: 0.0,
            lateral_offset: 0.0,
        };
        for i in 0..self.segment_count() {
            let a = self.waypoints[i];
            let b = self.waypoints[i + 1];
            let ab = b - a;
            let seg_len = self.cumulative[i + 1] - self.cumulative[i];
            let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
            let q = a + ab * t;
            let d2 = (p - q).norm_sq();
            if d2 < best_d2 - 1e-18 {
                best_d2 = d2;
                let d = d2.sqrt();
                let side = ab.cross(p - q);
                let sign = if side < 0.0 { -1.0 } else { 1.0 };
                best = Projection {
                    l: self.cumulative[i] + t * seg_len,
                    lateral_offset: if d == 0.0 { 0.0 } else { sign * d },
                };
            }
        }
        best
    }

    /// Waypoints of the sub-polyline covering `[from, to]`, extrapolated
    /// straight beyond either end of the path.
    pub fn slice_points(&self, from: f64, to: f64) -> Vec<Vec2> {
        debug_assert!(from <= to);
        let mut pts = vec![self.pose_extrapolated(from).position];
        for (w, &c) in self.waypoints.iter().zip(&self.cumulative) {
            if c > from && c < to {
                pts.push(*w);
            }
        }
        let end = self.pose_extrapolated(to).position;
        if end.distance(*pts.last().unwrap()) > MIN_WAYPOINT_SEPARATION || pts.len() == 1 {
            pts.push(end);
        }
        pts
    }

    /// Discrete curvature at arc length `l`: total heading change of the
    /// polyline inside `[l - window/2, l + window/2]` divided by the window.
    pub fn curvature(&self, l: f64, window: f64) -> f64 {
        let lo = l - window / 2.0;
        let hi = l + window / 2.0;
        let turn: f64 = (1..self.segment_count())
            .filter(|&i| self.cumulative[i] >= lo && self.cumulative[i] <= hi)
            .map(|i| {
                let d0 = self.segment_direction(i - 1);
                let d1 = self.segment_direction(i);
                d0.cross(d1).atan2(d0.dot(d1)).abs()
            })
            .sum();
        turn / window
    }
}

/// Convex polygon with counter-clockwise vertices. Degenerate polygons
/// (segments, points) are allowed and behave as their point sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Convex hull of `points` (monotone chain).
    pub fn hull(points: &[Vec2]) -> Self {
        let mut pts: Vec<Vec2> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup_by(|a, b| a.distance(*b) <= 1e-12);
        if pts.len() <= 2 {
            return Self { vertices: pts };
        }
        let mut lower: Vec<Vec2> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2
                && (lower[lower.len() - 1] - lower[lower.len() - 2])
                    .cross(p - lower[lower.len() - 2])
                    <= 0.0
            {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Vec2> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2
                && (upper[upper.len() - 1] - upper[upper.len() - 2])
                    .cross(p - upper[upper.len() - 2])
                    <= 0.0
            {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self { vertices: lower }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices).abs()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.vertices.len();
        match n {
            0 => false,
            1 => self.vertices[0].distance(p) <= CONTACT_EPS,
            2 => point_segment_distance(p, self.vertices[0], self.vertices[1]) <= CONTACT_EPS,
            _ => (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                (b - a).cross(p - a) >= -CONTACT_EPS * (b - a).norm()
            }),
        }
    }

    fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        let count = match n {
            0 | 1 => 0,
            2 => 1,
            _ => n,
        };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn project_onto(&self, axis: Vec2) -> (f64, f64) {
        self.vertices
            .iter()
            .map(|v| v.dot(axis))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
                (lo.min(d), hi.max(d))
            })
    }

    /// Separating-axis test; touching boundaries count as intersecting.
    pub fn intersects(&self, other: &ConvexPolygon) -> bool {
        if self.vertices.is_empty() || other.vertices.is_empty() {
            return false;
        }
        let mut axes: Vec<Vec2> = self
            .edges()
            .chain(other.edges())
            .filter_map(|(a, b)| {
                let d = b - a;
                (d.norm() > 1e-12).then(|| d.perp().normalized())
            })
            .collect();
        // A segment also needs its own direction as a candidate axis.
        for poly in [self, other] {
            if poly.vertices.len() == 2 {
                let d = poly.vertices[1] - poly.vertices[0];
                if d.norm() > 1e-12 {
                    axes.push(d.normalized());
                }
            }
        }
        if axes.is_empty() {
            // Two points.
            return self.vertices[0].distance(other.vertices[0]) <= CONTACT_EPS;
        }
        axes.iter().all(|&axis| {
            let (a_lo, a_hi) = self.project_onto(axis);
            let (b_lo, b_hi) = other.project_onto(axis);
            a_hi >= b_lo - CONTACT_EPS && b_hi >= a_lo - CONTACT_EPS
        })
    }

    /// Minimum distance between the two point sets, 0 when they intersect.
    pub fn distance(&self, other: &ConvexPolygon) -> f64 {
        if self.intersects(other) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        let single = |p: &ConvexPolygon| -> Vec<(Vec2, Vec2)> {
            if p.vertices.len() == 1 {
                vec![(p.vertices[0], p.vertices[0])]
            } else {
                p.edges().collect()
            }
        };
        for (a0, a1) in single(self) {
            for &(b0, b1) in &single(other) {
                best = best.min(segment_distance(a0, a1, b0, b1));
            }
        }
        best
    }
}

/// Signed shoelace area (positive for counter-clockwise winding).
pub fn polygon_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn segments_intersect(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = (a1 - a0).cross(b0 - a0);
    let d2 = (a1 - a0).cross(b1 - a0);
    let d3 = (b1 - b0).cross(a0 - b0);
    let d4 = (b1 - b0).cross(a1 - b0);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// Minimum distance between segments `[a0, a1]` and `[b0, b1]`.
pub fn segment_distance(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> f64 {
    if segments_intersect(a0, a1, b0, b1) {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

/// Corners of the footprint placed at `pose`, counter-clockwise.
pub fn rectangle_corners(pose: &Pose2D, fp: &Footprint) -> [Vec2; 4] {
    let fwd = pose.direction() * (fp.length() / 2.0);
    let left = pose.direction().perp() * (fp.width() / 2.0);
    let c = pose.position;
    [
        c - fwd - left,
        c + fwd - left,
        c + fwd + left,
        c - fwd + left,
    ]
}

/// The footprint placed at `pose` as a convex polygon.
pub fn rectangle(pose: &Pose2D, fp: &Footprint) -> ConvexPolygon {
    ConvexPolygon {
        vertices: rectangle_corners(pose, fp).to_vec(),
    }
}

/// Exact minimum distance between two oriented rectangles; 0 on overlap.
pub fn rectangle_distance(
    pose_a: &Pose2D,
    fp_a: &Footprint,
    pose_b: &Pose2D,
    fp_b: &Footprint,
) -> f64 {
    let ca = rectangle_corners(pose_a, fp_a);
    let cb = rectangle_corners(pose_b, fp_b);
    // Cheap reject: centers far apart relative to the circumscribed circles.
    let center_gap = pose_a.position.distance(pose_b.position);
    let reach = (fp_a.diagonal() + fp_b.diagonal()) / 2.0;
    if center_gap > reach {
        return rect_edge_distance(&ca, &cb);
    }
    if rects_overlap(&ca, &cb) {
        return 0.0;
    }
    rect_edge_distance(&ca, &cb)
}

fn rects_overlap(ca: &[Vec2; 4], cb: &[Vec2; 4]) -> bool {
    let axes = [ca[1] - ca[0], ca[3] - ca[0], cb[1] - cb[0], cb[3] - cb[0]];
    axes.iter().all(|&axis| {
        let proj = |c: &[Vec2; 4]| {
            c.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    let d = v.dot(axis);
                    (lo.min(d), hi.max(d))
                })
        };
        let (a_lo, a_hi) = proj(ca);
        let (b_lo, b_hi) = proj(cb);
        a_hi >= b_lo && b_hi >= a_lo
    })
}

fn rect_edge_distance(ca: &[Vec2; 4], cb: &[Vec2; 4]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let (a0, a1) = (ca[i], ca[(i + 1) % 4]);
        for j in 0..4 {
            let (b0, b1) = (cb[j], cb[(j + 1) % 4]);
            best = best.min(segment_distance(a0, a1, b0, b1));
        }
    }
    best
}
