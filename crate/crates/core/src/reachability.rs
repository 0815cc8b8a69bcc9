//! Reachability areas: the stretch of an agent's path up to its nearest
//! predicted collision point, swept with the vehicle body.

use serde::{Deserialize, Serialize};

use crate::encounter::{AgentId, AgentState, CollisionPoint};
use crate::error::{Error, Result};
use crate::geometry::{polygon_area, ConvexPolygon, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReachConfig {
    /// Prediction horizon used to cap areas without any collision point.
    #[serde(skip)]
    pub horizon: f64,
    /// Distance added to the kinematic reach when no collision point caps it.
    pub slack: f64,
    /// Safety margin added to the end of every area.
    pub margin: f64,
    /// Extend the swept area by half the vehicle length at both ends.
    pub extend_by_length: bool,
}

impl Default for ReachConfig {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            slack: 5.0,
            margin: 0.0,
            extend_by_length: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachInterval {
    pub agent_id: AgentId,
    pub l_start: f64,
    pub l_end: f64,
    /// Agent whose collision point set `l_end`, if any.
    pub limiting_agent: Option<AgentId>,
}

impl ReachInterval {
    pub fn len(&self) -> f64 {
        self.l_end - self.l_start
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }
}

/// 1-D reach of `agent`: from its position to the nearest of its own
/// collision points.
pub fn reach_interval(
    agent: &AgentState,
    collision_points: &[CollisionPoint],
    cfg: &ReachConfig,
) -> Result<ReachInterval> {
    let path_len = agent.path.length();
    let mut nearest: Option<(f64, AgentId)> = None;
    for cp in collision_points {
        if cp.observer_id != agent.id {
            return Err(Error::ForeignCollisionPoint {
                expected: agent.id,
                found: cp.observer_id,
            });
        }
        if cp.l_coll < agent.l - 1e-9 {
            return Err(Error::CollisionBehind {
                observer: agent.id,
                l_coll: cp.l_coll,
                l: agent.l,
            });
        }
        let replace = match nearest {
            None => true,
            Some((l, id)) => cp.l_coll < l || (cp.l_coll == l && cp.other_id < id),
        };
        if replace {
            nearest = Some((cp.l_coll, cp.other_id));
        }
    }
    let (end, limiting_agent) = match nearest {
        Some((l, id)) => (l.max(agent.l), Some(id)),
        None => (agent.l + agent.v * cfg.horizon + cfg.slack, None),
    };
    Ok(ReachInterval {
        agent_id: agent.id,
        l_start: agent.l,
        l_end: (end + cfg.margin).min(path_len),
        limiting_agent,
    })
}

/// Two-dimensional reachability area.
///
/// Stored as a union of convex pieces: one rectangle per polyline segment of
/// the swept slice plus a bevel piece at every interior vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachArea {
    pub interval: ReachInterval,
    pieces: Vec<ConvexPolygon>,
    outline: Vec<Vec2>,
}

impl ReachArea {
    pub fn pieces(&self) -> &[ConvexPolygon] {
        &self.pieces
    }

    /// Boundary polygon (counter-clockwise), miter-joined on the inside of
    /// bends and bevel-joined on the outside.
    pub fn outline(&self) -> &[Vec2] {
        &self.outline
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.outline).abs()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.pieces.iter().any(|piece| piece.contains(p))
    }
}

/// Sweep the interval with the agent's body.
pub fn widen(interval: &ReachInterval, agent: &AgentState, cfg: &ReachConfig) -> ReachArea {
    let half_w = agent.footprint.width() / 2.0;
    let ext = if cfg.extend_by_length {
        agent.footprint.length() / 2.0
    } else {
        0.0
    };
    let from = interval.l_start - ext;
    let to = interval.l_end + ext;
    let pts = agent.path.slice_points(from, to);

    let mut pieces = Vec::with_capacity(2 * pts.len());
    if pts.len() < 2 {
        // Zero-length slice: a segment across the path at that point.
        let pose = agent.path.pose_extrapolated(from);
        let n = pose.direction().perp() * half_w;
        let c = pose.position;
        pieces.push(ConvexPolygon::hull(&[c + n, c - n]));
        return ReachArea {
            interval: *interval,
            outline: vec![c - n, c + n],
            pieces,
        };
    }

    let normals: Vec<Vec2> = pts
        .windows(2)
        .map(|w| (w[1] - w[0]).normalized().perp() * half_w)
        .collect();
    for (w, n) in pts.windows(2).zip(&normals) {
        pieces.push(ConvexPolygon::hull(&[
            w[0] - *n,
            w[1] - *n,
            w[1] + *n,
            w[0] + *n,
        ]));
    }
    for i in 1..pts.len() - 1 {
        let (n0, n1) = (normals[i - 1], normals[i]);
        if (n0 - n1).norm() > 1e-9 {
            let v = pts[i];
            pieces.push(ConvexPolygon::hull(&[v + n0, v - n0, v + n1, v - n1]));
        }
    }

    ReachArea {
        interval: *interval,
        outline: outline(&pts, &normals),
        pieces,
    }
}

fn line_intersection(p: Vec2, d: Vec2, q: Vec2, e: Vec2) -> Option<Vec2> {
    let denom = d.cross(e);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = (q - p).cross(e) / denom;
    Some(p + d * t)
}

fn outline(pts: &[Vec2], normals: &[Vec2]) -> Vec<Vec2> {
    let mut left = vec![pts[0] + normals[0]];
    let mut right = vec![pts[0] - normals[0]];
    for i in 1..pts.len() - 1 {
        let (n0, n1) = (normals[i - 1], normals[i]);
        let d0 = pts[i] - pts[i - 1];
        let d1 = pts[i + 1] - pts[i];
        let turn = d0.cross(d1);
        let v = pts[i];
        let inner = |sign: f64| {
            line_intersection(v + n0 * sign, d0, v + n1 * sign, d1).unwrap_or(v + n0 * sign)
        };
        if turn > 1e-12 {
            // Left turn: the left side is the inside.
            left.push(inner(1.0));
            right.push(v - n0);
            right.push(v - n1);
        } else if turn < -1e-12 {
            left.push(v + n0);
            left.push(v + n1);
            right.push(inner(-1.0));
        } else {
            left.push(v + n1);
            right.push(v - n1);
        }
    }
    let (last, n_last) = (pts[pts.len() - 1], normals[normals.len() - 1]);
    left.push(last + n_last);
    right.push(last - n_last);
    right.extend(left.into_iter().rev());
    right
}

/// Whether two reachability areas intersect; touching counts.
pub fn overlaps(a: &ReachArea, b: &ReachArea) -> bool {
    a.pieces
        .iter()
        .any(|pa| b.pieces.iter().any(|pb| pa.intersects(pb)))
}
