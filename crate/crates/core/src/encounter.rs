//! Closest-encounter prediction between pairs of agents moving at constant
//! speed along their paths.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rectangle_distance, Footprint, Path, Pose2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One traffic participant bound to its driving path.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub path: Arc<Path>,
    /// Arc length of the reference point (vehicle center) on `path`.
    pub l: f64,
    /// Speed along the path.
    pub v: f64,
    pub footprint: Footprint,
}

impl AgentState {
    pub fn new(id: AgentId, path: Arc<Path>, l: f64, v: f64, footprint: Footprint) -> Result<Self> {
        let len = path.length();
        if !(l.is_finite() && (-1e-9..=len + 1e-9).contains(&l)) {
            return Err(Error::ArcLengthOutOfRange { l, length: len });
        }
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Config(format!(
                "agent {id}: speed must be finite and >= 0, got {v}"
            )));
        }
        Ok(Self {
            id,
            path,
            l: l.clamp(0.0, len),
            v,
            footprint,
        })
    }

    pub fn pose(&self) -> Pose2D {
        self.path.pose_clamped(self.l)
    }

    /// Arc length after `s` seconds at constant speed; stops at the path end.
    pub fn predict_l(&self, s: f64) -> f64 {
        (self.l + self.v * s).min(self.path.length())
    }
}

/// Pose of `agent` after `s` seconds at constant speed along its path.
pub fn predict_position(agent: &AgentState, s: f64) -> Pose2D {
    agent.path.pose_clamped(agent.predict_l(s))
}

/// Shape-aware distance between two agents after `s` seconds.
pub fn predicted_distance(a: &AgentState, b: &AgentState, s: f64) -> f64 {
    rectangle_distance(
        &predict_position(a, s),
        &a.footprint,
        &predict_position(b, s),
        &b.footprint,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncounterConfig {
    /// Collision threshold on the distance of closest encounter.
    pub d_thr: f64,
    /// Prediction horizon.
    pub horizon: f64,
    /// Coarse sampling step of the distance trace.
    pub dt_pred: f64,
}

impl Default for EncounterConfig {
    fn default() -> Self {
        Self {
            d_thr: 1.0,
            horizon: 10.0,
            dt_pred: 0.1,
        }
    }
}

impl EncounterConfig {
    pub fn validate(&self) -> Result<()> {
        // d_thr = 0 is accepted: it disables collision points entirely.
        let ok = self.d_thr >= 0.0
            && self.d_thr.is_finite()
            && self.horizon > 0.0
            && self.horizon.is_finite()
            && self.dt_pred > 0.0
            && self.dt_pred <= self.horizon;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid encounter config {self:?}")))
        }
    }

    fn sample_times(&self) -> Vec<f64> {
        let n = (self.horizon / self.dt_pred - 1e-9).ceil() as usize;
        (0..=n)
            .map(|k| (k as f64 * self.dt_pred).min(self.horizon))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncounterResult {
    /// Distance of closest encounter.
    pub dce: f64,
    /// Time of closest encounter.
    pub tce: f64,
    /// Pose of the first agent at the time of closest encounter.
    pub pce: Pose2D,
    /// Arc length of the first agent at the time of closest encounter.
    pub pce_l: f64,
}

/// Tolerance under which two distances are treated as equal.
const TIE_EPS: f64 = 1e-9;
/// Target bracket width of the time refinement.
const REFINE_TOL: f64 = 1e-3;

/// Offset of the extra samples either side of a path vertex.
const VERTEX_EPS: f64 = 1e-6;

/// Times at which `agent` reaches an interior vertex of its path. The
/// footprint turns at once there, so the distance trace may jump.
fn vertex_times(agent: &AgentState, horizon: f64) -> impl Iterator<Item = f64> + '_ {
    let cum = agent.path.cumulative_arclength();
    cum[1..cum.len() - 1]
        .iter()
        .filter(move |&&c| agent.v > 0.0 && c > agent.l)
        .map(move |&c| (c - agent.l) / agent.v)
        .filter(move |&s| s < horizon)
}

/// Regular samples plus each vertex crossing of either agent and its two
/// immediate neighbours.
fn sample_grid(a: &AgentState, b: &AgentState, cfg: &EncounterConfig) -> Vec<f64> {
    let mut times = cfg.sample_times();
    for s in vertex_times(a, cfg.horizon).chain(vertex_times(b, cfg.horizon)) {
        for t in [s - VERTEX_EPS, s, s + VERTEX_EPS] {
            times.push(t.clamp(0.0, cfg.horizon));
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    times
}

/// Golden-section search for the minimum of `f` on `[lo, hi]`.
fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Closest encounter of `a` (the observer) with `b` over the horizon.
///
/// The distance trace is sampled every `dt_pred` and at every path-vertex
/// crossing, each local minimum of the samples is refined by golden-section
/// search on both sides, and the earliest time that attains the global
/// minimum is reported.
pub fn closest_encounter(a: &AgentState, b: &AgentState, cfg: &EncounterConfig) -> EncounterResult {
    let d = |s: f64| predicted_distance(a, b, s);
    let times = sample_grid(a, b, cfg);
    let samples: Vec<f64> = times.iter().map(|&s| d(s)).collect();
    let last = samples.len() - 1;

    // (time, value, index of the sample that seeded it)
    let mut best: Option<(f64, f64, usize)> = None;
    for k in 0..=last {
        let is_local_min =
            (k == 0 || samples[k] < samples[k - 1]) && (k == last || samples[k] <= samples[k + 1]);
        if !is_local_min {
            continue;
        }
        let (mut t, mut v) = (times[k], samples[k]);
        if samples[k] > 0.0 {
            // Each side separately: a vertex jump may sit at times[k].
            let sides = [
                (times[k.saturating_sub(1)], times[k]),
                (times[k], times[(k + 1).min(last)]),
            ];
            for (lo, hi) in sides {
                if hi > lo {
                    let (tg, vg) = golden_section(&d, lo, hi, REFINE_TOL);
                    if vg < v - TIE_EPS {
                        t = tg;
                        v = vg;
                    }
                }
            }
        }
        let better = match best {
            None => true,
            Some((bt, bv, _)) => v < bv - TIE_EPS || (v <= bv + TIE_EPS && t < bt),
        };
        if better {
            best = Some((t, v, k));
        }
    }
    let (mut tce, dce, mut k) = best.expect("at least one sample is a local minimum");

    // Move to the earliest time that already attains the minimum (contact
    // plateaus, agents parked at the end of their paths). Plateau samples
    // differ by rounding noise, so the first sample within tolerance starts it.
    if let Some(j) = samples.iter().position(|&s| s <= dce + TIE_EPS) {
        if times[j] < tce {
            tce = times[j];
            k = j;
        }
    }
    if k > 0 {
        let mut lo = times[k - 1];
        if samples[k - 1] > dce + TIE_EPS && tce > lo {
            let mut hi = tce;
            while hi - lo > REFINE_TOL / 8.0 {
                let mid = 0.5 * (lo + hi);
                if d(mid) <= dce + TIE_EPS {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            tce = hi;
        }
    }

    let pce_l = a.predict_l(tce);
    EncounterResult {
        dce,
        tce,
        pce: a.path.pose_clamped(pce_l),
        pce_l,
    }
}

/// A closest encounter that fell below the collision threshold, seen from
/// the observer's side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionPoint {
    pub observer_id: AgentId,
    pub other_id: AgentId,
    pub x_coll: Pose2D,
    /// Observer's arc length at the time of closest encounter.
    pub l_coll: f64,
    pub tce: f64,
    pub dce: f64,
}

/// Collision point of `observer` against `other`, if their closest encounter
/// comes strictly closer than `d_thr`.
pub fn collision_point(
    observer: &AgentState,
    other: &AgentState,
    cfg: &EncounterConfig,
) -> Option<CollisionPoint> {
    collision_from_encounter(
        observer,
        other,
        &closest_encounter(observer, other, cfg),
        cfg,
    )
}

pub(crate) fn collision_from_encounter(
    observer: &AgentState,
    other: &AgentState,
    enc: &EncounterResult,
    cfg: &EncounterConfig,
) -> Option<CollisionPoint> {
    (enc.dce < cfg.d_thr).then_some(CollisionPoint {
        observer_id: observer.id,
        other_id: other.id,
        x_coll: enc.pce,
        l_coll: enc.pce_l,
        tce: enc.tce,
        dce: enc.dce,
    })
}
