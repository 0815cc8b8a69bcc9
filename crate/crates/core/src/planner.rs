//! Velocity-profile planner: enumerate two-phase acceleration profiles for
//! the ego along its path and pick the one with the lowest
//! `risk - utility + comfort`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::encounter::{predict_position, AgentState};
use crate::error::{Error, Result};
use crate::geometry::{rectangle_distance, Pose2D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub horizon: f64,
    pub dt: f64,
    /// Candidate accelerations (m/s²) for both phases. Must contain 0.
    pub accel_grid: Vec<f64>,
    /// Candidate times at which the second phase starts.
    pub switch_times: Vec<f64>,
    pub w_risk: f64,
    pub w_utility: f64,
    pub w_comfort: f64,
    /// Length scale of the proximity risk `exp(-d / d0)`.
    pub risk_scale_d0: f64,
    pub curve_risk_enabled: bool,
    /// Lateral acceleration tolerated before curve risk accrues.
    pub a_lat_max: f64,
    /// Arc-length window over which path curvature is averaged.
    pub curvature_window: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 8.0,
            dt: 0.2,
            accel_grid: vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0],
            switch_times: vec![1.0, 2.0, 3.0, 4.0],
            w_risk: 10.0,
            w_utility: 0.05,
            w_comfort: 0.3,
            risk_scale_d0: 2.0,
            curve_risk_enabled: false,
            a_lat_max: 3.5,
            curvature_window: 5.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("planner: {msg}")));
        if self.accel_grid.is_empty() || self.switch_times.is_empty() {
            return bad("empty acceleration grid or switch-time list");
        }
        if !self.accel_grid.contains(&0.0) {
            return bad("acceleration grid must contain 0");
        }
        if !(self.horizon > 0.0 && self.dt > 0.0 && self.dt <= self.horizon) {
            return bad("horizon and dt must be positive with dt <= horizon");
        }
        // Negated so NaN is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.risk_scale_d0 > 0.0) {
            return bad("risk_scale_d0 must be positive");
        }
        if self
            .accel_grid
            .iter()
            .chain(&self.switch_times)
            .any(|x| !x.is_finite())
        {
            return bad("non-finite grid entry");
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    /// Weights scaled by `k` (used for invariance checks).
    pub fn scaled_weights(&self, k: f64) -> Self {
        Self {
            w_risk: self.w_risk * k,
            w_utility: self.w_utility * k,
            w_comfort: self.w_comfort * k,
            ..self.clone()
        }
    }
}

/// Speed ceiling for profiles starting at `v0`.
pub fn speed_limit(v0: f64) -> f64 {
    (1.5 * v0).max(10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    pub id: usize,
    /// (duration, commanded acceleration) phases.
    pub accel_segments: Vec<(f64, f64)>,
    pub dt: f64,
    /// Speed at `k * dt`, `k = 0..=N`.
    pub v: Vec<f64>,
    /// Arc length at `k * dt`.
    pub l: Vec<f64>,
    /// Realized acceleration over step `k`, `k = 0..N`.
    pub a: Vec<f64>,
}

impl VelocityProfile {
    pub fn first_accel(&self) -> f64 {
        self.a[0]
    }

    /// Commanded acceleration of the first phase.
    pub fn a1(&self) -> f64 {
        self.accel_segments[0].1
    }

    pub fn switch_time(&self) -> f64 {
        self.accel_segments[0].0
    }

    pub fn a2(&self) -> f64 {
        self.accel_segments.get(1).map_or(self.a1(), |s| s.1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.v.len()).map(move |k| k as f64 * self.dt)
    }
}

fn sample_profile(
    id: usize,
    l0: f64,
    v0: f64,
    a1: f64,
    t_switch: f64,
    a2: f64,
    cfg: &PlannerConfig,
) -> VelocityProfile {
    let n = cfg.steps();
    let dt = cfg.dt;
    let v_max = speed_limit(v0);
    let mut v = Vec::with_capacity(n + 1);
    let mut l = Vec::with_capacity(n + 1);
    let mut a = Vec::with_capacity(n);
    v.push(v0);
    l.push(l0);
    for k in 0..n {
        let t = k as f64 * dt;
        let cmd = if t < t_switch - 1e-9 { a1 } else { a2 };
        let vk = v[k];
        let next = (vk + cmd * dt).clamp(0.0, v_max);
        a.push((next - vk) / dt);
        l.push(l[k] + 0.5 * (vk + next) * dt);
        v.push(next);
    }
    let t_switch = t_switch.min(cfg.horizon);
    VelocityProfile {
        id,
        accel_segments: vec![(t_switch, a1), (cfg.horizon - t_switch, a2)],
        dt,
        v,
        l,
        a,
    }
}

/// Every (a1, switch time, a2) combination of the configured grids.
pub fn generate_profiles(ego: &AgentState, cfg: &PlannerConfig) -> Result<Vec<VelocityProfile>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.accel_grid.len().pow(2) * cfg.switch_times.len());
    for &a1 in &cfg.accel_grid {
        for &ts in &cfg.switch_times {
            for &a2 in &cfg.accel_grid {
                out.push(sample_profile(out.len(), ego.l, ego.v, a1, ts, a2, cfg));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub risk: f64,
    pub utility: f64,
    pub comfort: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(risk: f64, utility: f64, comfort: f64) -> Self {
        Self {
            risk,
            utility,
            comfort,
            total: risk - utility + comfort,
        }
    }
}

/// Poses of the other agents at the planner's sample times.
pub struct Forecast {
    agents: Vec<(AgentState, Vec<Pose2D>)>,
}

impl Forecast {
    pub fn new<'a>(others: impl IntoIterator<Item = &'a AgentState>, cfg: &PlannerConfig) -> Self {
        let n = cfg.steps();
        let agents = others
            .into_iter()
            .map(|a| {
                let poses = (0..=n)
                    .map(|k| predict_position(a, k as f64 * cfg.dt))
                    .collect();
                (a.clone(), poses)
            })
            .collect();
        Self { agents }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }
}

/// Cost of driving `profile` with the ego's path and footprint.
pub fn score_profile(
    profile: &VelocityProfile,
    ego: &AgentState,
    others: &[AgentState],
    cfg: &PlannerConfig,
) -> CostBreakdown {
    score_with_forecast(profile, ego, &Forecast::new(others, cfg), cfg)
}

pub fn score_with_forecast(
    profile: &VelocityProfile,
    ego: &AgentState,
    forecast: &Forecast,
    cfg: &PlannerConfig,
) -> CostBreakdown {
    let dt = profile.dt;
    let ego_poses: Vec<Pose2D> = profile
        .l
        .iter()
        .map(|&l| ego.path.pose_clamped(l))
        .collect();

    let mut proximity = 0.0;
    for (other, poses) in &forecast.agents {
        let worst = ego_poses
            .iter()
            .zip(poses)
            .map(|(pe, po)| {
                let d = rectangle_distance(pe, &ego.footprint, po, &other.footprint);
                (-d / cfg.risk_scale_d0).exp()
            })
            .fold(0.0, f64::max);
        proximity += worst;
    }

    let curve = if cfg.curve_risk_enabled {
        profile
            .v
            .iter()
            .zip(&profile.l)
            .take(profile.a.len())
            .map(|(&v, &l)| {
                let kappa = ego
                    .path
                    .curvature(l.min(ego.path.length()), cfg.curvature_window);
                (v * v * kappa - cfg.a_lat_max).max(0.0) * dt
            })
            .sum()
    } else {
        0.0
    };

    let travelled = profile.l.last().unwrap() - profile.l[0];
    let accel: f64 = profile.a.iter().map(|a| a * a * dt).sum();
    let jerk: f64 = profile
        .a
        .windows(2)
        .map(|w| {
            let j = (w[1] - w[0]) / dt;
            j * j * dt
        })
        .sum();

    CostBreakdown::new(
        cfg.w_risk * (proximity + curve),
        cfg.w_utility * travelled,
        cfg.w_comfort * (accel + jerk),
    )
}

/// Full outcome of one planning call.
#[derive(Debug, Clone)]
pub struct Plan {
    pub chosen: VelocityProfile,
    pub cost: CostBreakdown,
    /// Cost of every candidate, indexed by profile id.
    pub candidates: Vec<CostBreakdown>,
}

impl Plan {
    pub fn min_candidate_cost(&self) -> f64 {
        self.candidates
            .iter()
            .map(|c| c.total)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_candidate_cost(&self) -> f64 {
        self.candidates
            .iter()
            .map(|c| c.total)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Relative tolerance under which two costs count as tied.
const COST_TIE: f64 = 1e-12;

fn rank(a: (&VelocityProfile, &CostBreakdown), b: (&VelocityProfile, &CostBreakdown)) -> Ordering {
    let by = |x: f64, y: f64| {
        if (x - y).abs() <= COST_TIE * x.abs().max(y.abs()) {
            Ordering::Equal
        } else {
            x.total_cmp(&y)
        }
    };
    by(a.1.total, b.1.total)
        .then(by(a.1.risk, b.1.risk))
        .then(a.0.a1().abs().total_cmp(&b.0.a1().abs()))
        .then(a.0.id.cmp(&b.0.id))
}

pub fn plan_detailed<'a>(
    ego: &AgentState,
    others: impl IntoIterator<Item = &'a AgentState>,
    cfg: &PlannerConfig,
) -> Result<Plan> {
    let profiles = generate_profiles(ego, cfg)?;
    let forecast = Forecast::new(others, cfg);
    let candidates: Vec<CostBreakdown> = profiles
        .iter()
        .map(|p| score_with_forecast(p, ego, &forecast, cfg))
        .collect();
    let best = profiles
        .iter()
        .zip(&candidates)
        .min_by(|a, b| rank(*a, *b))
        .map(|(p, _)| p.id)
        .ok_or_else(|| Error::Config("planner: no candidate profiles".into()))?;
    Ok(Plan {
        cost: candidates[best],
        chosen: profiles.into_iter().nth(best).unwrap(),
        candidates,
    })
}

/// Lowest-cost profile among [`generate_profiles`].
pub fn plan(
    ego: &AgentState,
    others: &[AgentState],
    cfg: &PlannerConfig,
) -> Result<VelocityProfile> {
    plan_detailed(ego, others, cfg).map(|p| p.chosen)
}
