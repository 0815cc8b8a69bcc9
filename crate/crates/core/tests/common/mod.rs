//! Generators and property bodies shared by the property suite and the
//! acceptance runner.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use riskshadow::encounter::{
    collision_point, AgentId, AgentState, CollisionPoint, EncounterConfig,
};
use riskshadow::filter::{run_filter, FilterConfig};
use riskshadow::geometry::{Footprint, Path, Pose2D, Vec2};
use riskshadow::output::trace_csv;
use riskshadow::planner::{generate_profiles, plan_detailed, PlannerConfig};
use riskshadow::reachability::{
    overlaps, reach_interval, widen, ReachArea, ReachConfig, ReachInterval,
};
use riskshadow::sim::{run, AgentSpec, Mode, Scenario, Schedule};

pub const CASES: u32 = 256;

/// Polyline of 1 to 3 segments starting inside a 100 m box.
pub fn arb_polyline() -> impl Strategy<Value = Vec<[f64; 2]>> {
    (
        -50.0..50.0f64,
        -50.0..50.0f64,
        -PI..PI,
        prop::collection::vec((10.0..60.0f64, -1.2..1.2f64), 1..=3),
    )
        .prop_map(|(x, y, h0, segs)| {
            let mut pts = vec![[x, y]];
            let mut h = h0;
            let (mut cx, mut cy) = (x, y);
            for (len, turn) in segs {
                cx += len * h.cos();
                cy += len * h.sin();
                pts.push([cx, cy]);
                h += turn;
            }
            pts
        })
}

pub fn arb_spec(id: u32) -> impl Strategy<Value = AgentSpec> {
    (
        arb_polyline(),
        0.0..0.5f64,
        0.0..15.0f64,
        3.0..10.0f64,
        1.5..2.6f64,
    )
        .prop_map(move |(path, frac, v, length, width)| {
            let len: f64 = path
                .windows(2)
                .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
                .sum();
            AgentSpec {
                id: AgentId(id),
                name: format!("a{id}"),
                l: frac * len,
                v,
                length,
                width,
                path,
                schedule: Schedule::constant(),
            }
        })
}

pub fn arb_agent(id: u32) -> impl Strategy<Value = AgentState> {
    arb_spec(id).prop_map(|s| s.initial_state().unwrap())
}

/// `n` agents with ids `0..n`.
pub fn arb_scene(n: usize) -> impl Strategy<Value = Vec<AgentState>> {
    (0..n as u32).map(arb_agent).collect::<Vec<_>>()
}

/// An agent together with an arbitrary interval on its path.
pub fn arb_area() -> impl Strategy<Value = (AgentState, f64, f64, bool)> {
    (arb_agent(0), 0.0..1.0f64, 0.0..1.0f64, any::<bool>())
}

pub fn area_of(agent: &AgentState, a: f64, b: f64, extend: bool) -> ReachArea {
    let len = agent.path.length();
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let iv = ReachInterval {
        agent_id: agent.id,
        l_start: lo * len,
        l_end: hi * len,
        limiting_agent: None,
    };
    let cfg = ReachConfig {
        extend_by_length: extend,
        ..ReachConfig::default()
    };
    widen(&iv, agent, &cfg)
}

pub fn run_prop<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

// ---------------------------------------------------------------- properties

pub fn overlap_symmetry(
    ((a, a0, a1, ea), (b, b0, b1, eb)): (
        (AgentState, f64, f64, bool),
        (AgentState, f64, f64, bool),
    ),
) -> Result<(), TestCaseError> {
    let ra = area_of(&a, a0, a1, ea);
    let rb = area_of(&b, b0, b1, eb);
    prop_assert_eq!(overlaps(&ra, &rb), overlaps(&rb, &ra));
    Ok(())
}

/// Extending either interval never removes an overlap.
pub fn overlap_monotone_in_extent(
    ((a, a0, a1, _), (b, b0, b1, _), grow): (
        (AgentState, f64, f64, bool),
        (AgentState, f64, f64, bool),
        f64,
    ),
) -> Result<(), TestCaseError> {
    let (alo, ahi) = (a0.min(a1), a0.max(a1));
    let ra = area_of(&a, alo, ahi, true);
    let rb = area_of(&b, b0, b1, true);
    let ra_long = area_of(&a, alo, (ahi + grow).min(1.0), true);
    if overlaps(&ra, &rb) {
        prop_assert!(overlaps(&ra_long, &rb));
    }
    Ok(())
}

/// Collision point at `frac` of the horizon, as constant-speed prediction
/// would place it.
fn synthetic_cp(agent: &AgentState, other: u32, frac: f64) -> CollisionPoint {
    let tce = frac * EncounterConfig::default().horizon;
    let l = agent.predict_l(tce);
    CollisionPoint {
        observer_id: agent.id,
        other_id: AgentId(other),
        x_coll: agent.path.pose_clamped(l),
        l_coll: l,
        tce,
        dce: 0.0,
    }
}

pub fn ra_monotone_under_added_cp(
    (agent, fracs, extra): (AgentState, Vec<f64>, f64),
) -> Result<(), TestCaseError> {
    let cfg = ReachConfig::default();
    let set: Vec<CollisionPoint> = fracs
        .iter()
        .enumerate()
        .map(|(i, &f)| synthetic_cp(&agent, i as u32 + 1, f))
        .collect();
    let mut more = set.clone();
    more.push(synthetic_cp(&agent, 99, extra));
    let base = reach_interval(&agent, &set, &cfg).unwrap();
    let tighter = reach_interval(&agent, &more, &cfg).unwrap();
    prop_assert!(tighter.l_end <= base.l_end);
    prop_assert!(base.l_start <= base.l_end && base.l_end <= agent.path.length());
    Ok(())
}

pub fn d_thr_monotone(
    (a, b, t1, t2): (AgentState, AgentState, f64, f64),
) -> Result<(), TestCaseError> {
    let (lo, hi) = (t1.min(t2), t1.max(t2));
    let c_lo = EncounterConfig {
        d_thr: lo,
        ..EncounterConfig::default()
    };
    let c_hi = EncounterConfig { d_thr: hi, ..c_lo };
    let p_lo = collision_point(&a, &b, &c_lo);
    let p_hi = collision_point(&a, &b, &c_hi);
    if let Some(p) = p_lo {
        let q = p_hi.expect("larger threshold keeps every collision point");
        prop_assert_eq!(p.l_coll, q.l_coll);
    }
    // Larger thresholds can only shorten reachability.
    let cfg = ReachConfig::default();
    let r_lo = reach_interval(&a, &p_lo.into_iter().collect::<Vec<_>>(), &cfg).unwrap();
    let r_hi = reach_interval(&a, &p_hi.into_iter().collect::<Vec<_>>(), &cfg).unwrap();
    prop_assert!(r_hi.l_end <= r_lo.l_end);
    Ok(())
}

pub fn filter_invariant_to_non_limiting(scene: Vec<AgentState>) -> Result<(), TestCaseError> {
    let cfg = FilterConfig::default();
    let (ego, others) = scene.split_first().unwrap();
    let full = run_filter(ego, others, &cfg, 0.0).unwrap();
    let limiting: Vec<AgentId> = full
        .decisions
        .iter()
        .flat_map(|d| {
            [
                d.ego_area.interval.limiting_agent,
                d.other_area.interval.limiting_agent,
            ]
        })
        .flatten()
        .collect();
    for k in others
        .iter()
        .map(|a| a.id)
        .filter(|id| !limiting.contains(id))
    {
        let rest: Vec<AgentState> = others.iter().filter(|a| a.id != k).cloned().collect();
        let reduced = run_filter(ego, &rest, &cfg, 0.0).unwrap();
        for d in &reduced.decisions {
            let before = full.decision(d.other_id).unwrap();
            prop_assert_eq!(d.filtered, before.filtered);
            prop_assert_eq!(d.reason, before.reason);
        }
    }
    Ok(())
}

pub fn small_planner() -> PlannerConfig {
    PlannerConfig {
        horizon: 4.0,
        dt: 0.25,
        accel_grid: vec![-2.0, 0.0, 1.0],
        switch_times: vec![1.0, 2.0],
        ..PlannerConfig::default()
    }
}

pub fn planner_argmin_membership(scene: Vec<AgentState>) -> Result<(), TestCaseError> {
    let cfg = small_planner();
    let (ego, others) = scene.split_first().unwrap();
    let plan = plan_detailed(ego, others, &cfg).unwrap();
    let profiles = generate_profiles(ego, &cfg).unwrap();
    prop_assert!(profiles.contains(&plan.chosen));
    prop_assert_eq!(plan.candidates.len(), profiles.len());
    prop_assert!(plan
        .candidates
        .iter()
        .all(|c| c.total >= plan.cost.total - 1e-9 * plan.cost.total.abs().max(1.0)));
    Ok(())
}

pub fn planner_weight_scaling((scene, k): (Vec<AgentState>, f64)) -> Result<(), TestCaseError> {
    let cfg = small_planner();
    let (ego, others) = scene.split_first().unwrap();
    let a = plan_detailed(ego, others, &cfg).unwrap();
    let b = plan_detailed(ego, others, &cfg.scaled_weights(k)).unwrap();
    prop_assert_eq!(a.chosen.id, b.chosen.id);
    Ok(())
}

pub fn arb_sim_scenario() -> impl Strategy<Value = Scenario> {
    (
        prop::collection::vec(arb_spec(0), 3),
        prop::collection::vec((0.0..1.0f64, -3.0..2.0f64), 3),
        any::<bool>(),
    )
        .prop_map(|(specs, scripts, rs)| {
            let agents = specs
                .into_iter()
                .zip(scripts)
                .enumerate()
                .map(|(i, (mut s, (t, a)))| {
                    s.id = AgentId(i as u32);
                    s.schedule = Schedule(vec![[t, a]]);
                    s
                })
                .collect();
            Scenario {
                name: "random".into(),
                description: String::new(),
                ego: AgentId(0),
                duration: 1.0,
                dt: 0.1,
                mode: if rs {
                    Mode::RiskShadowing
                } else {
                    Mode::Baseline
                },
                filter_enabled: true,
                filter: FilterConfig::default(),
                planner: small_planner(),
                agents,
                expect: None,
            }
        })
}

pub fn sim_determinism(s: Scenario) -> Result<(), TestCaseError> {
    let a = run(&s, s.mode).unwrap();
    let b = run(&s, s.mode).unwrap();
    prop_assert_eq!(trace_csv(&a, &s).unwrap(), trace_csv(&b, &s).unwrap());
    prop_assert!(a == b);
    Ok(())
}

// ------------------------------------------------------------------ oracles

/// Dense sweep of the predicted rectangle distance. Returns the minimum and
/// the earliest sample within 1e-9 m of it.
pub fn brute_force_encounter(a: &AgentState, b: &AgentState, horizon: f64, dt: f64) -> (f64, f64) {
    let n = (horizon / dt).round() as usize;
    let d: Vec<f64> = (0..=n)
        .map(|k| riskshadow::encounter::predicted_distance(a, b, k as f64 * dt))
        .collect();
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let k = d.iter().position(|&x| x <= min + 1e-9).unwrap();
    (min, k as f64 * dt)
}

pub fn straight_agent(
    id: u32,
    from: [f64; 2],
    to: [f64; 2],
    l: f64,
    v: f64,
    fp: (f64, f64),
) -> AgentState {
    AgentState::new(
        AgentId(id),
        Arc::new(Path::from_points(&[from, to]).unwrap()),
        l,
        v,
        Footprint::new(fp.0, fp.1).unwrap(),
    )
    .unwrap()
}

pub fn pose(x: f64, y: f64, h: f64) -> Pose2D {
    Pose2D::new(Vec2::new(x, y), h)
}
