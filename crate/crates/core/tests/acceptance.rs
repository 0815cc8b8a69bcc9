//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.

mod common;

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use riskshadow::cli::{bench_ratio, cmd_bench};
use riskshadow::encounter::{closest_encounter, AgentId, AgentState, EncounterConfig};
use riskshadow::geometry::{Footprint, Path, Vec2};
use riskshadow::scenario::catalog;
use riskshadow::sim::{run, Mode, SimTrace};

type Outcome = Result<String, String>;

/// Bypasses the harness capture so the verdicts always reach the log.
fn report(n: usize, title: &str, outcome: &Outcome) {
    let (tag, detail) = match outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[{tag}] criterion {n}: {title} ({detail})");
    let _ = out.flush();
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed_run(name: &str, mode: Mode) -> Result<(SimTrace, Duration), String> {
    let cat = catalog();
    let s = cat.get(name).map_err(|e| e.to_string())?;
    let t0 = Instant::now();
    let trace = run(s, mode).map_err(|e| e.to_string())?;
    Ok((trace, t0.elapsed()))
}

fn accels_in(trace: &SimTrace, from: f64, to: f64) -> Vec<f64> {
    trace
        .ego_accels()
        .filter(|(t, _)| *t >= from - 1e-9 && *t <= to + 1e-9)
        .map(|(_, a)| a)
        .collect()
}

fn criterion_1() -> Outcome {
    let (rs, t_rs) = timed_run("intro_truck_shadow", Mode::RiskShadowing)?;
    let (base, t_base) = timed_run("intro_truck_shadow", Mode::Baseline)?;
    let rs_max = rs.max_abs_ego_accel();
    let up = accels_in(&base, 0.0, 3.0)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let down = accels_in(&base, 3.0, 8.0)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    ensure(rs_max < 0.1, || {
        format!("risk shadowing max |a| = {rs_max:.3}")
    })?;
    ensure(up > 0.3, || format!("baseline max a on [0,3] = {up:.3}"))?;
    ensure(down < -0.3, || {
        format!("baseline min a on [3,8] = {down:.3}")
    })?;
    let limit = Duration::from_secs(5);
    ensure(t_rs < limit && t_base < limit, || {
        format!("runtime {t_rs:?} / {t_base:?}")
    })?;
    Ok(format!(
        "rs max|a|={rs_max:.3}, baseline max a={up:.2}, min a={down:.2}, runtime {:.2}s/{:.2}s",
        t_rs.as_secs_f64(),
        t_base.as_secs_f64()
    ))
}

fn criterion_2() -> Outcome {
    let (rs, _) = timed_run("intro_truck_shadow", Mode::RiskShadowing)?;
    let car = AgentId(1);
    let early = rs.records.iter().filter(|r| r.time <= 4.0 + 1e-9);
    for r in early {
        ensure(r.filtered(car) == Some(true), || {
            format!("car retained at t={:.2}", r.time)
        })?;
    }
    let released = rs
        .records
        .iter()
        .find(|r| r.time > 4.0 + 1e-9 && r.filtered(car) == Some(false))
        .map(|r| r.time);
    match released {
        Some(t) if t <= 6.0 + 1e-9 => Ok(format!("car filtered on [0,4], retained from t={t:.1}")),
        Some(t) => Err(format!("car retained only from t={t:.1}")),
        None => Err("car never retained".into()),
    }
}

fn criterion_3() -> Outcome {
    let cat = catalog();
    let cases: [(&str, &[(u32, bool)]); 8] = [
        ("filter_crossing_truck", &[(1, true)]),
        ("filter_oncoming_turn", &[(1, true)]),
        ("filter_car_behind_truck", &[(1, true)]),
        ("longitudinal_brake", &[(2, true)]),
        ("nonfilter_unobstructed", &[(1, false), (2, false)]),
        ("nonfilter_truck_behind", &[(1, false), (2, false)]),
        ("already_passed", &[(1, false), (2, false)]),
        ("longitudinal_equal_speed", &[(1, false), (2, false)]),
    ];
    for (name, want) in cases {
        let s = cat.get(name).map_err(|e| e.to_string())?;
        let trace = run(s, Mode::RiskShadowing).map_err(|e| e.to_string())?;
        let first = &trace.records[0];
        for &(id, filtered) in want {
            let got = first.filtered(AgentId(id));
            ensure(got == Some(filtered), || {
                format!("{name}: agent {id} filtered={got:?}")
            })?;
        }
    }
    Ok("4 filter and 4 non-filter snapshots".into())
}

fn criterion_4() -> Outcome {
    let mut detail = Vec::new();
    for name in ["crossing", "following", "turning"] {
        let (rs, _) = timed_run(name, Mode::RiskShadowing)?;
        let (base, _) = timed_run(name, Mode::Baseline)?;
        let (a_rs, a_base) = (rs.max_abs_ego_accel(), base.max_abs_ego_accel());
        ensure(a_rs < 0.1, || {
            format!("{name}: risk shadowing max |a| = {a_rs:.3}")
        })?;
        ensure(a_base > 0.3, || {
            format!("{name}: baseline max |a| = {a_base:.3}")
        })?;
        detail.push(format!("{name} {a_rs:.2}/{a_base:.2}"));
    }
    Ok(detail.join(", "))
}

/// Straight or L-shaped path through the central 60 m box.
fn random_path(rng: &mut ChaCha8Rng) -> Path {
    let a = Vec2::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
    let h: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let b = a + Vec2::from_angle(h) * rng.gen_range(20.0..80.0);
    let mut pts = vec![a, b];
    if rng.gen_bool(0.5) {
        let turn = if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * std::f64::consts::FRAC_PI_2;
        pts.push(b + Vec2::from_angle(h + turn) * rng.gen_range(20.0..80.0));
    }
    Path::new(pts).unwrap()
}

fn random_agent(id: u32, rng: &mut ChaCha8Rng) -> AgentState {
    let path = random_path(rng);
    let l = rng.gen_range(0.0..0.3) * path.length();
    AgentState::new(
        AgentId(id),
        Arc::new(path),
        l,
        rng.gen_range(0.0..20.0),
        Footprint::new(rng.gen_range(3.5..10.0), rng.gen_range(1.6..2.6)).unwrap(),
    )
    .unwrap()
}

fn criterion_5() -> Outcome {
    let cfg = EncounterConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_017);
    let t0 = Instant::now();
    let (mut worst_d, mut worst_t) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for i in 0..1000 {
        let a = random_agent(0, &mut rng);
        let b = random_agent(1, &mut rng);
        let r = closest_encounter(&a, &b, &cfg);
        let (d, t) = brute_force_encounter(&a, &b, cfg.horizon, 0.001);
        let (ed, et) = ((r.dce - d).abs(), (r.tce - t).abs());
        worst_d = worst_d.max(ed);
        worst_t = worst_t.max(et);
        if ed > 0.05 || et > 0.05 {
            failures.push(format!(
                "#{i}: dce {:.4} vs {d:.4}, tce {:.4} vs {t:.4}",
                r.dce, r.tce
            ));
        }
    }
    let elapsed = t0.elapsed();
    ensure(failures.is_empty(), || {
        format!("{} mismatches: {}", failures.len(), failures.join("; "))
    })?;
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "1000 pairs, max |ddce|={worst_d:.4} m, max |dtce|={worst_t:.4} s, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn criterion_6() -> Outcome {
    let results = [
        run_prop(
            "overlap symmetry",
            (arb_area(), arb_area()),
            overlap_symmetry,
        ),
        run_prop(
            "overlap monotone",
            (arb_area(), arb_area(), 0.0..1.0f64),
            overlap_monotone_in_extent,
        ),
        run_prop(
            "reach monotone",
            (
                arb_agent(0),
                prop::collection::vec(0.0..1.0f64, 0..4),
                0.0..1.0f64,
            ),
            ra_monotone_under_added_cp,
        ),
        run_prop(
            "threshold monotone",
            (arb_agent(0), arb_agent(1), 0.0..4.0f64, 0.0..4.0f64),
            d_thr_monotone,
        ),
        run_prop(
            "filter invariance",
            arb_scene(4),
            filter_invariant_to_non_limiting,
        ),
        run_prop("planner argmin", arb_scene(3), planner_argmin_membership),
        run_prop(
            "weight scaling",
            (arb_scene(3), 0.1..10.0f64),
            planner_weight_scaling,
        ),
        run_prop("determinism", arb_sim_scenario(), sim_determinism),
    ];
    let failed: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    ensure(failed.is_empty(), || failed.join("; "))?;
    Ok(format!("8 properties x {CASES} cases"))
}

fn criterion_7() -> Outcome {
    let rows = cmd_bench(&[10, 20, 40], 7, 20).map_err(|e| e.to_string())?;
    for r in &rows {
        ensure(r.pairs == r.n * (r.n - 1), || {
            format!("n={} evaluated {} pairs", r.n, r.pairs)
        })?;
    }
    let ratio = bench_ratio(&rows, 10, 40).ok_or("missing bench rows")?;
    ensure((8.0..=32.0).contains(&ratio), || {
        format!("time ratio 10->40 = {ratio:.1}")
    })?;
    Ok(format!("pairs 90/380/1560, time ratio 10->40 = {ratio:.1}"))
}

fn criterion_8() -> Outcome {
    let cat = catalog();
    let mut worst = f64::INFINITY;
    for s in cat.iter() {
        for mode in Mode::ALL {
            let trace = run(s, mode).map_err(|e| e.to_string())?;
            let gap = trace.min_ego_distance();
            ensure(gap > 0.0, || {
                format!("{} {mode}: min distance {gap:.3}", s.name)
            })?;
            worst = worst.min(gap);
        }
    }
    Ok(format!(
        "{} scenarios x 2 modes, smallest gap {worst:.2} m",
        cat.len()
    ))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("intro scenario behaviour", criterion_1),
        ("filter timeline", criterion_2),
        ("snapshot filter decisions", criterion_3),
        ("crossing, following and turning", criterion_4),
        ("encounter oracle", criterion_5),
        ("invariant properties", criterion_6),
        ("pairwise scaling", criterion_7),
        ("safety", criterion_8),
    ];
    let mut failed = Vec::new();
    for (i, (title, f)) in criteria.iter().enumerate() {
        let outcome = f();
        report(i + 1, title, &outcome);
        if outcome.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
