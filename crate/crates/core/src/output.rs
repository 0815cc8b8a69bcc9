//! Trace serialization: CSV tables and native SVG line plots.
//!
//! CSV is the source of truth. Columns are fixed by the row structs below;
//! floats use `.` as decimal separator, optional cells are left empty.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;

use crate::encounter::AgentId;
use crate::error::{Error, Result};
use crate::filter::FilterReason;
use crate::geometry::{rectangle_corners, Footprint, Vec2};
use crate::sim::{Mode, Scenario, SimTrace, StepRecord};

pub const TRACE_HEADER: &str = "time,agent_id,agent_name,is_ego,l,v,a,x,y,heading,ego_distance,filtered,reason,\
plan_profile,plan_a1,plan_t_switch,plan_a2,cost_risk,cost_utility,cost_comfort,cost_total,cost_min,cost_max";

pub const FILTER_HEADER: &str =
    "time,other_id,filtered,reason,ego_ra_start,ego_ra_end,other_ra_start,other_ra_end,limiting_agent";

#[derive(Debug, Serialize)]
struct TraceRow<'a> {
    time: f64,
    agent_id: u32,
    agent_name: &'a str,
    is_ego: bool,
    l: f64,
    v: f64,
    a: f64,
    x: f64,
    y: f64,
    heading: f64,
    ego_distance: Option<f64>,
    filtered: Option<bool>,
    reason: Option<&'static str>,
    plan_profile: Option<usize>,
    plan_a1: Option<f64>,
    plan_t_switch: Option<f64>,
    plan_a2: Option<f64>,
    cost_risk: Option<f64>,
    cost_utility: Option<f64>,
    cost_comfort: Option<f64>,
    cost_total: Option<f64>,
    cost_min: Option<f64>,
    cost_max: Option<f64>,
}

#[derive(Debug, Serialize)]
struct FilterRow {
    time: f64,
    other_id: u32,
    filtered: bool,
    reason: &'static str,
    ego_ra_start: f64,
    ego_ra_end: f64,
    other_ra_start: f64,
    other_ra_end: f64,
    limiting_agent: Option<u32>,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(io::Error::other(e)))
}

/// One row per (time, agent).
pub fn trace_csv(trace: &SimTrace, scenario: &Scenario) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &trace.records {
        for snap in &r.agents {
            let is_ego = snap.id == trace.ego;
            let name = scenario.agent(snap.id).map_or("", |a| a.name.as_str());
            let decision = r.filter.as_ref().and_then(|f| f.decision(snap.id));
            let plan = is_ego.then_some(&r.plan);
            w.serialize(TraceRow {
                time: r.time,
                agent_id: snap.id.0,
                agent_name: name,
                is_ego,
                l: snap.l,
                v: snap.v,
                a: snap.a,
                x: snap.pose.position.x,
                y: snap.pose.position.y,
                heading: snap.pose.heading(),
                ego_distance: r.ego_distances.iter().find(|d| d.0 == snap.id).map(|d| d.1),
                filtered: decision.map(|d| d.filtered),
                reason: decision.map(|d| d.reason.as_str()),
                plan_profile: plan.map(|p| p.profile_id),
                plan_a1: plan.map(|p| p.a1),
                plan_t_switch: plan.map(|p| p.t_switch),
                plan_a2: plan.map(|p| p.a2),
                cost_risk: plan.map(|p| p.cost.risk),
                cost_utility: plan.map(|p| p.cost.utility),
                cost_comfort: plan.map(|p| p.cost.comfort),
                cost_total: plan.map(|p| p.cost.total),
                cost_min: plan.map(|p| p.min_cost),
                cost_max: plan.map(|p| p.max_cost),
            })
            .map_err(csv_err)?;
        }
    }
    if trace.records.is_empty() {
        return Ok(format!("{TRACE_HEADER}\n"));
    }
    finish(w)
}

/// One row per (time, other agent); empty body outside risk-shadowing mode.
pub fn filter_csv(trace: &SimTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut rows = 0;
    for report in trace.records.iter().filter_map(|r| r.filter.as_ref()) {
        for d in &report.decisions {
            w.serialize(FilterRow {
                time: report.timestamp,
                other_id: d.other_id.0,
                filtered: d.filtered,
                reason: d.reason.as_str(),
                ego_ra_start: d.ego_area.interval.l_start,
                ego_ra_end: d.ego_area.interval.l_end,
                other_ra_start: d.other_area.interval.l_start,
                other_ra_end: d.other_area.interval.l_end,
                limiting_agent: d.other_area.interval.limiting_agent.map(|a| a.0),
            })
            .map_err(csv_err)?;
            rows += 1;
        }
    }
    if rows == 0 {
        return Ok(format!("{FILTER_HEADER}\n"));
    }
    finish(w)
}

const W: f64 = 720.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 30.0;
const GAP: f64 = 50.0;

fn mode_style(mode: Mode) -> (&'static str, &'static str) {
    match mode {
        Mode::RiskShadowing => ("#1f77b4", ""),
        Mode::Baseline => ("#d62728", " stroke-dasharray=\"6 4\""),
    }
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.1 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

struct Panel {
    top: f64,
    t_max: f64,
    lo: f64,
    hi: f64,
}

impl Panel {
    fn x(&self, t: f64) -> f64 {
        MARGIN_L + (W - MARGIN_L - MARGIN_R) * t / self.t_max.max(1e-9)
    }

    fn y(&self, v: f64) -> f64 {
        self.top + PANEL_H * (1.0 - (v - self.lo) / (self.hi - self.lo))
    }

    fn frame(&self, out: &mut String, label: &str) {
        let (x0, x1) = (self.x(0.0), self.x(self.t_max));
        let (y0, y1) = (self.y(self.lo), self.y(self.hi));
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
            x1 - x0,
            y0 - y1
        );
        for k in 0..=4 {
            let v = self.lo + (self.hi - self.lo) * k as f64 / 4.0;
            let y = self.y(v);
            let _ = writeln!(
                out,
                r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{v:.2}</text>"##,
                x0 - 4.0,
                y + 4.0
            );
        }
        let steps = self.t_max.ceil() as usize;
        for k in 0..=steps {
            let t = k as f64;
            if t > self.t_max + 1e-9 {
                break;
            }
            let _ = writeln!(
                out,
                r##"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{k}</text>"##,
                self.x(t),
                y0 + 14.0
            );
        }
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" font-size="13">{label}</text>"##,
            x0,
            y1 - 6.0
        );
    }

    fn polyline(&self, out: &mut String, pts: &[(f64, f64)], color: &str, dash: &str) {
        let mut d = String::new();
        for (t, v) in pts {
            let _ = write!(d, "{:.2},{:.2} ", self.x(*t), self.y(*v));
        }
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"##,
            d.trim_end()
        );
    }
}

fn ego_series(trace: &SimTrace, f: impl Fn(&StepRecord) -> f64) -> Vec<(f64, f64)> {
    trace.records.iter().map(|r| (r.time, f(r))).collect()
}

/// Ego speed and acceleration over time, one line per trace.
pub fn behavior_svg(traces: &[&SimTrace]) -> String {
    let t_max = traces
        .iter()
        .filter_map(|t| t.records.last().map(|r| r.time))
        .fold(0.0, f64::max);
    let series: Vec<_> = traces
        .iter()
        .map(|tr| {
            let ego = tr.ego;
            let v = ego_series(tr, |r| r.agent(ego).map_or(0.0, |a| a.v));
            let a = ego_series(tr, |r| r.agent(ego).map_or(0.0, |a| a.a));
            (tr.mode, v, a)
        })
        .collect();
    let bounds = |sel: fn(&(Mode, Vec<(f64, f64)>, Vec<(f64, f64)>)) -> &Vec<(f64, f64)>| {
        let (lo, hi) = series
            .iter()
            .flat_map(|s| sel(s).iter().map(|p| p.1))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if lo.is_finite() {
            nice_range(lo, hi)
        } else {
            (-1.0, 1.0)
        }
    };
    let (vlo, vhi) = bounds(|s| &s.1);
    let (alo, ahi) = bounds(|s| &s.2);
    let pv = Panel {
        top: MARGIN_T,
        t_max,
        lo: vlo,
        hi: vhi,
    };
    let pa = Panel {
        top: MARGIN_T + PANEL_H + GAP,
        t_max,
        lo: alo.min(-0.5),
        hi: ahi.max(0.5),
    };
    let h = MARGIN_T + 2.0 * PANEL_H + GAP + 40.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{h}" viewBox="0 0 {W} {h}" font-family="sans-serif">"#
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    pv.frame(&mut out, "ego velocity [m/s]");
    pa.frame(&mut out, "ego acceleration [m/s\u{b2}]");
    let _ = writeln!(
        out,
        r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#888" stroke-dasharray="2 2"/>"##,
        pa.x(0.0),
        pa.x(t_max),
        y = pa.y(0.0)
    );
    for (i, (mode, v, a)) in series.iter().enumerate() {
        let (color, dash) = mode_style(*mode);
        pv.polyline(&mut out, v, color, dash);
        pa.polyline(&mut out, a, color, dash);
        let ly = MARGIN_T + 20.0 * i as f64 + 10.0;
        let lx = W - MARGIN_R + 10.0;
        let _ = writeln!(
            out,
            r##"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}" font-size="12">{mode}</text>"##,
            lx + 25.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">time [s]</text>"##,
        pa.x(t_max / 2.0),
        h - 6.0
    );
    out.push_str("</svg>\n");
    out
}

fn reason_color(reason: Option<FilterReason>) -> &'static str {
    match reason {
        Some(FilterReason::NoOverlap) => "#9e9e9e",
        Some(FilterReason::Overlap) => "#d62728",
        Some(FilterReason::AlreadyPassed) => "#ff9f1c",
        None => "#ffffff",
    }
}

/// Filter decision per other agent over time (risk-shadowing trace).
pub fn filter_timeline_svg(trace: &SimTrace, scenario: &Scenario) -> String {
    let others: Vec<AgentId> = scenario
        .agents
        .iter()
        .map(|a| a.id)
        .filter(|&id| id != trace.ego)
        .collect();
    let row_h = 28.0;
    let t_max = trace.records.last().map_or(0.0, |r| r.time);
    let p = Panel {
        top: MARGIN_T,
        t_max,
        lo: 0.0,
        hi: 1.0,
    };
    let h = MARGIN_T + row_h * others.len() as f64 + 70.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{h}" viewBox="0 0 {W} {h}" font-family="sans-serif">"#
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        out,
        r##"<text x="{MARGIN_L}" y="{:.1}" font-size="13">filter decisions ({})</text>"##,
        MARGIN_T - 10.0,
        trace.scenario
    );
    let dt = trace.dt;
    for (row, id) in others.iter().enumerate() {
        let y = MARGIN_T + row_h * row as f64;
        let label = scenario
            .agent(*id)
            .map_or_else(|| id.to_string(), |a| a.label());
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">{label}</text>"##,
            MARGIN_L - 6.0,
            y + row_h / 2.0 + 4.0
        );
        for r in &trace.records {
            let reason = r
                .filter
                .as_ref()
                .and_then(|f| f.decision(*id))
                .map(|d| d.reason);
            let x0 = p.x(r.time);
            let x1 = p.x((r.time + dt).min(t_max.max(r.time + dt)));
            let _ = writeln!(
                out,
                r##"<rect x="{x0:.2}" y="{:.1}" width="{:.2}" height="{:.1}" fill="{}"/>"##,
                y + 3.0,
                (x1 - x0).max(0.5),
                row_h - 6.0,
                reason_color(reason)
            );
        }
    }
    let axis_y = MARGIN_T + row_h * others.len() as f64 + 14.0;
    for k in 0..=(t_max.ceil() as usize) {
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{axis_y:.1}" font-size="11" text-anchor="middle">{k}</text>"##,
            p.x(k as f64)
        );
    }
    let legend_y = axis_y + 24.0;
    for (i, (reason, name)) in [
        (FilterReason::NoOverlap, "filtered (no overlap)"),
        (FilterReason::Overlap, "kept (overlap)"),
        (FilterReason::AlreadyPassed, "kept (already passed)"),
    ]
    .into_iter()
    .enumerate()
    {
        let x = MARGIN_L + 180.0 * i as f64;
        let _ = writeln!(
            out,
            r##"<rect x="{x}" y="{:.1}" width="14" height="10" fill="{}"/><text x="{}" y="{legend_y:.1}" font-size="11">{name}</text>"##,
            legend_y - 9.0,
            reason_color(Some(reason)),
            x + 18.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Top view of the scene at one record: paths, vehicle bodies and, when
/// available, reachability-area outlines.
pub fn scene_svg(scenario: &Scenario, record: &StepRecord) -> String {
    let mut pts: Vec<Vec2> = Vec::new();
    for a in &record.agents {
        pts.push(a.pose.position);
    }
    if let Some(f) = &record.filter {
        for d in &f.decisions {
            pts.extend(d.ego_area.outline());
            pts.extend(d.other_area.outline());
        }
    }
    let (mut x0, mut y0, mut x1, mut y1) = pts.iter().fold(
        (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ),
        |(a, b, c, d), p| (a.min(p.x), b.min(p.y), c.max(p.x), d.max(p.y)),
    );
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (-10.0, -10.0, 10.0, 10.0);
    }
    let pad = 10.0;
    let (x0, y0, x1, y1) = (x0 - pad, y0 - pad, x1 + pad, y1 + pad);
    let size = 640.0;
    let scale = size / (x1 - x0).max(y1 - y0);
    let tx = |p: Vec2| ((p.x - x0) * scale, (y1 - p.y) * scale);
    let poly = |pts: &[Vec2]| {
        pts.iter()
            .map(|&p| {
                let (x, y) = tx(p);
                format!("{x:.1},{y:.1}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif">"#
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for spec in &scenario.agents {
        let path: Vec<Vec2> = spec.path.iter().map(|&p| p.into()).collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#ccc" stroke-width="1"/>"##,
            poly(&path)
        );
    }
    if let Some(f) = &record.filter {
        if let Some(d) = f.decisions.first() {
            let _ = writeln!(
                out,
                r##"<polygon points="{}" fill="#1f77b4" fill-opacity="0.2" stroke="#1f77b4"/>"##,
                poly(d.ego_area.outline())
            );
        }
        for d in &f.decisions {
            let color = if d.filtered { "#9e9e9e" } else { "#d62728" };
            let _ = writeln!(
                out,
                r##"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="{color}"/>"##,
                poly(d.other_area.outline())
            );
        }
    }
    for (snap, spec) in record.agents.iter().zip(&scenario.agents) {
        let Ok(fp) = Footprint::new(spec.length, spec.width) else {
            continue;
        };
        let color = if snap.id == scenario.ego {
            "#1f77b4"
        } else {
            "#333"
        };
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="{color}"/>"##,
            poly(&rectangle_corners(&snap.pose, &fp))
        );
    }
    let _ = writeln!(
        out,
        r##"<text x="8" y="18" font-size="12">{} t={:.1}s</text>"##,
        scenario.name, record.time
    );
    out.push_str("</svg>\n");
    out
}
