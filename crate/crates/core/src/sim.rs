//! Fixed-step kinematic simulation. Scripted agents follow piecewise-constant
//! acceleration schedules along their paths; the ego replans every step.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::encounter::{AgentId, AgentState};
use crate::error::{Error, Result};
use crate::filter::{run_filter, FilterConfig, FilterReport};
use crate::geometry::{rectangle_distance, Footprint, Path, Pose2D};
use crate::planner::{plan_detailed, speed_limit, CostBreakdown, PlannerConfig};
use crate::scenario::Expectations;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    RiskShadowing,
    Baseline,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::RiskShadowing, Mode::Baseline];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::RiskShadowing => "risk_shadowing",
            Mode::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "risk_shadowing" | "rs" => Ok(Mode::RiskShadowing),
            "baseline" => Ok(Mode::Baseline),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

/// Piecewise-constant acceleration script as `(t_start, accel)` pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(pub Vec<[f64; 2]>);

impl Schedule {
    pub fn constant() -> Self {
        Self(Vec::new())
    }

    /// Acceleration commanded at time `t`; 0 before the first entry.
    pub fn accel_at(&self, t: f64) -> f64 {
        self.0
            .iter()
            .take_while(|e| e[0] <= t + 1e-9)
            .last()
            .map_or(0.0, |e| e[1])
    }

    fn validate(&self) -> Result<()> {
        if self.0.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Scenario("non-finite schedule entry".into()));
        }
        if self.0.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::Scenario("schedule start times must increase".into()));
        }
        Ok(())
    }
}

/// One agent as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: AgentId,
    #[serde(default)]
    pub name: String,
    /// Initial arc length along `path`.
    #[serde(default)]
    pub l: f64,
    pub v: f64,
    pub length: f64,
    pub width: f64,
    pub path: Vec<[f64; 2]>,
    /// Ignored for the ego.
    #[serde(default, skip_serializing_if = "schedule_is_empty")]
    pub schedule: Schedule,
}

fn schedule_is_empty(s: &Schedule) -> bool {
    s.0.is_empty()
}

impl AgentSpec {
    pub fn label(&self) -> String {
        if self.name.is_empty() {
            format!("agent {}", self.id)
        } else {
            self.name.clone()
        }
    }

    pub fn initial_state(&self) -> Result<AgentState> {
        let path = Path::from_points(&self.path)?;
        AgentState::new(
            self.id,
            Arc::new(path),
            self.l,
            self.v,
            Footprint::new(self.length, self.width)?,
        )
    }
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn default_duration() -> f64 {
    10.0
}

fn default_dt() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub ego: AgentId,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Mode used when none is requested explicitly.
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// When false the risk-shadowing mode keeps every agent.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub filter_enabled: bool,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    pub agents: Vec<AgentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectations>,
}

fn default_mode() -> Mode {
    Mode::RiskShadowing
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Scenario(format!(
                "{}: dt must be positive",
                self.name
            )));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::Scenario(format!("{}: invalid duration", self.name)));
        }
        let mut ids = BTreeSet::new();
        for a in &self.agents {
            if !ids.insert(a.id) {
                return Err(Error::DuplicateAgent(a.id));
            }
            a.schedule.validate()?;
            a.initial_state()?;
        }
        if !ids.contains(&self.ego) {
            return Err(Error::Scenario(format!(
                "{}: ego {} not among agents",
                self.name, self.ego
            )));
        }
        self.filter.encounter.validate()?;
        self.planner.validate()
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSnapshot {
    pub id: AgentId,
    pub l: f64,
    pub v: f64,
    /// Acceleration applied over the following step.
    pub a: f64,
    pub pose: Pose2D,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSummary {
    pub profile_id: usize,
    pub a1: f64,
    pub t_switch: f64,
    pub a2: f64,
    pub cost: CostBreakdown,
    pub min_cost: f64,
    pub max_cost: f64,
    /// Number of other agents the planner saw.
    pub considered: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// Ordered as in the scenario.
    pub agents: Vec<AgentSnapshot>,
    pub filter: Option<FilterReport>,
    pub plan: PlanSummary,
    /// Rectangle distance from the ego to every other agent.
    pub ego_distances: Vec<(AgentId, f64)>,
}

impl StepRecord {
    pub fn agent(&self, id: AgentId) -> Option<&AgentSnapshot> {
        self.agents.iter().find(|a| a.id == id)
    }

    /// None in baseline mode, when the filter is disabled or `id` is the ego.
    pub fn filtered(&self, id: AgentId) -> Option<bool> {
        self.filter.as_ref()?.decision(id).map(|d| d.filtered)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub scenario: String,
    pub mode: Mode,
    pub ego: AgentId,
    pub dt: f64,
    pub records: Vec<StepRecord>,
}

impl SimTrace {
    pub fn ego_accels(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.records
            .iter()
            .map(|r| (r.time, r.agent(self.ego).map_or(0.0, |a| a.a)))
    }

    pub fn max_abs_ego_accel(&self) -> f64 {
        self.ego_accels().map(|(_, a)| a.abs()).fold(0.0, f64::max)
    }

    /// Smallest ego-to-other distance over the whole run.
    pub fn min_ego_distance(&self) -> f64 {
        self.records
            .iter()
            .flat_map(|r| r.ego_distances.iter().map(|d| d.1))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Mutable simulation state.
#[derive(Debug, Clone)]
pub struct SimState {
    pub time: f64,
    pub step: usize,
    pub agents: Vec<AgentState>,
    schedules: Vec<Schedule>,
    ego_index: usize,
}

impl SimState {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let agents = scenario
            .agents
            .iter()
            .map(AgentSpec::initial_state)
            .collect::<Result<Vec<_>>>()?;
        let ego_index = scenario
            .agents
            .iter()
            .position(|a| a.id == scenario.ego)
            .unwrap();
        Ok(Self {
            time: 0.0,
            step: 0,
            agents,
            schedules: scenario.agents.iter().map(|a| a.schedule.clone()).collect(),
            ego_index,
        })
    }

    pub fn ego(&self) -> &AgentState {
        &self.agents[self.ego_index]
    }

    pub fn others(&self) -> Vec<AgentState> {
        self.agents
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.ego_index)
            .map(|(_, a)| a.clone())
            .collect()
    }

    /// Commanded accelerations for the next step.
    fn commands(&self, ego_accel: f64) -> Vec<f64> {
        (0..self.agents.len())
            .map(|i| {
                if i == self.ego_index {
                    ego_accel
                } else {
                    self.schedules[i].accel_at(self.time)
                }
            })
            .collect()
    }
}

/// Advance one agent by `dt`; returns the realized acceleration.
pub fn integrate(agent: &mut AgentState, accel: f64, dt: f64, v_max: f64) -> f64 {
    let v0 = agent.v;
    let mut v = (v0 + accel * dt).clamp(0.0, v_max);
    let len = agent.path.length();
    let mut l = agent.l + v * dt;
    if l >= len {
        l = len;
        v = 0.0;
    }
    agent.l = l;
    agent.v = v;
    (v - v0) / dt
}

/// Advance every agent by one step with the given ego acceleration.
pub fn step(state: &mut SimState, ego_accel: f64, dt: f64) -> Vec<f64> {
    let commands = state.commands(ego_accel);
    let realized = state
        .agents
        .iter_mut()
        .zip(commands)
        .map(|(a, cmd)| integrate(a, cmd, dt, f64::INFINITY))
        .collect();
    state.step += 1;
    state.time = state.step as f64 * dt;
    realized
}

fn decide(
    scenario: &Scenario,
    mode: Mode,
    state: &SimState,
) -> Result<(Option<FilterReport>, PlanSummary, f64)> {
    let ego = state.ego();
    let others = state.others();
    let report = match mode {
        Mode::RiskShadowing if scenario.filter_enabled => {
            Some(run_filter(ego, &others, &scenario.filter, state.time)?)
        }
        _ => None,
    };
    let considered: Vec<&AgentState> = match &report {
        Some(r) => r.retained(&others),
        None => others.iter().collect(),
    };
    let n = considered.len();
    let plan = plan_detailed(ego, considered, &scenario.planner)
        .map_err(|_| Error::PlannerAbort { step: state.step })?;
    let summary = PlanSummary {
        profile_id: plan.chosen.id,
        a1: plan.chosen.a1(),
        t_switch: plan.chosen.switch_time(),
        a2: plan.chosen.a2(),
        cost: plan.cost,
        min_cost: plan.min_candidate_cost(),
        max_cost: plan.max_candidate_cost(),
        considered: n,
    };
    Ok((report, summary, plan.chosen.first_accel()))
}

/// Simulate `scenario` in `mode` from t = 0 to its duration.
pub fn run(scenario: &Scenario, mode: Mode) -> Result<SimTrace> {
    let mut state = SimState::new(scenario)?;
    let n = scenario.steps();
    let ego_id = scenario.ego;
    let mut records = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (filter, plan, ego_cmd) = decide(scenario, mode, &state)?;
        let ego = state.ego();
        let ego_distances = state
            .agents
            .iter()
            .filter(|a| a.id != ego_id)
            .map(|a| {
                (
                    a.id,
                    rectangle_distance(&ego.pose(), &ego.footprint, &a.pose(), &a.footprint),
                )
            })
            .collect();
        let snapshots: Vec<AgentSnapshot> = state
            .agents
            .iter()
            .map(|a| AgentSnapshot {
                id: a.id,
                l: a.l,
                v: a.v,
                a: 0.0,
                pose: a.pose(),
            })
            .collect();
        let mut record = StepRecord {
            step: k,
            time: state.time,
            agents: snapshots,
            filter,
            plan,
            ego_distances,
        };
        // The ego never exceeds the planner's own speed ceiling.
        let ego_cmd = ego_cmd.min((speed_limit(state.ego().v) - state.ego().v) / scenario.dt);
        let realized = if k < n {
            step(&mut state, ego_cmd, scenario.dt)
        } else {
            // Final record: report what would be applied next.
            let mut probe = state.clone();
            step(&mut probe, ego_cmd, scenario.dt)
        };
        for (snap, a) in record.agents.iter_mut().zip(realized) {
            snap.a = a;
        }
        records.push(record);
    }
    Ok(SimTrace {
        scenario: scenario.name.clone(),
        mode,
        ego: ego_id,
        dt: scenario.dt,
        records,
    })
}
