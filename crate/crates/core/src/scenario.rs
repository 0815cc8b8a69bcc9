//! Built-in scenario catalog and the expectation records each scenario is
//! checked against.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::encounter::AgentId;
use crate::error::{Error, Result};
use crate::sim::{run, Mode, Scenario, SimTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantifier {
    /// Every step in the window.
    All,
    /// At least one step in the window.
    Any,
}

/// Filter decision for one agent over a closed time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterExpectation {
    pub agent: AgentId,
    pub from: f64,
    pub to: f64,
    pub filtered: bool,
    pub quantifier: Quantifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelCheck {
    /// |a| < value at every step in the window.
    AbsBelow,
    /// a > value at some step in the window.
    Exceeds,
    /// a < value at some step in the window.
    FallsBelow,
    /// max |a| > value over the window.
    AbsExceeds,
}

/// Ego acceleration property for one mode over a closed time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelExpectation {
    pub mode: Mode,
    pub from: f64,
    pub to: f64,
    pub check: AccelCheck,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filter: Vec<FilterExpectation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accel: Vec<AccelExpectation>,
}

const WINDOW_EPS: f64 = 1e-9;

fn in_window(t: f64, from: f64, to: f64) -> bool {
    t >= from - WINDOW_EPS && t <= to + WINDOW_EPS
}

impl FilterExpectation {
    /// `None` if satisfied, else a description of the violation.
    pub fn violation(&self, trace: &SimTrace) -> Option<String> {
        let steps: Vec<(f64, Option<bool>)> = trace
            .records
            .iter()
            .filter(|r| in_window(r.time, self.from, self.to))
            .map(|r| (r.time, r.filtered(self.agent)))
            .collect();
        let want = if self.filtered {
            "filtered"
        } else {
            "not filtered"
        };
        if steps.is_empty() {
            return Some(format!(
                "agent {}: no steps in [{}, {}]",
                self.agent, self.from, self.to
            ));
        }
        let holds = |f: &Option<bool>| f.unwrap_or(false) == self.filtered;
        match self.quantifier {
            Quantifier::All => steps.iter().find(|(_, f)| !holds(f)).map(|(t, _)| {
                format!(
                    "agent {} expected {want} on [{}, {}], violated at t={t:.2}",
                    self.agent, self.from, self.to
                )
            }),
            Quantifier::Any => (!steps.iter().any(|(_, f)| holds(f))).then(|| {
                format!(
                    "agent {} never {want} on [{}, {}]",
                    self.agent, self.from, self.to
                )
            }),
        }
    }
}

impl AccelExpectation {
    pub fn violation(&self, trace: &SimTrace) -> Option<String> {
        let a: Vec<(f64, f64)> = trace
            .ego_accels()
            .filter(|(t, _)| in_window(*t, self.from, self.to))
            .collect();
        if a.is_empty() {
            return Some(format!(
                "{}: no steps in [{}, {}]",
                self.mode, self.from, self.to
            ));
        }
        let v = self.value;
        let (ok, what) = match self.check {
            AccelCheck::AbsBelow => (
                a.iter().all(|x| x.1.abs() < v),
                format!("|a| < {v} throughout"),
            ),
            AccelCheck::Exceeds => (a.iter().any(|x| x.1 > v), format!("a > {v} somewhere")),
            AccelCheck::FallsBelow => (a.iter().any(|x| x.1 < v), format!("a < {v} somewhere")),
            AccelCheck::AbsExceeds => (
                a.iter().any(|x| x.1.abs() > v),
                format!("|a| > {v} somewhere"),
            ),
        };
        let (lo, hi) = a
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x.1), hi.max(x.1))
            });
        (!ok).then(|| {
            format!(
                "{}: expected {what} on [{}, {}], ego a in [{lo:.3}, {hi:.3}]",
                self.mode, self.from, self.to
            )
        })
    }
}

/// Outcome of checking one scenario in both modes.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub failures: Vec<String>,
    pub traces: Vec<SimTrace>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run `scenario` in both modes and evaluate its expectations plus the
/// ego safety requirement (strictly positive gap at every step).
pub fn check(scenario: &Scenario) -> Result<CheckOutcome> {
    let mut failures = Vec::new();
    let mut traces = Vec::new();
    let expect = scenario.expect.clone().unwrap_or_default();
    for mode in Mode::ALL {
        let trace = run(scenario, mode)?;
        if mode == Mode::RiskShadowing {
            failures.extend(expect.filter.iter().filter_map(|e| e.violation(&trace)));
        }
        failures.extend(
            expect
                .accel
                .iter()
                .filter(|e| e.mode == mode)
                .filter_map(|e| e.violation(&trace)),
        );
        let gap = trace.min_ego_distance();
        if gap <= 0.0 {
            failures.push(format!("{mode}: ego contact (min distance {gap:.3})"));
        }
        traces.push(trace);
    }
    Ok(CheckOutcome {
        name: scenario.name.clone(),
        failures,
        traces,
    })
}

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*]
    };
}

/// Shipped scenario files, by name.
pub const BUILTIN: &[(&str, &str)] = builtin!(
    "intro_truck_shadow",
    "crossing",
    "following",
    "turning",
    "filter_crossing_truck",
    "filter_oncoming_turn",
    "filter_car_behind_truck",
    "longitudinal_brake",
    "nonfilter_unobstructed",
    "nonfilter_truck_behind",
    "already_passed",
    "longitudinal_equal_speed",
);

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    entries: BTreeMap<String, Scenario>,
}

impl Catalog {
    pub fn builtin() -> Result<Self> {
        let mut c = Self::default();
        for (name, text) in BUILTIN {
            let s =
                Scenario::from_toml(text).map_err(|e| Error::Scenario(format!("{name}: {e}")))?;
            c.insert(s)?;
        }
        Ok(c)
    }

    /// Every `*.toml` file in `dir`.
    pub fn load_dir(dir: &FsPath) -> Result<Self> {
        let mut c = Self::default();
        let mut files: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        files.sort();
        for f in files {
            let s = Scenario::from_toml(&fs::read_to_string(&f)?)
                .map_err(|e| Error::Scenario(format!("{}: {e}", f.display())))?;
            c.insert(s)?;
        }
        Ok(c)
    }

    fn insert(&mut self, s: Scenario) -> Result<()> {
        if s.expect.is_none() {
            return Err(Error::Scenario(format!(
                "{}: missing expectation record",
                s.name
            )));
        }
        if self.entries.contains_key(&s.name) {
            return Err(Error::Scenario(format!(
                "duplicate scenario name {}",
                s.name
            )));
        }
        self.entries.insert(s.name.clone(), s);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Scenario> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::UnknownScenario(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Scenario> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The built-in catalog. Panics only if a shipped file is malformed.
pub fn catalog() -> Catalog {
    Catalog::builtin().expect("built-in scenarios parse")
}
