//! Group-interaction filter: decides which other agents cannot reach the
//! ego because a third agent blocks their way.
//!
//! Three passes over the scene:
//! 1. closest-encounter collision points for every directed agent pair,
//! 2. one reachability area per agent from its own collision points,
//! 3. an overlap test of the ego area against every other agent's area.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::encounter::{
    closest_encounter, collision_from_encounter, predicted_distance, AgentId, AgentState,
    CollisionPoint, EncounterConfig, EncounterResult,
};
use crate::error::{Error, Result};
use crate::reachability::{overlaps, reach_interval, widen, ReachArea, ReachConfig};

/// Window over which the distance must grow for an already-passed tag.
const PASSED_WINDOW: f64 = 1.0;
const PASSED_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub encounter: EncounterConfig,
    pub reach: ReachConfig,
}

impl FilterConfig {
    /// Reach settings with the horizon tied to the encounter horizon.
    pub fn reach_config(&self) -> ReachConfig {
        ReachConfig {
            horizon: self.encounter.horizon,
            ..self.reach
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    NoOverlap,
    Overlap,
    AlreadyPassed,
}

impl FilterReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FilterReason::NoOverlap => "no_overlap",
            FilterReason::Overlap => "overlap",
            FilterReason::AlreadyPassed => "already_passed",
        }
    }
}

impl fmt::Display for FilterReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterDecision {
    pub other_id: AgentId,
    /// True iff `reason` is [`FilterReason::NoOverlap`].
    pub filtered: bool,
    pub reason: FilterReason,
    pub ego_area: ReachArea,
    pub other_area: ReachArea,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub timestamp: f64,
    pub ego_id: AgentId,
    /// Sorted by `other_id`.
    pub decisions: Vec<FilterDecision>,
    /// Directed pairwise encounter evaluations performed.
    pub encounter_count: usize,
    /// Every collision point found, ordered by (observer, other).
    pub collision_points: Vec<CollisionPoint>,
}

impl FilterReport {
    pub fn decision(&self, other: AgentId) -> Option<&FilterDecision> {
        self.decisions
            .binary_search_by_key(&other, |d| d.other_id)
            .ok()
            .map(|i| &self.decisions[i])
    }

    pub fn filtered_ids(&self) -> BTreeSet<AgentId> {
        self.decisions
            .iter()
            .filter(|d| d.filtered)
            .map(|d| d.other_id)
            .collect()
    }

    /// Others that the planner still has to consider.
    pub fn retained<'a>(&self, others: &'a [AgentState]) -> Vec<&'a AgentState> {
        let filtered = self.filtered_ids();
        others
            .iter()
            .filter(|a| !filtered.contains(&a.id))
            .collect()
    }
}

/// Ego and `other` are at their closest right now and separating.
fn already_passed(ego: &AgentState, other: &AgentState, enc: &EncounterResult) -> bool {
    if enc.tce != 0.0 {
        return false;
    }
    let steps = (PASSED_WINDOW / PASSED_STEP).round() as usize;
    let mut prev = predicted_distance(ego, other, 0.0);
    for k in 1..=steps {
        let d = predicted_distance(ego, other, k as f64 * PASSED_STEP);
        if d <= prev {
            return false;
        }
        prev = d;
    }
    true
}

/// Run the filter for `ego` against `others` at simulation time `timestamp`.
pub fn run_filter(
    ego: &AgentState,
    others: &[AgentState],
    cfg: &FilterConfig,
    timestamp: f64,
) -> Result<FilterReport> {
    cfg.encounter.validate()?;
    let mut seen = BTreeSet::new();
    for a in std::iter::once(ego).chain(others) {
        if !seen.insert(a.id) {
            return Err(Error::DuplicateAgent(a.id));
        }
    }
    let agents: Vec<&AgentState> = std::iter::once(ego).chain(others).collect();

    // Step 1: all directed pairs.
    let mut per_observer: BTreeMap<AgentId, Vec<CollisionPoint>> = BTreeMap::new();
    let mut ego_encounters: BTreeMap<AgentId, EncounterResult> = BTreeMap::new();
    let mut collision_points = Vec::new();
    let mut encounter_count = 0;
    for observer in &agents {
        let cps = per_observer.entry(observer.id).or_default();
        for other in &agents {
            if observer.id == other.id {
                continue;
            }
            let enc = closest_encounter(observer, other, &cfg.encounter);
            encounter_count += 1;
            if observer.id == ego.id {
                ego_encounters.insert(other.id, enc);
            }
            if let Some(cp) = collision_from_encounter(observer, other, &enc, &cfg.encounter) {
                cps.push(cp);
            }
        }
        cps.sort_by_key(|cp| cp.other_id);
        collision_points.extend(cps.iter().copied());
    }
    collision_points.sort_by_key(|cp| (cp.observer_id, cp.other_id));

    // Step 2: reachability areas.
    let reach_cfg = cfg.reach_config();
    let area_of = |agent: &AgentState| -> Result<ReachArea> {
        let iv = reach_interval(agent, &per_observer[&agent.id], &reach_cfg)?;
        Ok(widen(&iv, agent, &reach_cfg))
    };
    let ego_area = area_of(ego)?;

    // Step 3: overlap checks.
    let mut decisions = Vec::with_capacity(others.len());
    for other in others {
        let other_area = area_of(other)?;
        let reason = if overlaps(&ego_area, &other_area) {
            FilterReason::Overlap
        } else if already_passed(ego, other, &ego_encounters[&other.id]) {
            FilterReason::AlreadyPassed
        } else {
            FilterReason::NoOverlap
        };
        decisions.push(FilterDecision {
            other_id: other.id,
            filtered: reason == FilterReason::NoOverlap,
            reason,
            ego_area: ego_area.clone(),
            other_area,
        });
    }
    decisions.sort_by_key(|d| d.other_id);

    Ok(FilterReport {
        timestamp,
        ego_id: ego.id,
        decisions,
        encounter_count,
        collision_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Footprint, Path};
    use std::sync::Arc;

    fn agent(id: u32, pts: &[[f64; 2]], l: f64, v: f64, len: f64, width: f64) -> AgentState {
        AgentState::new(
            AgentId(id),
            Arc::new(Path::from_points(pts).unwrap()),
            l,
            v,
            Footprint::new(len, width).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn duplicate_ids_rejected() {
        let a = agent(0, &[[0.0, 0.0], [10.0, 0.0]], 0.0, 1.0, 4.0, 2.0);
        let b = agent(0, &[[0.0, 5.0], [10.0, 5.0]], 0.0, 1.0, 4.0, 2.0);
        assert!(matches!(
            run_filter(&a, &[b], &FilterConfig::default(), 0.0),
            Err(Error::DuplicateAgent(AgentId(0)))
        ));
    }

    #[test]
    fn encounter_count_is_directed_pairs() {
        let ego = agent(0, &[[0.0, 0.0], [100.0, 0.0]], 0.0, 5.0, 4.0, 2.0);
        let others: Vec<AgentState> = (1..5)
            .map(|i| {
                agent(
                    i,
                    &[[0.0, 10.0 * i as f64], [100.0, 10.0 * i as f64]],
                    0.0,
                    5.0,
                    4.0,
                    2.0,
                )
            })
            .collect();
        let r = run_filter(&ego, &others, &FilterConfig::default(), 0.0).unwrap();
        assert_eq!(r.encounter_count, 20);
        assert_eq!(r.decisions.len(), 4);
        assert!(r
            .decisions
            .windows(2)
            .all(|w| w[0].other_id < w[1].other_id));
    }

    #[test]
    fn parallel_agent_driving_away_is_already_passed() {
        // Same lane, other ahead and faster: closest now, separating.
        let ego = agent(0, &[[0.0, 0.0], [200.0, 0.0]], 10.0, 5.0, 4.0, 2.0);
        let lead = agent(1, &[[0.0, 10.0], [200.0, 10.0]], 40.0, 12.0, 4.0, 2.0);
        let r = run_filter(&ego, &[lead], &FilterConfig::default(), 0.0).unwrap();
        assert_eq!(r.decisions[0].reason, FilterReason::AlreadyPassed);
        assert!(!r.decisions[0].filtered);
    }

    #[test]
    fn truck_shadows_car() {
        // Ego northbound, car eastbound toward the ego path, truck parked
        // across the car's lane upstream of the crossing.
        let ego = agent(0, &[[0.0, -40.0], [0.0, 60.0]], 20.0, 8.0, 4.5, 2.0);
        let car = agent(1, &[[-80.0, 0.0], [60.0, 0.0]], 30.0, 14.0, 4.5, 2.0);
        let truck = agent(2, &[[-15.0, 20.0], [-15.0, -40.0]], 20.0, 0.0, 10.0, 2.5);
        let cfg = FilterConfig::default();
        let r = run_filter(&ego, &[car.clone(), truck.clone()], &cfg, 0.0).unwrap();
        let d = r.decision(AgentId(1)).unwrap();
        assert!(d.filtered, "{:?}", d.reason);
        assert_eq!(d.other_area.interval.limiting_agent, Some(AgentId(2)));

        // Without the truck the pair decision is a plain overlap.
        let r2 = run_filter(&ego, &[car], &cfg, 0.0).unwrap();
        assert_eq!(r2.decisions[0].reason, FilterReason::Overlap);
    }

    #[test]
    fn turning_truck_is_kept_while_shadowing_car() {
        // The truck crosses the ego path, then turns across the car's lane
        // west of the crossing; the car meets it there first.
        let ego = agent(0, &[[0.0, -40.0], [0.0, 60.0]], 20.0, 8.0, 4.5, 2.0);
        let car = agent(1, &[[-80.0, -2.0], [60.0, -2.0]], 34.0, 10.0, 4.5, 2.0);
        let truck = agent(
            2,
            &[[60.0, 2.0], [-6.0, 2.0], [-6.0, -60.0]],
            50.0,
            5.0,
            10.0,
            2.5,
        );
        let r = run_filter(&ego, &[car, truck], &FilterConfig::default(), 0.0).unwrap();
        let car_d = r.decision(AgentId(1)).unwrap();
        assert!(car_d.filtered, "{:?}", car_d.reason);
        assert_eq!(car_d.other_area.interval.limiting_agent, Some(AgentId(2)));
        assert!(!r.decision(AgentId(2)).unwrap().filtered);
    }
}
