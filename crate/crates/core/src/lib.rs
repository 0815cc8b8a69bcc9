//! Group-interaction filtering for risk-aware velocity planning.

pub mod cli;
pub mod encounter;
pub mod error;
pub mod filter;
pub mod geometry;
pub mod output;
pub mod planner;
pub mod reachability;
pub mod scenario;
pub mod sim;

pub use encounter::{
    closest_encounter, collision_point, AgentId, AgentState, CollisionPoint, EncounterConfig,
    EncounterResult,
};
pub use error::{Error, Result};
pub use filter::{run_filter, FilterConfig, FilterDecision, FilterReason, FilterReport};
pub use geometry::{Footprint, Path, Pose2D, Vec2};
pub use planner::{plan, PlannerConfig, VelocityProfile};
pub use reachability::{ReachArea, ReachConfig, ReachInterval};
pub use scenario::{catalog, check, Catalog, Expectations};
pub use sim::{run, Mode, Scenario, SimTrace};
