//! Lane-free traffic on a 2-D ring road.
//!
//! Every vehicle is driven by three artificial forces: a pull toward its
//! desired speed, repulsion from vehicles ahead, and nudging from vehicles
//! behind. The resulting accelerations are clipped by a cascade of technical,
//! car-following, speed and road-boundary bounds before a synchronous
//! constant-acceleration update.
//!
//! Modules, bottom-up: [`road`] (geometry and state), [`field`] (pairwise
//! potential field), [`strategy`] (force composition), [`bounds`] (bound
//! cascade), [`engine`] (integration and measurement), [`harness`]
//! (placement, scenarios, fundamental-diagram series).

pub mod bounds;
pub mod engine;
pub mod error;
pub mod field;
pub mod harness;
pub mod road;
pub mod strategy;

pub use bounds::{apply_bounds, boundary_accel_cap, car_following_cap, speed_caps, AccelBounds};
pub use engine::{collision_audit, detect_crossings, run, step, FdPoint, RunSummary, StepRecord, WorldState};
pub use error::{ConfigError, InvariantKind, SimError};
pub use field::{field_params, h_trapezoid, pair_force, pi_field, FieldParams, PairForce};
pub use harness::{initial_placement, run_fd_series, run_point, FdRun, PlacementSpec, PointSetup, ScenarioSpec, ZoneLayout};
pub use road::{
    desired_speed_for, forward_gap, sample_dims, HeadwayMeasure, RoadGeometry, SimConfig,
    StrategyParams, Vec2, VehicleDims, VehicleState,
};
pub use strategy::{compose_raw, erf, select_neighbor_sets, target_speed_force, ForceBreakdown, NeighborSets};
