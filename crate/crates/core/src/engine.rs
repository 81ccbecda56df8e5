//! Synchronous fixed-step integration on the ring, flow detection and auditing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::apply_bounds;
use crate::error::{InvariantKind, SimError};
use crate::road::{RoadGeometry, SimConfig, StrategyParams, Vec2, VehicleDims, VehicleState};
use crate::strategy::{compose_raw, NeighborCollector};

/// Absolute slack for the per-step state invariants.
pub const INVARIANT_TOL: f64 = 1e-9;

/// Relative change between consecutive measurement windows below which a
/// run counts as stationary.
pub const STATIONARITY_TOL: f64 = 0.10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub t: f64,
    pub step_index: u64,
    pub vehicles: Vec<VehicleState>,
}

impl WorldState {
    pub fn new(vehicles: Vec<VehicleState>) -> Self {
        WorldState {
            t: 0.0,
            step_index: 0,
            vehicles,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppliedAccel {
    pub id: u32,
    pub accel: Vec2,
}

/// What happened during one step. `applied` follows the storage order of the
/// vehicles in the world the step started from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_index: u64,
    pub applied: Vec<AppliedAccel>,
    pub crossings: usize,
    pub collisions: Vec<(u32, u32)>,
}

/// One point of a fundamental diagram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdPoint {
    pub n: usize,
    /// veh/km
    pub density: f64,
    /// veh/h, final measurement window
    pub flow: f64,
    /// m/s, averaged over vehicles and over the final window
    pub mean_speed: f64,
    /// false when there were no vehicles to average over
    pub speed_defined: bool,
    /// veh/h over the window preceding the final one
    pub prev_flow: f64,
    pub stationary: bool,
}

/// Indices of `vehicles` sorted by `(x, id)`, plus the inverse permutation.
fn ring_order(vehicles: &[VehicleState]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..vehicles.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        vehicles[a]
            .x
            .total_cmp(&vehicles[b].x)
            .then(vehicles[a].id.cmp(&vehicles[b].id))
    });
    let mut pos_of = vec![0; vehicles.len()];
    for (p, &i) in order.iter().enumerate() {
        pos_of[i] = p;
    }
    (order, pos_of)
}

/// Check the per-vehicle invariants of a freshly integrated state.
pub fn check_vehicle(
    v: &VehicleState,
    geometry: &RoadGeometry,
    params: &StrategyParams,
    step: u64,
) -> Result<(), SimError> {
    let fail = |kind, value| {
        Err(SimError::Invariant {
            step,
            vehicle: v.id,
            kind,
            value,
        })
    };
    if ![v.x, v.y, v.v_x, v.v_y].iter().all(|c| c.is_finite()) {
        return fail(InvariantKind::NonFinite, f64::NAN);
    }
    if v.right_clearance() < -INVARIANT_TOL {
        return fail(InvariantKind::RightBoundaryExit, v.right_clearance());
    }
    if v.left_clearance(geometry) < -INVARIANT_TOL {
        return fail(InvariantKind::LeftBoundaryExit, v.left_clearance(geometry));
    }
    if v.v_x < 0.0 {
        return fail(InvariantKind::NegativeSpeed, v.v_x);
    }
    if v.v_x > (1.0 + params.alpha) * v.v_d + INVARIANT_TOL {
        return fail(InvariantKind::Overspeed, v.v_x);
    }
    if v.v_y.abs() > params.beta * v.v_x + INVARIANT_TOL {
        return fail(InvariantKind::LateralSpeedCap, v.v_y);
    }
    Ok(())
}

/// Compute every vehicle's applied acceleration from the frozen snapshot.
pub fn compute_accelerations(
    world: &WorldState,
    params: &StrategyParams,
    config: &SimConfig,
) -> Result<Vec<AppliedAccel>, SimError> {
    let vehicles = &world.vehicles;
    let n = vehicles.len();
    let geometry = &config.geometry;
    let (order, pos_of) = ring_order(vehicles);
    let horizon = params.horizon_m;

    vehicles
        .par_iter()
        .enumerate()
        .with_min_len(16)
        .map_init(NeighborCollector::new, |collector, (i, ego)| {
            collector.clear();
            let pos = pos_of[i];
            for k in 1..n {
                let other = &vehicles[order[(pos + k) % n]];
                let gap = geometry.forward_gap(ego.x, other.x);
                if gap > horizon {
                    break;
                }
                if gap > 0.0 {
                    collector.push_downstream(ego, other, gap, params);
                }
            }
            for k in 1..n {
                let other = &vehicles[order[(pos + n - k) % n]];
                let gap = geometry.forward_gap(other.x, ego.x);
                if gap > horizon {
                    break;
                }
                if gap > 0.0 {
                    collector.push_upstream(ego, other, gap, params);
                }
            }
            let sets = collector.finish(params);
            let fb = compose_raw(ego, &sets, params);
            let bounded = apply_bounds(fb.raw, ego, &sets.rp_set, geometry, params, config.step_s)
                .map_err(|e| SimError::BoundaryFault {
                    step: world.step_index,
                    vehicle: ego.id,
                    detail: e.to_string(),
                })?;
            Ok(AppliedAccel {
                id: ego.id,
                accel: bounded.accel,
            })
        })
        .collect()
}

/// Constant-acceleration update of one vehicle over one step.
pub fn integrate(v: &VehicleState, accel: Vec2, t: f64, geometry: &RoadGeometry) -> VehicleState {
    VehicleState {
        x: geometry.wrap(v.x + v.v_x * t + 0.5 * accel.x * t * t),
        y: v.y + v.v_y * t + 0.5 * accel.y * t * t,
        v_x: (v.v_x + accel.x * t).max(0.0),
        v_y: v.v_y + accel.y * t,
        ..*v
    }
}

/// Advance the whole world by one step.
pub fn step(
    world: &WorldState,
    params: &StrategyParams,
    config: &SimConfig,
) -> Result<(WorldState, StepRecord), SimError> {
    let applied = compute_accelerations(world, params, config)?;
    let geometry = &config.geometry;
    let next_step = world.step_index + 1;
    let mut vehicles = Vec::with_capacity(world.vehicles.len());
    for (v, a) in world.vehicles.iter().zip(&applied) {
        let nv = integrate(v, a.accel, config.step_s, geometry);
        check_vehicle(&nv, geometry, params, next_step)?;
        vehicles.push(nv);
    }
    let next = WorldState {
        t: next_step as f64 * config.step_s,
        step_index: next_step,
        vehicles,
    };
    let crossings = detect_crossings(world, &next, config.detector_x, geometry);
    let collisions = collision_audit(&next, geometry);
    let record = StepRecord {
        step_index: world.step_index,
        applied,
        crossings,
        collisions,
    };
    Ok((next, record))
}

/// Vehicles whose center passed the detector during the step. Both worlds
/// must hold the same vehicles in the same storage order.
pub fn detect_crossings(
    prev: &WorldState,
    next: &WorldState,
    detector_x: f64,
    geometry: &RoadGeometry,
) -> usize {
    prev.vehicles
        .iter()
        .zip(&next.vehicles)
        .filter(|(a, b)| {
            let travel = geometry.forward_gap(a.x, b.x);
            travel > 0.0 && geometry.forward_gap(a.x, detector_x) < travel
        })
        .count()
}

/// Every pair of vehicle rectangles overlapping with positive area, as
/// `(smaller id, larger id)` in ascending order.
pub fn collision_audit(world: &WorldState, geometry: &RoadGeometry) -> Vec<(u32, u32)> {
    let vehicles = &world.vehicles;
    let n = vehicles.len();
    let (order, _) = ring_order(vehicles);
    let reach = VehicleDims::max_length();
    let mut hits = Vec::new();
    for p in 0..n {
        let a = &vehicles[order[p]];
        for k in 1..n {
            let b = &vehicles[order[(p + k) % n]];
            let gap = geometry.forward_gap(a.x, b.x);
            if gap >= reach {
                break;
            }
            if rectangles_overlap(a, b, gap) {
                hits.push((a.id.min(b.id), a.id.max(b.id)));
            }
        }
    }
    hits.sort_unstable();
    hits.dedup();
    hits
}

/// Rectangle test for two vehicles whose centers are `dx` apart longitudinally.
pub fn rectangles_overlap(a: &VehicleState, b: &VehicleState, dx: f64) -> bool {
    dx.abs() < a.half_length() + b.half_length() && (a.y - b.y).abs() < a.half_width() + b.half_width()
}

/// Aggregate outcome of a full run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub fd: FdPoint,
    pub steps: u64,
    /// Total colliding pairs summed over steps.
    pub collision_pairs: usize,
    /// Steps with at least one collision.
    pub collision_steps: usize,
}

impl RunSummary {
    pub fn is_clean(&self) -> bool {
        self.collision_pairs == 0
    }
}

fn validate_world(world: &WorldState, params: &StrategyParams, config: &SimConfig) -> Result<(), SimError> {
    let mut ids: Vec<u32> = world.vehicles.iter().map(|v| v.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(crate::error::ConfigError::Infeasible("duplicate vehicle ids".into()).into());
    }
    for v in &world.vehicles {
        if !(0.0..config.geometry.length_m).contains(&v.x) {
            return Err(crate::error::ConfigError::Infeasible(format!(
                "vehicle {} outside [0, length)",
                v.id
            ))
            .into());
        }
        check_vehicle(v, &config.geometry, params, world.step_index)?;
    }
    Ok(())
}

/// Flow in veh/h from a crossing count over `steps` steps of length `step_s`.
pub fn flow_veh_per_h(crossings: usize, steps: usize, step_s: f64) -> f64 {
    if steps == 0 {
        0.0
    } else {
        crossings as f64 / (steps as f64 * step_s) * 3600.0
    }
}

/// Whether the final window's flow is within the tolerance of the previous one.
pub fn is_stationary(prev_flow: f64, flow: f64) -> bool {
    if prev_flow == 0.0 {
        flow == 0.0
    } else {
        (flow - prev_flow).abs() <= STATIONARITY_TOL * prev_flow
    }
}

/// Run for `config.horizon_steps` steps, handing every state and step record
/// to `observer`, and measure flow over the final window.
pub fn run<F>(
    world0: WorldState,
    params: &StrategyParams,
    config: &SimConfig,
    mut observer: F,
) -> Result<RunSummary, SimError>
where
    F: FnMut(&WorldState, &StepRecord),
{
    params.validate()?;
    config.validate()?;
    validate_world(&world0, params, config)?;

    let k = config.horizon_steps;
    let w = config.measure_window_steps;
    let last_start = k - w;
    let prev_start = k.saturating_sub(2 * w);
    let n = world0.vehicles.len();

    let mut world = world0;
    let mut last_crossings = 0;
    let mut prev_crossings = 0;
    let mut speed_sum = 0.0;
    let mut collision_pairs = 0;
    let mut collision_steps = 0;

    for s in 0..k {
        let (next, record) = step(&world, params, config)?;
        if !record.collisions.is_empty() {
            collision_pairs += record.collisions.len();
            collision_steps += 1;
        }
        if s >= last_start {
            last_crossings += record.crossings;
            if n > 0 {
                speed_sum += next.vehicles.iter().map(|v| v.v_x).sum::<f64>() / n as f64;
            }
        } else if s >= prev_start {
            prev_crossings += record.crossings;
        }
        observer(&next, &record);
        world = next;
    }

    let flow = flow_veh_per_h(last_crossings, w, config.step_s);
    let prev_flow = flow_veh_per_h(prev_crossings, last_start - prev_start, config.step_s);
    let fd = FdPoint {
        n,
        density: n as f64 / (config.geometry.length_m / 1000.0),
        flow,
        mean_speed: if n > 0 { speed_sum / w as f64 } else { 0.0 },
        speed_defined: n > 0,
        prev_flow,
        stationary: last_start > prev_start && is_stationary(prev_flow, flow),
    };
    Ok(RunSummary {
        fd,
        steps: k as u64,
        collision_pairs,
        collision_steps,
    })
}

/// [`run`] that also keeps every step record.
pub fn run_recorded(
    world0: WorldState,
    params: &StrategyParams,
    config: &SimConfig,
) -> Result<(RunSummary, Vec<StepRecord>), SimError> {
    let mut records = Vec::with_capacity(config.horizon_steps);
    let summary = run(world0, params, config, |_, r| records.push(r.clone()))?;
    Ok((summary, records))
}
