//! Bound cascade turning raw forces into applied accelerations.
//!
//! Stages run in a fixed order and later stages override earlier ones:
//!
//! 1. technical acceleration limits,
//! 2. the car-following bound of the tightest leader (never below the
//!    technical braking limit),
//! 3. the overspeed / no-reverse interval on the longitudinal speed,
//! 4. the lateral speed cap `|v_y| <= beta * v_x`, evaluated against the
//!    longitudinal speed the vehicle will have after this step,
//! 5. the escape-velocity caps of both road boundaries, tightened within a
//!    few centimetres of the edge so that a full lateral stop (which stage 4
//!    demands of a stopped vehicle) never conflicts with them.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::road::{HeadwayMeasure, RoadGeometry, StrategyParams, Vec2, VehicleState};
use crate::strategy::Neighbor;

/// Relative slack on the discriminant before a negative value is treated as
/// a genuine escape-velocity violation rather than rounding.
const DISCRIMINANT_SLACK: f64 = 1e-9;

/// Resolved acceleration intervals of one vehicle for one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccelBounds {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    /// Leader whose car-following bound is the tightest, if any.
    pub leader_id: Option<u32>,
    pub left_boundary_active: bool,
    pub right_boundary_active: bool,
}

/// Largest acceleration toward a boundary at distance `d` such that, after one
/// step of length `t`, the lateral speed still respects the escape-velocity
/// bound `v <= sqrt(2 u d)` at the new distance (and the distance stays
/// non-negative).
///
/// `v` is the speed toward the boundary (negative when moving away). While
/// `v <= 2 d / t` the escape-velocity constraint is the active one and the
/// cap is the larger root of the one-step quadratic; above that the vehicle
/// ends the step moving away and the cap is where it just touches the edge.
pub fn boundary_accel_cap(d: f64, v: f64, u: f64, t: f64) -> Result<f64, SimError> {
    let d = d.max(0.0);
    let a = 4.0 * u * v / t;
    let b = 8.0 * u * d / (t * t);
    let mut disc = u * u - a + b;
    if disc < 0.0 {
        let scale = u * u + a.abs() + b;
        if disc < -DISCRIMINANT_SLACK * scale {
            return Err(SimError::EscapeVelocity { distance: d, speed: v });
        }
        disc = 0.0;
    }
    if v * t > 2.0 * d {
        return Ok(2.0 * (d - v * t) / (t * t));
    }
    Ok(0.5 * (-u - 2.0 * v / t + disc.sqrt()))
}

/// Largest acceleration toward a boundary that keeps `v' <= 2 d' / t`, i.e.
/// a complete lateral stop stays possible within the next step without
/// reaching the boundary. Holds inductively and never drops below `-2 d / t^2`.
pub fn stop_feasible_cap(d: f64, v: f64, t: f64) -> f64 {
    d.max(0.0) / (t * t) - 1.5 * v / t
}

/// Combined boundary limit: escape-velocity cap and one-step stop feasibility.
pub fn boundary_limit(d: f64, v: f64, u: f64, t: f64) -> Result<f64, SimError> {
    Ok(boundary_accel_cap(d, v, u, t)?.min(stop_feasible_cap(d, v, t)))
}

/// The tightest car-following bound over the repulsion set, or `+inf` when the
/// set is empty.
pub fn car_following_cap(
    ego: &VehicleState,
    rp_set: &[Neighbor],
    params: &StrategyParams,
    t: f64,
) -> (f64, Option<u32>) {
    let mut best = (f64::INFINITY, None);
    for n in rp_set {
        let zeta = leader_bound(ego, n, params, t);
        if zeta < best.0 {
            best = (zeta, Some(n.id));
        }
    }
    best
}

fn leader_bound(ego: &VehicleState, n: &Neighbor, params: &StrategyParams, t: f64) -> f64 {
    let lambda = n.force.x.abs().min(1.0).powf(params.eta);
    let headway = match params.headway {
        HeadwayMeasure::BumperGap => (n.gap_m - 0.5 * (ego.dims.length_m + n.length_m)).max(0.0),
        HeadwayMeasure::CenterGap => n.gap_m,
    };
    let v_hat = if params.t_gap_x > 0.0 {
        (headway / params.t_gap_x).min(n.v_x)
    } else {
        n.v_x
    };
    (1.0 - lambda) * (ego.v_d - ego.v_x) / t + lambda * (v_hat - ego.v_x) / t
}

/// Intervals that keep `0 <= v_x <= (1 + alpha) v_d` and `|v_y| <= beta v_x`
/// one step ahead, using the current longitudinal speed for the lateral cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedCaps {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

pub fn speed_caps(v_x: f64, v_y: f64, v_d: f64, params: &StrategyParams, t: f64) -> SpeedCaps {
    let (y_lo, y_hi) = lateral_cap(v_x, v_y, params.beta, t);
    SpeedCaps {
        x_lo: -v_x / t,
        x_hi: ((1.0 + params.alpha) * v_d - v_x) / t,
        y_lo,
        y_hi,
    }
}

/// Symmetric lateral interval keeping `|v_y + f t| <= beta * v_ref`.
pub fn lateral_cap(v_ref: f64, v_y: f64, beta: f64, t: f64) -> (f64, f64) {
    let lim = beta * v_ref.max(0.0);
    ((-lim - v_y) / t, (lim - v_y) / t)
}

/// Applied acceleration and the intervals that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundedAccel {
    pub accel: Vec2,
    pub bounds: AccelBounds,
}

/// Run the full cascade on a raw acceleration.
pub fn apply_bounds(
    raw: Vec2,
    ego: &VehicleState,
    rp_set: &[Neighbor],
    geometry: &RoadGeometry,
    params: &StrategyParams,
    t: f64,
) -> Result<BoundedAccel, SimError> {
    let (zeta, leader_id) = car_following_cap(ego, rp_set, params, t);
    let caps = speed_caps(ego.v_x, ego.v_y, ego.v_d, params, t);

    let longitudinal = |f: f64| {
        let f = f.max(params.u_x_min).min(params.u_x_max);
        let f = f.min(zeta).max(params.u_x_min);
        f.max(caps.x_lo).min(caps.x_hi)
    };
    let f_x = longitudinal(raw.x);

    let v_x_next = ego.v_x + f_x * t;
    let (lat_lo, lat_hi) = lateral_cap(v_x_next, ego.v_y, params.beta, t);
    let u = params.u_y_b;
    let left = boundary_limit(ego.left_clearance(geometry), ego.v_y, u, t)?;
    let right = boundary_limit(ego.right_clearance(), -ego.v_y, u, t)?;

    let lateral_pre = |f: f64| f.max(-u).min(u).max(lat_lo).min(lat_hi);
    let lateral = |f: f64| lateral_pre(f).min(left).max(-right);
    let pre_y = lateral_pre(raw.y);
    let f_y = lateral(raw.y);

    Ok(BoundedAccel {
        accel: Vec2::new(f_x, f_y),
        bounds: AccelBounds {
            x_lo: longitudinal(f64::NEG_INFINITY),
            x_hi: longitudinal(f64::INFINITY),
            y_lo: lateral(f64::NEG_INFINITY),
            y_hi: lateral(f64::INFINITY),
            leader_id: if zeta < params.u_x_max { leader_id } else { None },
            left_boundary_active: pre_y > left,
            right_boundary_active: pre_y < -right,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::VehicleDims;

    fn car(y: f64, v_x: f64, v_y: f64, v_d: f64) -> VehicleState {
        VehicleState {
            id: 0,
            x: 0.0,
            y,
            v_x,
            v_y,
            v_d,
            dims: VehicleDims::class(3).unwrap(),
        }
    }

    fn leader(gap: f64, v_x: f64, fx: f64) -> Neighbor {
        Neighbor {
            id: 7,
            gap_m: gap,
            v_x,
            length_m: 4.25,
            force: Vec2::new(fx, 0.0),
            magnitude: fx.abs(),
        }
    }

    #[test]
    fn boundary_cap_examples() {
        assert_eq!(boundary_accel_cap(0.0, 0.0, 1.5, 0.2).unwrap(), 0.0);
        let f = boundary_accel_cap(1.0, 1.0, 1.5, 0.2).unwrap();
        assert!((f - 2.5).abs() < 1e-12);
        let (v1, d1) = (1.0 + f * 0.2, 1.0 - 0.2 - 0.5 * f * 0.04);
        assert!((v1 - 1.5).abs() < 1e-12);
        assert!((d1 - 0.75).abs() < 1e-12);
        assert!((v1 - (2.0 * 1.5 * d1).sqrt()).abs() < 1e-12);
        let far = boundary_accel_cap(100.0, 0.0, 1.5, 0.2).unwrap();
        // 0.5 * (-1.5 + sqrt(1.5^2 + 8 * 1.5 * 100 / 0.04)), far above the technical cap.
        assert!((far - 85.8558).abs() < 1e-3, "{far}");
    }

    #[test]
    fn boundary_cap_rejects_escape_violation() {
        // sqrt(2 * 1.5 * 0.1) ~ 0.55; moving at 3 m/s toward the edge.
        assert!(matches!(
            boundary_accel_cap(0.1, 3.0, 1.5, 0.2),
            Err(SimError::EscapeVelocity { .. })
        ));
    }

    #[test]
    fn car_following_examples() {
        let params = StrategyParams::default();
        // lambda = 0: no repulsion in x.
        let ego = car(5.0, 28.0, 0.0, 30.0);
        let (z, id) = car_following_cap(&ego, &[leader(50.0, 20.0, 0.0)], &params, 0.2);
        assert!((z - 10.0).abs() < 1e-12);
        assert_eq!(id, Some(7));

        // lambda = 1, bumper gap 10 m.
        let (z, _) = car_following_cap(&ego, &[leader(10.0 + 4.25, 20.0, -1.0)], &params, 0.2);
        assert!((z - (10.0 / 0.65 - 28.0) / 0.2).abs() < 1e-9);
        assert!((z + 63.08).abs() < 0.01);

        let lambda = 0.5f64.powf(0.25);
        assert!((lambda - 0.8409).abs() < 1e-4);
    }

    #[test]
    fn empty_repulsion_set_is_non_binding() {
        let params = StrategyParams::default();
        let ego = car(5.0, 28.0, 0.0, 30.0);
        assert_eq!(car_following_cap(&ego, &[], &params, 0.2), (f64::INFINITY, None));
    }

    #[test]
    fn speed_cap_examples() {
        let params = StrategyParams::default();
        let c = speed_caps(36.0, 0.0, 30.0, &params, 0.2);
        assert_eq!(c.x_hi, 0.0);
        let c = speed_caps(0.0, 0.4, 30.0, &params, 0.2);
        assert_eq!(c.x_lo, 0.0);
        assert_eq!(c.y_lo, c.y_hi);
        assert!((c.y_lo + 2.0).abs() < 1e-12);
        let c = speed_caps(30.0, 5.0, 30.0, &params, 0.2);
        assert!((c.y_lo + 70.0).abs() < 1e-9);
        assert!((c.y_hi - 20.0).abs() < 1e-9);
    }

    #[test]
    fn unbound_vehicle_passes_through() {
        let params = StrategyParams::default();
        let g = RoadGeometry::default();
        let ego = car(5.1, 20.0, 0.0, 30.0);
        let out = apply_bounds(Vec2::new(0.9, 0.0), &ego, &[], &g, &params, 0.2).unwrap();
        assert_eq!(out.accel, Vec2::new(0.9, 0.0));
        assert_eq!(out.bounds.leader_id, None);
    }

    #[test]
    fn technical_clip() {
        let params = StrategyParams::default();
        let g = RoadGeometry::default();
        let ego = car(5.1, 20.0, 0.0, 30.0);
        let out = apply_bounds(Vec2::new(5.0, 0.0), &ego, &[], &g, &params, 0.2).unwrap();
        assert_eq!(out.accel.x, 2.0);
    }

    #[test]
    fn deep_leader_bound_gives_maximal_braking() {
        let params = StrategyParams::default();
        let g = RoadGeometry::default();
        let ego = car(5.1, 28.0, 0.0, 30.0);
        let l = leader(10.0 + 4.25, 20.0, -1.0);
        let out = apply_bounds(Vec2::new(0.5, 0.0), &ego, &[l], &g, &params, 0.2).unwrap();
        assert_eq!(out.accel.x, -4.5);
        assert_eq!(out.bounds.leader_id, Some(7));
        assert!(out.bounds.x_lo <= out.bounds.x_hi);
    }

    #[test]
    fn stopped_vehicle_cannot_reverse_or_drift() {
        let params = StrategyParams::default();
        let g = RoadGeometry::default();
        let ego = car(5.1, 0.0, 0.0, 30.0);
        let l = leader(5.0, 0.0, -1.0);
        let out = apply_bounds(Vec2::new(-3.0, 1.0), &ego, &[l], &g, &params, 0.2).unwrap();
        assert_eq!(out.accel, Vec2::new(0.0, 0.0));
    }

    #[test]
    fn edge_hugging_vehicle_is_held_back() {
        let params = StrategyParams::default();
        let g = RoadGeometry::default();
        // Touching the left edge, drifting left.
        let ego = car(10.2 - 0.9, 30.0, 0.0, 30.0);
        let out = apply_bounds(Vec2::new(0.0, 1.5), &ego, &[], &g, &params, 0.2).unwrap();
        assert!(out.accel.y <= 1e-9);
        assert!(out.bounds.left_boundary_active);
    }
}
