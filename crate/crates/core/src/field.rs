//! Trapezoidal potential field and the pairwise repulsion/nudging forces.
//!
//! A downstream vehicle `j` is surrounded, from the point of view of an
//! upstream vehicle `i`, by a separable trapezoid-shaped field. The value of
//! that field at `i`'s center is the magnitude of the repulsion `j` exerts on
//! `i` and, with opposite sign, of the nudging `i` exerts on `j`.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimError};
use crate::road::{StrategyParams, Vec2, VehicleState};

/// Piecewise-linear plateau: 0 below `-d_flat - d_rise`, rising to 1 at
/// `-d_flat`, 1 on `[-d_flat, d_flat]`, falling to 0 at `d_flat + d_fall`.
///
/// A zero-width ramp is a hard edge: the closed plateau is 1 and everything
/// outside it is 0.
pub fn h_trapezoid(delta: f64, d_rise: f64, d_flat: f64, d_fall: f64) -> f64 {
    if delta < -d_flat {
        if d_rise > 0.0 {
            ((d_flat + delta + d_rise) / d_rise).max(0.0)
        } else {
            0.0
        }
    } else if delta > d_flat {
        if d_fall > 0.0 {
            (1.0 - (delta - d_flat) / d_fall).max(0.0)
        } else {
            0.0
        }
    } else {
        1.0
    }
}

/// Product of a longitudinal and a lateral trapezoid.
#[allow(clippy::too_many_arguments)]
pub fn pi_field(
    dx: f64,
    dy: f64,
    l_rise: f64,
    l_flat: f64,
    l_fall: f64,
    w_rise: f64,
    w_flat: f64,
    w_fall: f64,
) -> f64 {
    h_trapezoid(dx, l_rise, l_flat, l_fall) * h_trapezoid(dy, w_rise, w_flat, w_fall)
}

/// Speed-dependent extents of the field around a downstream vehicle as seen
/// by a specific upstream vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    /// Longitudinal lead extent, proportional to the upstream speed.
    pub l_x: f64,
    /// Longitudinal core half-extent: braking distance on the closing speed
    /// plus the two half-lengths.
    pub d_x: f64,
    /// Lateral rise extent, proportional to the lateral speed differential.
    pub l_y: f64,
    /// Lateral core half-extent: the two half-widths.
    pub d_y: f64,
}

impl FieldParams {
    /// Evaluate the field at an offset `(dx, dy)` of the upstream center
    /// relative to the downstream center.
    pub fn value_at(&self, dx: f64, dy: f64) -> f64 {
        let half_lead = 0.5 * self.l_x;
        // Lateral first: most candidate pairs are separated sideways.
        let lat = h_trapezoid(dy, self.l_y, self.d_y, self.l_y);
        if lat == 0.0 {
            return 0.0;
        }
        h_trapezoid(dx, half_lead, half_lead + self.d_x, half_lead) * lat
    }

    /// Largest longitudinal center distance at which the field is non-zero.
    pub fn reach(&self) -> f64 {
        self.l_x + self.d_x
    }
}

/// Field extents for the pair (`upstream` = i, `downstream` = j).
pub fn field_params(
    upstream: &VehicleState,
    downstream: &VehicleState,
    params: &StrategyParams,
) -> Result<FieldParams, ConfigError> {
    if !(params.c_x_ca > 0.0) {
        return Err(ConfigError::Invalid {
            name: "c_x_ca",
            reason: "must be positive".into(),
        });
    }
    Ok(extents(upstream, downstream, params))
}

/// Unchecked variant for the hot path; `params` must already be validated.
pub(crate) fn extents(
    upstream: &VehicleState,
    downstream: &VehicleState,
    params: &StrategyParams,
) -> FieldParams {
    let closing = (upstream.v_x - params.omega * downstream.v_x).max(0.0);
    FieldParams {
        l_x: (upstream.v_x * params.t_gap_x).max(params.l_x_min),
        d_x: 0.5 * closing * closing / params.c_x_ca
            + 0.5 * (upstream.dims.length_m + downstream.dims.length_m),
        l_y: ((upstream.v_y - downstream.v_y).abs() * params.t_gap_y).max(params.l_y_min),
        d_y: 0.5 * (upstream.dims.width_m + downstream.dims.width_m),
    }
}

/// Equal-and-opposite force pair between an upstream and a downstream vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairForce {
    /// Acts on the upstream vehicle, pointing away from the downstream one.
    pub repulsion_on_upstream: Vec2,
    /// Acts on the downstream vehicle; always the exact negation of the repulsion.
    pub nudging_on_downstream: Vec2,
    pub magnitude: f64,
}

impl PairForce {
    pub const ZERO: PairForce = PairForce {
        repulsion_on_upstream: Vec2::ZERO,
        nudging_on_downstream: Vec2::ZERO,
        magnitude: 0.0,
    };

    fn from_magnitude(magnitude: f64, dx: f64, dy: f64) -> PairForce {
        if magnitude == 0.0 {
            return PairForce::ZERO;
        }
        let dist = dx.hypot(dy);
        let rep = Vec2::new(magnitude * dx / dist, magnitude * dy / dist);
        PairForce {
            repulsion_on_upstream: rep,
            nudging_on_downstream: -rep,
            magnitude,
        }
    }
}

/// Force pair for `upstream` (i) located at offset `dx` (signed ring offset,
/// negative when i is behind) and `y_i - y_j` from `downstream` (j).
pub fn pair_force(
    upstream: &VehicleState,
    downstream: &VehicleState,
    params: &StrategyParams,
    dx: f64,
) -> Result<PairForce, SimError> {
    let dy = upstream.y - downstream.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(SimError::CoincidentCenters);
    }
    let fp = field_params(upstream, downstream, params)?;
    Ok(PairForce::from_magnitude(fp.value_at(dx, dy), dx, dy))
}

/// Hot-path pair force; `dx` must be non-zero (guaranteed when the pair has a
/// strictly positive forward gap).
pub(crate) fn pair_force_unchecked(
    upstream: &VehicleState,
    downstream: &VehicleState,
    params: &StrategyParams,
    dx: f64,
) -> PairForce {
    let dy = upstream.y - downstream.y;
    let fp = extents(upstream, downstream, params);
    PairForce::from_magnitude(fp.value_at(dx, dy), dx, dy)
}
