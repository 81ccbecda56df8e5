//! Ring-road geometry, vehicle state, and the global configuration types.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Lower end of the desired-speed range (m/s).
pub const MIN_DESIRED_SPEED: f64 = 25.0;
/// Upper end of the desired-speed range (m/s).
pub const MAX_DESIRED_SPEED: f64 = 35.0;

/// Plain 2-vector used for forces and accelerations. `x` is longitudinal,
/// `y` lateral (positive toward the left road boundary).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Componentwise product.
    pub fn hadamard(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x * other.x, self.y * other.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A periodic road: the longitudinal coordinate wraps at `length_m`, the
/// lateral coordinate is bounded by `0` (right edge) and `width_m` (left edge).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadGeometry {
    pub length_m: f64,
    pub width_m: f64,
}

impl Default for RoadGeometry {
    fn default() -> Self {
        RoadGeometry {
            length_m: 1000.0,
            width_m: 10.2,
        }
    }
}

impl RoadGeometry {
    /// Always true; the only geometry supported is a ring.
    pub const fn is_ring(&self) -> bool {
        true
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            return Err(ConfigError::invalid("length_m", "must be positive"));
        }
        if !(self.width_m > 0.0 && self.width_m.is_finite()) {
            return Err(ConfigError::invalid("width_m", "must be positive"));
        }
        Ok(())
    }

    /// Map any longitudinal coordinate onto `[0, length_m)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let w = x.rem_euclid(self.length_m);
        // rem_euclid can round up to exactly length_m for tiny negative inputs.
        if w >= self.length_m {
            0.0
        } else {
            w
        }
    }

    pub fn forward_gap(&self, x_from: f64, x_to: f64) -> f64 {
        forward_gap(x_from, x_to, self.length_m)
    }
}

/// Distance travelled downstream from `x_from` to reach `x_to` on a ring of
/// circumference `length_m`. Always in `[0, length_m)`.
pub fn forward_gap(x_from: f64, x_to: f64, length_m: f64) -> f64 {
    let d = x_to - x_from;
    if d >= 0.0 {
        if d >= length_m {
            d.rem_euclid(length_m)
        } else {
            d
        }
    } else {
        let w = d + length_m;
        if w >= length_m {
            0.0
        } else if w < 0.0 {
            d.rem_euclid(length_m)
        } else {
            w
        }
    }
}

/// Desired longitudinal speed for a vehicle whose initial lateral center is
/// `y0`: linear from 25 m/s at the right edge to 35 m/s at the left edge.
pub fn desired_speed_for(y0: f64, width_m: f64) -> f64 {
    MIN_DESIRED_SPEED + (MAX_DESIRED_SPEED - MIN_DESIRED_SPEED) * y0 / width_m
}

/// One of the six passenger-car dimension classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleDims {
    pub class_id: u8,
    pub length_m: f64,
    pub width_m: f64,
}

pub const DIMENSION_CLASSES: [VehicleDims; 6] = [
    VehicleDims { class_id: 1, length_m: 3.20, width_m: 1.60 },
    VehicleDims { class_id: 2, length_m: 3.90, width_m: 1.70 },
    VehicleDims { class_id: 3, length_m: 4.25, width_m: 1.80 },
    VehicleDims { class_id: 4, length_m: 4.55, width_m: 1.82 },
    VehicleDims { class_id: 5, length_m: 4.60, width_m: 1.77 },
    VehicleDims { class_id: 6, length_m: 5.15, width_m: 1.84 },
];

impl VehicleDims {
    /// Look up a class by its 1-based id.
    pub fn class(class_id: u8) -> Option<VehicleDims> {
        DIMENSION_CLASSES
            .iter()
            .copied()
            .find(|d| d.class_id == class_id)
    }

    /// Longest vehicle of any class; bounds the collision-audit scan window.
    pub fn max_length() -> f64 {
        DIMENSION_CLASSES
            .iter()
            .map(|d| d.length_m)
            .fold(0.0, f64::max)
    }

    pub fn max_width() -> f64 {
        DIMENSION_CLASSES
            .iter()
            .map(|d| d.width_m)
            .fold(0.0, f64::max)
    }
}

/// Draw a dimension class uniformly.
pub fn sample_dims<R: Rng + ?Sized>(rng: &mut R) -> VehicleDims {
    DIMENSION_CLASSES[rng.gen_range(0..DIMENSION_CLASSES.len())]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: u32,
    /// Longitudinal center, wrapped into `[0, length_m)`.
    pub x: f64,
    /// Lateral center, measured from the right road edge.
    pub y: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub v_d: f64,
    pub dims: VehicleDims,
}

impl VehicleState {
    pub fn half_length(&self) -> f64 {
        0.5 * self.dims.length_m
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.dims.width_m
    }

    /// Clearance between the left edge of the vehicle and the left road boundary.
    pub fn left_clearance(&self, geometry: &RoadGeometry) -> f64 {
        geometry.width_m - self.y - self.half_width()
    }

    /// Clearance between the right edge of the vehicle and the right road boundary.
    pub fn right_clearance(&self) -> f64 {
        self.y - self.half_width()
    }
}

/// How the longitudinal distance to a leader is measured in the car-following bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadwayMeasure {
    /// Bumper-to-bumper clearance, `max(0, center gap - (l_i + l_j)/2)`.
    #[default]
    BumperGap,
    /// Center-to-center distance.
    CenterGap,
}

/// Every tunable constant of the movement strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyParams {
    pub c_x_ca: f64,
    pub c_y_ca: f64,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub t_gap_x: f64,
    pub t_gap_y: f64,
    pub omega: f64,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub u_x_min: f64,
    pub u_x_max: f64,
    pub u_y_b: f64,
    pub horizon_m: f64,
    pub n_rp: usize,
    pub n_ng: usize,
    /// Floor on the lateral ramp width of the field, in metres.
    pub l_y_min: f64,
    /// Floor on the longitudinal lead extent of the field, in metres. Keeps a
    /// stopped follower aware of a leader just beyond contact.
    pub l_x_min: f64,
    pub headway: HeadwayMeasure,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            c_x_ca: 4.5,
            c_y_ca: 1.5,
            gamma_x: 0.9,
            gamma_y: 1.0,
            t_gap_x: 0.65,
            t_gap_y: 0.25,
            omega: 0.3,
            eta: 0.25,
            alpha: 0.2,
            beta: 0.3,
            u_x_min: -4.5,
            u_x_max: 2.0,
            u_y_b: 1.5,
            horizon_m: 120.0,
            n_rp: 6,
            n_ng: 3,
            l_y_min: 1.5,
            l_x_min: 0.5,
            headway: HeadwayMeasure::BumperGap,
        }
    }
}

impl StrategyParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |name: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::invalid(name, "must lie in [0, 1]"))
            }
        };
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(name, "must be positive"))
            }
        };
        let non_negative = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(name, "must be non-negative"))
            }
        };
        positive("c_x_ca", self.c_x_ca)?;
        non_negative("c_y_ca", self.c_y_ca)?;
        unit("gamma_x", self.gamma_x)?;
        unit("gamma_y", self.gamma_y)?;
        unit("omega", self.omega)?;
        non_negative("t_gap_x", self.t_gap_x)?;
        non_negative("t_gap_y", self.t_gap_y)?;
        positive("eta", self.eta)?;
        non_negative("alpha", self.alpha)?;
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(ConfigError::invalid("beta", "must lie in (0, 1]"));
        }
        if !(self.u_x_min < 0.0 && self.u_x_min.is_finite()) {
            return Err(ConfigError::invalid("u_x_min", "must be negative"));
        }
        positive("u_x_max", self.u_x_max)?;
        positive("u_y_b", self.u_y_b)?;
        positive("horizon_m", self.horizon_m)?;
        non_negative("l_y_min", self.l_y_min)?;
        non_negative("l_x_min", self.l_x_min)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub step_s: f64,
    pub horizon_steps: usize,
    pub measure_window_steps: usize,
    pub detector_x: f64,
    pub seed: u64,
    pub geometry: RoadGeometry,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step_s: 0.2,
            horizon_steps: 6000,
            measure_window_steps: 1500,
            detector_x: 0.0,
            seed: 0x5eed_2019,
            geometry: RoadGeometry::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.geometry.validate()?;
        if !(self.step_s > 0.0 && self.step_s.is_finite()) {
            return Err(ConfigError::invalid("step_s", "must be positive"));
        }
        if self.measure_window_steps == 0 {
            return Err(ConfigError::invalid("measure_window_steps", "must be at least 1"));
        }
        if self.measure_window_steps > self.horizon_steps {
            return Err(ConfigError::invalid(
                "measure_window_steps",
                "must not exceed horizon_steps",
            ));
        }
        if !(0.0..self.geometry.length_m).contains(&self.detector_x) {
            return Err(ConfigError::invalid("detector_x", "must lie in [0, length_m)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_gap_examples() {
        assert_eq!(forward_gap(990.0, 5.0, 1000.0), 15.0);
        assert_eq!(forward_gap(5.0, 5.0, 1000.0), 0.0);
        assert_eq!(forward_gap(5.0, 990.0, 1000.0), 985.0);
    }

    #[test]
    fn forward_gap_stays_below_length_for_tiny_offsets() {
        let g = forward_gap(1e-17, 0.0, 1000.0);
        assert!((0.0..1000.0).contains(&g));
    }

    #[test]
    fn wrap_handles_edges() {
        let g = RoadGeometry::default();
        assert_eq!(g.wrap(1005.0), 5.0);
        assert_eq!(g.wrap(-1.0), 999.0);
        assert!(g.wrap(-1e-18) < 1000.0);
    }

    #[test]
    fn desired_speed_examples() {
        assert_eq!(desired_speed_for(0.0, 10.2), 25.0);
        assert_eq!(desired_speed_for(10.2, 10.2), 35.0);
        assert!((desired_speed_for(5.1, 10.2) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn table_rows() {
        let c1 = VehicleDims::class(1).unwrap();
        assert_eq!((c1.length_m, c1.width_m), (3.20, 1.60));
        let c6 = VehicleDims::class(6).unwrap();
        assert_eq!((c6.length_m, c6.width_m), (5.15, 1.84));
        assert!(VehicleDims::class(7).is_none());
        assert_eq!(VehicleDims::max_length(), 5.15);
    }

    #[test]
    fn class_frequencies_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 6];
        let draws = 60_000;
        for _ in 0..draws {
            let d = sample_dims(&mut rng);
            counts[(d.class_id - 1) as usize] += 1;
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 6.0).abs() <= 0.01, "frequency {freq}");
        }
    }

    #[test]
    fn default_params_validate() {
        StrategyParams::default().validate().unwrap();
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_params() {
        let p = StrategyParams { c_x_ca: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = StrategyParams { gamma_x: 1.5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = StrategyParams { u_x_min: 0.5, ..Default::default() };
        assert!(p.validate().is_err());
        let c = SimConfig { measure_window_steps: 7000, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
