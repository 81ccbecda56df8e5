//! Initial placement, scenario definitions and fundamental-diagram series.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run, RunSummary, StepRecord, WorldState};
use crate::error::{ConfigError, SimError};
use crate::road::{
    desired_speed_for, sample_dims, RoadGeometry, SimConfig, StrategyParams, VehicleDims,
    VehicleState,
};

/// How zone centers are laid out across the road.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneLayout {
    /// Centers of consecutive lanes of `zone_width_m`: 1.7, 5.1, 8.5 m for 3.4 m lanes.
    #[default]
    LaneCentered,
    /// Centers `zone_width_m / 2` apart starting at `zone_width_m / 2`: 1.7, 3.4, 5.1 m.
    Compressed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementSpec {
    pub layout: ZoneLayout,
    pub zone_width_m: f64,
    pub jitter_half_width: f64,
    /// Minimum bumper-to-bumper distance between consecutive vehicles sharing a lateral band.
    pub longitudinal_min_gap: f64,
}

impl Default for PlacementSpec {
    fn default() -> Self {
        PlacementSpec {
            layout: ZoneLayout::LaneCentered,
            zone_width_m: 3.4,
            jitter_half_width: 0.5,
            longitudinal_min_gap: 0.5,
        }
    }
}

impl PlacementSpec {
    pub fn zone_count(&self, width_m: f64) -> usize {
        ((width_m / self.zone_width_m).floor() as usize).max(1)
    }

    pub fn zone_centers(&self, width_m: f64) -> Vec<f64> {
        let half = 0.5 * self.zone_width_m;
        let pitch = match self.layout {
            ZoneLayout::LaneCentered => self.zone_width_m,
            ZoneLayout::Compressed => half,
        };
        (0..self.zone_count(width_m))
            .map(|l| half + pitch * l as f64)
            .collect()
    }

    pub fn validate(&self, width_m: f64) -> Result<(), ConfigError> {
        if !(self.zone_width_m > 0.0) {
            return Err(ConfigError::invalid("zone_width_m", "must be positive"));
        }
        if !(self.jitter_half_width >= 0.0) {
            return Err(ConfigError::invalid("jitter_half_width", "must be non-negative"));
        }
        if !(self.longitudinal_min_gap >= 0.0) {
            return Err(ConfigError::invalid("longitudinal_min_gap", "must be non-negative"));
        }
        let reach = self.jitter_half_width + 0.5 * VehicleDims::max_width();
        for c in self.zone_centers(width_m) {
            if c - reach < 0.0 || c + reach > width_m {
                return Err(ConfigError::Infeasible(format!(
                    "zone centered at {c} m does not fit a {width_m} m road"
                )));
            }
        }
        Ok(())
    }

    /// Groups of consecutive zones whose lateral bands can touch; vehicles in
    /// the same group are spaced longitudinally against each other.
    fn zone_groups(&self, centers: &[f64]) -> Vec<Vec<usize>> {
        let clearance = 2.0 * self.jitter_half_width + VehicleDims::max_width();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (l, &c) in centers.iter().enumerate() {
            match groups.last_mut() {
                Some(g) if c - centers[*g.last().unwrap()] < clearance => g.push(l),
                _ => groups.push(vec![l]),
            }
        }
        groups
    }
}

/// Spread `n` vehicles over the road at rest.
///
/// RNG draw order: for each vehicle in id order, its dimension class then its
/// lateral jitter; then, again in id order, one longitudinal position each.
pub fn initial_placement<R: Rng + ?Sized>(
    n: usize,
    geometry: &RoadGeometry,
    placement: &PlacementSpec,
    rng: &mut R,
) -> Result<WorldState, ConfigError> {
    geometry.validate()?;
    placement.validate(geometry.width_m)?;
    let centers = placement.zone_centers(geometry.width_m);
    let zones = centers.len();
    let per_zone = |l: usize| n / zones + usize::from(l < n % zones);

    let mut vehicles = Vec::with_capacity(n);
    let mut zone_of = Vec::with_capacity(n);
    let mut id = 0u32;
    for (l, &center) in centers.iter().enumerate() {
        for _ in 0..per_zone(l) {
            let dims = sample_dims(rng);
            let j = placement.jitter_half_width;
            let y = center + if j > 0.0 { rng.gen_range(-j..=j) } else { 0.0 };
            vehicles.push(VehicleState {
                id,
                x: 0.0,
                y,
                v_x: 0.0,
                v_y: 0.0,
                v_d: desired_speed_for(y, geometry.width_m),
                dims,
            });
            zone_of.push(l);
            id += 1;
        }
    }
    for v in vehicles.iter_mut() {
        v.x = rng.gen_range(0.0..geometry.length_m);
    }

    for group in placement.zone_groups(&centers) {
        let mut members: Vec<usize> = (0..n).filter(|&i| group.contains(&zone_of[i])).collect();
        spread_longitudinally(&mut vehicles, &mut members, geometry, placement.longitudinal_min_gap)?;
    }
    Ok(WorldState::new(vehicles))
}

/// Keep the drawn cyclic order but stretch every gap to at least the minimum,
/// distributing the remaining slack in proportion to the drawn gaps.
fn spread_longitudinally(
    vehicles: &mut [VehicleState],
    members: &mut [usize],
    geometry: &RoadGeometry,
    min_gap: f64,
) -> Result<(), ConfigError> {
    let m = members.len();
    if m < 2 {
        return Ok(());
    }
    members.sort_by(|&a, &b| vehicles[a].x.total_cmp(&vehicles[b].x).then(a.cmp(&b)));
    let length = geometry.length_m;
    let required: Vec<f64> = (0..m)
        .map(|k| {
            let a = &vehicles[members[k]];
            let b = &vehicles[members[(k + 1) % m]];
            0.5 * (a.dims.length_m + b.dims.length_m) + min_gap
        })
        .collect();
    let total: f64 = required.iter().sum();
    if total > length {
        return Err(ConfigError::Infeasible(format!(
            "{m} vehicles need {total:.1} m in one lateral band of a {length} m ring"
        )));
    }
    let slack = length - total;
    let drawn: Vec<f64> = (0..m)
        .map(|k| {
            let a = vehicles[members[k]].x;
            let b = vehicles[members[(k + 1) % m]].x;
            if k + 1 == m {
                b + length - a
            } else {
                b - a
            }
        })
        .collect();
    let mut x = vehicles[members[0]].x;
    for k in 0..m - 1 {
        x += required[k] + slack * drawn[k] / length;
        vehicles[members[k + 1]].x = geometry.wrap(x);
    }
    Ok(())
}

/// One series of fundamental-diagram runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub n_ng: usize,
    pub n_rp: usize,
    pub width_m: f64,
    pub n_values: Vec<usize>,
}

impl ScenarioSpec {
    pub fn no_nudging() -> Self {
        ScenarioSpec {
            name: "no-nudging".into(),
            gamma_x: 0.0,
            gamma_y: 0.0,
            n_ng: 0,
            n_rp: 6,
            width_m: 10.2,
            n_values: (1..=9).map(|k| 50 * k).collect(),
        }
    }

    pub fn nominal_nudging() -> Self {
        ScenarioSpec {
            name: "nominal-nudging".into(),
            gamma_x: 0.9,
            gamma_y: 1.0,
            n_ng: 3,
            ..Self::no_nudging()
        }
    }

    pub fn moderate_nudging() -> Self {
        ScenarioSpec {
            name: "moderate-nudging".into(),
            gamma_x: 0.45,
            gamma_y: 0.5,
            n_ng: 3,
            ..Self::no_nudging()
        }
    }

    pub fn widened_road() -> Self {
        ScenarioSpec {
            name: "widened-road".into(),
            width_m: 11.9,
            n_values: (1..=11).map(|k| 50 * k).collect(),
            ..Self::nominal_nudging()
        }
    }

    /// The four standard series, in their conventional order.
    pub fn standard() -> Vec<ScenarioSpec> {
        vec![
            Self::no_nudging(),
            Self::nominal_nudging(),
            Self::moderate_nudging(),
            Self::widened_road(),
        ]
    }

    pub fn apply(&self, params: &StrategyParams, config: &SimConfig) -> (StrategyParams, SimConfig) {
        let params = StrategyParams {
            gamma_x: self.gamma_x,
            gamma_y: self.gamma_y,
            n_ng: self.n_ng,
            n_rp: self.n_rp,
            ..params.clone()
        };
        let mut config = config.clone();
        config.geometry.width_m = self.width_m;
        (params, config)
    }

    /// Seed for the run with `n` vehicles, derived from the base seed.
    pub fn seed_for(&self, base_seed: u64, n: usize) -> u64 {
        base_seed ^ fnv1a(self.name.as_bytes(), n as u64)
    }
}

fn fnv1a(bytes: &[u8], n: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .chain(n.to_le_bytes().iter())
        .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// Outcome of a single FD point.
#[derive(Clone, Debug, PartialEq)]
pub struct FdRun {
    pub n: usize,
    pub seed: u64,
    pub result: Result<RunSummary, SimError>,
}

/// Simulate one point of a scenario, streaming states to `observer`.
pub fn run_point<F>(
    scenario: &ScenarioSpec,
    n: usize,
    config: &SimConfig,
    params: &StrategyParams,
    placement: &PlacementSpec,
    observer: F,
) -> FdRun
where
    F: FnMut(&WorldState, &StepRecord),
{
    let point = PointSetup::new(scenario, n, config, params, placement);
    let seed = point.seed;
    let result = point
        .world0
        .map_err(SimError::from)
        .and_then(|world| run(world, &point.params, &point.config, observer));
    FdRun { n, seed, result }
}

/// Everything needed to simulate one FD point: the scenario-adjusted
/// parameters, the derived seed and the initial placement.
#[derive(Clone, Debug)]
pub struct PointSetup {
    pub params: StrategyParams,
    pub config: SimConfig,
    pub seed: u64,
    pub world0: Result<WorldState, ConfigError>,
}

impl PointSetup {
    pub fn new(
        scenario: &ScenarioSpec,
        n: usize,
        config: &SimConfig,
        params: &StrategyParams,
        placement: &PlacementSpec,
    ) -> Self {
        let (params, config) = scenario.apply(params, config);
        let seed = scenario.seed_for(config.seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let world0 = initial_placement(n, &config.geometry, placement, &mut rng);
        PointSetup {
            params,
            config,
            seed,
            world0,
        }
    }
}

/// One run per vehicle count, in ascending order of `scenario.n_values`.
pub fn run_fd_series(
    scenario: &ScenarioSpec,
    config: &SimConfig,
    params: &StrategyParams,
    placement: &PlacementSpec,
) -> Vec<FdRun> {
    let mut ns = scenario.n_values.clone();
    ns.sort_unstable();
    ns.dedup();
    ns.par_iter()
        .map(|&n| run_point(scenario, n, config, params, placement, |_, _| {}))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::collision_audit;

    #[test]
    fn zone_centers() {
        let p = PlacementSpec::default();
        assert_eq!(p.zone_centers(10.2), vec![1.7, 5.1, 8.5]);
        assert_eq!(p.zone_count(11.9), 3);
        let lit = PlacementSpec { layout: ZoneLayout::Compressed, ..Default::default() };
        assert_eq!(lit.zone_centers(10.2), vec![1.7, 3.4, 5.1]);
    }

    #[test]
    fn three_vehicles_one_per_zone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = initial_placement(3, &RoadGeometry::default(), &PlacementSpec::default(), &mut rng).unwrap();
        for (v, c) in w.vehicles.iter().zip([1.7, 5.1, 8.5]) {
            assert!((v.y - c).abs() <= 0.5);
            assert_eq!((v.v_x, v.v_y), (0.0, 0.0));
        }
    }

    #[test]
    fn remainder_goes_to_low_zones() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = initial_placement(5, &RoadGeometry::default(), &PlacementSpec::default(), &mut rng).unwrap();
        let near = |c: f64| w.vehicles.iter().filter(|v| (v.y - c).abs() <= 0.5).count();
        assert_eq!((near(1.7), near(5.1), near(8.5)), (2, 2, 1));
    }

    #[test]
    fn dense_placement_is_collision_free() {
        let g = RoadGeometry::default();
        for &n in &[50, 450] {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let w = initial_placement(n, &g, &PlacementSpec::default(), &mut rng).unwrap();
            assert_eq!(w.vehicles.len(), n);
            assert!(collision_audit(&w, &g).is_empty());
        }
    }

    #[test]
    fn compressed_layout_spaces_all_zones_together() {
        let g = RoadGeometry::default();
        let p = PlacementSpec { layout: ZoneLayout::Compressed, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = initial_placement(150, &g, &p, &mut rng).unwrap();
        assert!(collision_audit(&w, &g).is_empty());
    }

    #[test]
    fn infeasible_density_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = initial_placement(900, &RoadGeometry::default(), &PlacementSpec::default(), &mut rng);
        assert!(matches!(err, Err(ConfigError::Infeasible(_))));
    }

    #[test]
    fn standard_scenarios() {
        let s = ScenarioSpec::standard();
        assert_eq!(s[0].gamma_x, 0.0);
        assert_eq!((s[0].n_ng, s[0].n_rp), (0, 6));
        assert_eq!((s[1].gamma_x, s[1].gamma_y, s[1].n_ng), (0.9, 1.0, 3));
        assert_eq!((s[2].gamma_x, s[2].gamma_y), (0.45, 0.5));
        assert_eq!(s[3].width_m, 11.9);
        assert_eq!(s[0].n_values, vec![50, 100, 150, 200, 250, 300, 350, 400, 450]);
        assert_eq!(*s[3].n_values.last().unwrap(), 550);
    }

    #[test]
    fn seeds_differ_by_scenario_and_n() {
        let a = ScenarioSpec::no_nudging();
        let b = ScenarioSpec::nominal_nudging();
        assert_ne!(a.seed_for(1, 50), a.seed_for(1, 100));
        assert_ne!(a.seed_for(1, 50), b.seed_for(1, 50));
        assert_eq!(a.seed_for(1, 50), a.seed_for(1, 50));
    }
}
