//! Target-speed forces, neighbor selection and the raw force composition.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::field::{pair_force_unchecked, PairForce};
use crate::road::{RoadGeometry, StrategyParams, Vec2, VehicleState};

/// Gauss error function, odd-symmetric by construction.
pub fn erf(z: f64) -> f64 {
    let v = libm::erf(z.abs());
    if z < 0.0 {
        -v
    } else {
        v
    }
}

/// Sigmoid pull toward the desired longitudinal speed and zero lateral speed.
pub fn target_speed_force(v_x: f64, v_y: f64, v_d: f64) -> Vec2 {
    Vec2::new(-erf(v_x - v_d), -erf(v_y))
}

/// A vehicle retained in one of the interaction sets, with the force it
/// contributes to the ego vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: u32,
    /// Center-to-center ring distance, strictly positive.
    pub gap_m: f64,
    pub v_x: f64,
    pub length_m: f64,
    /// Force on the ego vehicle: repulsion for the downstream set, nudging for
    /// the upstream set.
    pub force: Vec2,
    pub magnitude: f64,
}

/// Interaction sets of one ego vehicle, each ordered by ascending id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NeighborSets {
    pub rp_set: Vec<Neighbor>,
    pub ng_set: Vec<Neighbor>,
}

/// Incremental builder for [`NeighborSets`]. Candidates may arrive in any order.
#[derive(Debug, Default)]
pub struct NeighborCollector {
    downstream: Vec<Neighbor>,
    upstream: Vec<Neighbor>,
}

impl NeighborCollector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.downstream.clear();
        self.upstream.clear();
    }

    /// `other` lies `gap` metres ahead of `ego`; `ego` is the upstream vehicle.
    pub fn push_downstream(
        &mut self,
        ego: &VehicleState,
        other: &VehicleState,
        gap: f64,
        params: &StrategyParams,
    ) {
        let pf = pair_force_unchecked(ego, other, params, -gap);
        if pf.magnitude > 0.0 {
            self.downstream.push(neighbor(other, gap, pf.repulsion_on_upstream, pf));
        }
    }

    /// `other` lies `gap` metres behind `ego`; `ego` is the downstream vehicle.
    pub fn push_upstream(
        &mut self,
        ego: &VehicleState,
        other: &VehicleState,
        gap: f64,
        params: &StrategyParams,
    ) {
        let pf = pair_force_unchecked(other, ego, params, -gap);
        if pf.magnitude > 0.0 {
            self.upstream.push(neighbor(other, gap, pf.nudging_on_downstream, pf));
        }
    }

    pub fn finish(&mut self, params: &StrategyParams) -> NeighborSets {
        NeighborSets {
            rp_set: strongest(&mut self.downstream, params.n_rp),
            ng_set: strongest(&mut self.upstream, params.n_ng),
        }
    }
}

fn neighbor(other: &VehicleState, gap: f64, force: Vec2, pf: PairForce) -> Neighbor {
    Neighbor {
        id: other.id,
        gap_m: gap,
        v_x: other.v_x,
        length_m: other.dims.length_m,
        force,
        magnitude: pf.magnitude,
    }
}

/// Strongest first, then nearer, then lower id.
fn rank(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.magnitude
        .total_cmp(&a.magnitude)
        .then(a.gap_m.total_cmp(&b.gap_m))
        .then(a.id.cmp(&b.id))
}

fn strongest(cands: &mut Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
    if k == 0 {
        return Vec::new();
    }
    if cands.len() > k {
        cands.select_nth_unstable_by(k - 1, rank);
        cands.truncate(k);
    }
    let mut out = std::mem::take(cands);
    out.sort_unstable_by_key(|n| n.id);
    out
}

/// Brute-force set selection over every other vehicle on the road.
pub fn select_neighbor_sets(
    ego: &VehicleState,
    others: &[VehicleState],
    params: &StrategyParams,
    geometry: &RoadGeometry,
) -> NeighborSets {
    let mut collector = NeighborCollector::new();
    for other in others.iter().filter(|o| o.id != ego.id) {
        let ahead = geometry.forward_gap(ego.x, other.x);
        if ahead > 0.0 && ahead <= params.horizon_m {
            collector.push_downstream(ego, other, ahead, params);
        }
        let behind = geometry.forward_gap(other.x, ego.x);
        if behind > 0.0 && behind <= params.horizon_m {
            collector.push_upstream(ego, other, behind, params);
        }
    }
    collector.finish(params)
}

/// Per-component decomposition of the pre-bound acceleration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceBreakdown {
    pub ts: Vec2,
    pub rp: Vec2,
    pub ng: Vec2,
    pub raw: Vec2,
}

pub fn compose_raw(ego: &VehicleState, sets: &NeighborSets, params: &StrategyParams) -> ForceBreakdown {
    let ts = target_speed_force(ego.v_x, ego.v_y, ego.v_d);
    // Sets are id-ordered, so the sums are reproducible bit for bit.
    let rp = sets.rp_set.iter().fold(Vec2::ZERO, |acc, n| acc + n.force);
    let ng = sets.ng_set.iter().fold(Vec2::ZERO, |acc, n| acc + n.force);
    let raw = combine(ts, rp, ng, params);
    ForceBreakdown { ts, rp, ng, raw }
}

/// `ts + c ⊙ (rp + γ ⊙ ng)`, componentwise.
pub fn combine(ts: Vec2, rp: Vec2, ng: Vec2, params: &StrategyParams) -> Vec2 {
    Vec2::new(
        ts.x + params.c_x_ca * (rp.x + params.gamma_x * ng.x),
        ts.y + params.c_y_ca * (rp.y + params.gamma_y * ng.y),
    )
}
