//! Offline replay of recorded trajectories through the safety checks.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use lanefree_core::engine::INVARIANT_TOL;
use lanefree_core::{collision_audit, RoadGeometry, StrategyParams, VehicleDims, VehicleState, WorldState};

use crate::error::CliError;
use crate::output::{TRAJECTORY_HEADER, VEHICLES_HEADER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    Collision,
    RightBoundary,
    LeftBoundary,
    NegativeSpeed,
    Overspeed,
    LateralSpeed,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Collision => "collision",
            ViolationKind::RightBoundary => "right-boundary",
            ViolationKind::LeftBoundary => "left-boundary",
            ViolationKind::NegativeSpeed => "negative-speed",
            ViolationKind::Overspeed => "overspeed",
            ViolationKind::LateralSpeed => "lateral-speed",
        })
    }
}

/// One failed check. `value` is the overlap area (m²) for collisions, the
/// signed clearance (m) for boundary exits and the offending speed (m/s)
/// otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub step: u64,
    pub kind: ViolationKind,
    pub ids: Vec<u32>,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditReport {
    pub states: usize,
    pub rows: usize,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<8} {:<16} {:<14} {}\n", "step", "kind", "vehicles", "value");
        for v in &self.violations {
            let ids: Vec<String> = v.ids.iter().map(u32::to_string).collect();
            out.push_str(&format!("{:<8} {:<16} {:<14} {}\n", v.step, v.kind, ids.join(","), v.value));
        }
        out
    }
}

fn overlap_area(a: &VehicleState, b: &VehicleState, geometry: &RoadGeometry) -> f64 {
    let ahead = geometry.forward_gap(a.x, b.x);
    let dx = ahead.min(geometry.length_m - ahead);
    let ox = a.half_length() + b.half_length() - dx;
    let oy = a.half_width() + b.half_width() - (a.y - b.y).abs();
    ox.max(0.0) * oy.max(0.0)
}

/// Check one recorded state.
pub fn audit_state(world: &WorldState, params: &StrategyParams, geometry: &RoadGeometry) -> Vec<Violation> {
    let step = world.step_index;
    let mut found = Vec::new();
    let mut push = |kind, ids: Vec<u32>, value| found.push(Violation { step, kind, ids, value });
    for v in &world.vehicles {
        let right = v.right_clearance();
        if right < -INVARIANT_TOL {
            push(ViolationKind::RightBoundary, vec![v.id], right);
        }
        let left = v.left_clearance(geometry);
        if left < -INVARIANT_TOL {
            push(ViolationKind::LeftBoundary, vec![v.id], left);
        }
        if v.v_x < -INVARIANT_TOL {
            push(ViolationKind::NegativeSpeed, vec![v.id], v.v_x);
        }
        if v.v_x > (1.0 + params.alpha) * v.v_d + INVARIANT_TOL {
            push(ViolationKind::Overspeed, vec![v.id], v.v_x);
        }
        if v.v_y.abs() > params.beta * v.v_x.max(0.0) + INVARIANT_TOL {
            push(ViolationKind::LateralSpeed, vec![v.id], v.v_y);
        }
    }
    let by_id: BTreeMap<u32, &VehicleState> = world.vehicles.iter().map(|v| (v.id, v)).collect();
    for (a, b) in collision_audit(world, geometry) {
        push(ViolationKind::Collision, vec![a, b], overlap_area(by_id[&a], by_id[&b], geometry));
    }
    found
}

/// Constant per-vehicle data keyed by id.
pub type VehicleTable = BTreeMap<u32, (VehicleDims, f64)>;

fn schema(path: &Path, detail: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

fn open(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let found = reader.headers().map_err(|e| schema(path, e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(schema(
            path,
            format!("expected header {:?}, found {:?}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(reader)
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, record: &csv::StringRecord, i: usize, name: &str) -> Result<T, CliError> {
    record
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| schema(path, format!("line {line}: bad {name} {:?}", record.get(i).unwrap_or(""))))
}

pub fn read_vehicles(path: &Path) -> Result<VehicleTable, CliError> {
    let mut reader = open(path, &VEHICLES_HEADER)?;
    let mut table = VehicleTable::new();
    for (k, record) in reader.records().enumerate() {
        let line = k as u64 + 2;
        let record = record.map_err(|e| schema(path, e.to_string()))?;
        let id: u32 = field(path, line, &record, 0, "id")?;
        let class_id: u8 = field(path, line, &record, 1, "class")?;
        let length_m: f64 = field(path, line, &record, 2, "length_m")?;
        let width_m: f64 = field(path, line, &record, 3, "width_m")?;
        let v_d: f64 = field(path, line, &record, 4, "v_d_mps")?;
        if !(length_m > 0.0 && width_m > 0.0 && v_d.is_finite()) {
            return Err(schema(path, format!("line {line}: non-physical vehicle {id}")));
        }
        let dims = VehicleDims { class_id, length_m, width_m };
        if table.insert(id, (dims, v_d)).is_some() {
            return Err(schema(path, format!("line {line}: duplicate id {id}")));
        }
    }
    Ok(table)
}

/// Parse a trajectory file into one world per recorded step.
pub fn read_trajectories(path: &Path, vehicles: &VehicleTable) -> Result<Vec<WorldState>, CliError> {
    let mut reader = open(path, &TRAJECTORY_HEADER)?;
    let mut states: Vec<WorldState> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k as u64 + 2;
        let record = record.map_err(|e| schema(path, e.to_string()))?;
        let step: u64 = field(path, line, &record, 0, "step")?;
        let t: f64 = field(path, line, &record, 1, "t_s")?;
        let id: u32 = field(path, line, &record, 2, "id")?;
        let mut nums = [0.0; 6];
        for (j, name) in TRAJECTORY_HEADER[3..].iter().enumerate() {
            nums[j] = field(path, line, &record, 3 + j, name)?;
        }
        let [x, y, v_x, v_y, _, _] = nums;
        let (dims, v_d) = *vehicles
            .get(&id)
            .ok_or_else(|| schema(path, format!("line {line}: id {id} not in the vehicle table")))?;
        match states.last_mut() {
            Some(w) if w.step_index == step => {
                if w.vehicles.iter().any(|v| v.id == id) {
                    return Err(schema(path, format!("line {line}: id {id} repeated in step {step}")));
                }
            }
            Some(w) if w.step_index > step => {
                return Err(schema(path, format!("line {line}: step {step} after step {}", w.step_index)));
            }
            _ => states.push(WorldState {
                t,
                step_index: step,
                vehicles: Vec::new(),
            }),
        }
        let w = states.last_mut().expect("pushed above");
        w.vehicles.push(VehicleState { id, x, y, v_x, v_y, v_d, dims });
    }
    Ok(states)
}

/// Replay `states` through every check.
pub fn audit_states(states: &[WorldState], params: &StrategyParams, geometry: &RoadGeometry) -> AuditReport {
    let mut report = AuditReport {
        states: states.len(),
        ..Default::default()
    };
    for w in states {
        report.rows += w.vehicles.len();
        report.violations.extend(audit_state(w, params, geometry));
    }
    report
}
