//! CSV artifacts. Floats are written with `Display`, which is the shortest
//! decimal that round-trips, so files are stable byte for byte.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use lanefree_core::engine::AppliedAccel;
use lanefree_core::{FdPoint, WorldState};

use crate::error::CliError;

pub const FD_HEADER: [&str; 5] = ["n", "density_veh_per_km", "flow_veh_per_h", "mean_speed_m_per_s", "stationary"];

pub const TRAJECTORY_HEADER: [&str; 9] = ["step", "t_s", "id", "x_m", "y_m", "vx_mps", "vy_mps", "fx_mps2", "fy_mps2"];

pub const VEHICLES_HEADER: [&str; 5] = ["id", "class", "length_m", "width_m", "v_d_mps"];

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const VEHICLES_FILE: &str = "vehicles.csv";

pub fn fd_file_name(scenario: &str) -> String {
    format!("fd_{scenario}.csv")
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn create(path: &Path) -> Result<csv::Writer<File>, CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Render one FD series as CSV text.
pub fn fd_csv(points: &[FdPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FD_HEADER).expect("in-memory write");
    for p in points {
        w.write_record([
            p.n.to_string(),
            p.density.to_string(),
            p.flow.to_string(),
            p.mean_speed.to_string(),
            p.stationary.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

/// Per-vehicle constants that the trajectory rows leave out.
pub fn write_vehicles(path: &Path, world: &WorldState) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_record(VEHICLES_HEADER).map_err(|e| csv_err(path, e))?;
    let mut vehicles = world.vehicles.clone();
    vehicles.sort_by_key(|v| v.id);
    for v in &vehicles {
        w.write_record([
            v.id.to_string(),
            v.dims.class_id.to_string(),
            v.dims.length_m.to_string(),
            v.dims.width_m.to_string(),
            v.v_d.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Streams sampled states, each paired with the acceleration applied from it.
pub struct TrajectoryWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
    pub rows: usize,
}

impl TrajectoryWriter {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        let mut inner = create(path)?;
        inner.write_record(TRAJECTORY_HEADER).map_err(|e| csv_err(path, e))?;
        Ok(TrajectoryWriter {
            path: path.to_path_buf(),
            inner,
            rows: 0,
        })
    }

    /// `applied` must follow the storage order of `world.vehicles`.
    pub fn write_state(&mut self, world: &WorldState, applied: &[AppliedAccel]) -> Result<(), CliError> {
        for (v, a) in world.vehicles.iter().zip(applied) {
            debug_assert_eq!(v.id, a.id);
            self.inner
                .write_record([
                    world.step_index.to_string(),
                    world.t.to_string(),
                    v.id.to_string(),
                    v.x.to_string(),
                    v.y.to_string(),
                    v.v_x.to_string(),
                    v.v_y.to_string(),
                    a.accel.x.to_string(),
                    a.accel.y.to_string(),
                ])
                .map_err(|e| csv_err(&self.path, e))?;
            self.rows += 1;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<usize, CliError> {
        self.inner.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.rows)
    }
}
