//! The `fd`, `run` and `audit` commands.

use std::path::{Path, PathBuf};

use lanefree_core::{run, run_fd_series, FdRun, PointSetup, ScenarioSpec, SimError};

use crate::audit::{audit_states, read_trajectories, read_vehicles, AuditReport};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::{timestamp, PointRecord, RunManifest, ScenarioRecord};
use crate::output::{fd_csv, fd_file_name, write_text, write_vehicles, TrajectoryWriter, TRAJECTORIES_FILE, VEHICLES_FILE};
use crate::svg::fd_overlay;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SVG_FILE: &str = "fd.svg";

#[derive(Clone, Debug, Default)]
pub struct FdArgs {
    pub config: Option<PathBuf>,
    pub scenarios: Vec<String>,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunArgs {
    pub config: Option<PathBuf>,
    pub scenario: Option<String>,
    pub n: usize,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct AuditArgs {
    pub trajectories: PathBuf,
    pub vehicles: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub scenario: Option<String>,
}

/// What a successful command reports on stdout.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: String,
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn one_scenario(config: &ExperimentConfig, name: Option<&str>) -> Result<ScenarioSpec, CliError> {
    let names: Vec<String> = name.map(str::to_string).into_iter().collect();
    let mut chosen = config.select(&names)?;
    Ok(chosen.swap_remove(0))
}

/// Exit status implied by a set of point outcomes: invariant faults and
/// collisions outrank configuration failures.
fn verdict(runs: &[FdRun]) -> Result<(), CliError> {
    let mut config_failure = None;
    let mut invariant = None;
    for r in runs {
        match &r.result {
            Ok(s) if !s.is_clean() && invariant.is_none() => {
                invariant = Some(format!("n = {}: {} colliding pairs over {} steps", r.n, s.collision_pairs, s.collision_steps));
            }
            Err(SimError::Config(e)) if config_failure.is_none() => config_failure = Some(format!("n = {}: {e}", r.n)),
            Err(e) if !matches!(e, SimError::Config(_)) && invariant.is_none() => invariant = Some(format!("n = {}: {e}", r.n)),
            _ => {}
        }
    }
    match (invariant, config_failure) {
        (Some(msg), _) => Err(CliError::Invariant(msg)),
        (None, Some(msg)) => Err(CliError::Config(msg)),
        (None, None) => Ok(()),
    }
}

pub fn cmd_fd(args: &FdArgs) -> Result<Outcome, CliError> {
    let started = timestamp();
    let config = ExperimentConfig::load_or_default(args.config.as_deref())?.with_seed(args.seed);
    let scenarios = config.select(&args.scenarios)?;
    ensure_dir(&args.out)?;

    let mut records = Vec::new();
    let mut overlay = Vec::new();
    let mut all_runs = Vec::new();
    let mut outputs = Vec::new();
    let mut summary = String::new();
    for scenario in &scenarios {
        let runs = run_fd_series(scenario, &config.sim, &config.strategy, &config.placement);
        let points: Vec<_> = runs.iter().filter_map(|r| r.result.as_ref().ok().map(|s| s.fd)).collect();
        let file = fd_file_name(&scenario.name);
        write_text(&args.out.join(&file), &fd_csv(&points))?;
        outputs.push(file);
        let capacity = points.iter().map(|p| p.flow).fold(0.0, f64::max);
        summary.push_str(&format!(
            "{}: {} of {} points, capacity {capacity} veh/h\n",
            scenario.name,
            points.len(),
            runs.len()
        ));
        records.push(ScenarioRecord {
            name: scenario.name.clone(),
            points: runs.iter().map(PointRecord::from_run).collect(),
        });
        overlay.push((scenario.name.clone(), points));
        all_runs.extend(runs);
    }
    write_text(&args.out.join(SVG_FILE), &fd_overlay(&overlay))?;
    outputs.push(SVG_FILE.to_string());
    outputs.push(MANIFEST_FILE.to_string());

    let resolved = ExperimentConfig { scenarios, ..config };
    let mut manifest = RunManifest::new("fd", started, resolved, records);
    manifest.outputs = outputs;
    manifest.write(&args.out.join(MANIFEST_FILE))?;
    verdict(&all_runs)?;
    Ok(Outcome { summary })
}

pub fn cmd_run(args: &RunArgs) -> Result<Outcome, CliError> {
    let started = timestamp();
    let config = ExperimentConfig::load_or_default(args.config.as_deref())?.with_seed(args.seed);
    let scenario = one_scenario(&config, args.scenario.as_deref())?;
    if args.trajectories == Some(0) {
        return Err(CliError::Usage("--trajectories needs a sampling interval of at least 1 step".into()));
    }
    let setup = PointSetup::new(&scenario, args.n, &config.sim, &config.strategy, &config.placement);
    let world0 = setup.world0.clone()?;
    ensure_dir(&args.out)?;

    let mut outputs = Vec::new();
    let mut writer = match args.trajectories {
        Some(_) => {
            write_vehicles(&args.out.join(VEHICLES_FILE), &world0)?;
            outputs.push(VEHICLES_FILE.to_string());
            outputs.push(TRAJECTORIES_FILE.to_string());
            Some(TrajectoryWriter::create(&args.out.join(TRAJECTORIES_FILE))?)
        }
        None => None,
    };
    let every = args.trajectories.unwrap_or(1) as u64;
    let mut io_error = None;
    let mut current = world0.clone();
    let result = run(world0, &setup.params, &setup.config, |next, record| {
        if let Some(w) = writer.as_mut() {
            if record.step_index % every == 0 && io_error.is_none() {
                if let Err(e) = w.write_state(&current, &record.applied) {
                    io_error = Some(e);
                }
            }
            current = next.clone();
        }
    });
    if let Some(w) = writer {
        w.finish()?;
    }
    if let Some(e) = io_error {
        return Err(e);
    }

    let fd_run = FdRun {
        n: args.n,
        seed: setup.seed,
        result,
    };
    outputs.push(MANIFEST_FILE.to_string());
    let resolved = ExperimentConfig {
        scenarios: vec![scenario.clone()],
        ..config
    };
    let record = ScenarioRecord {
        name: scenario.name.clone(),
        points: vec![PointRecord::from_run(&fd_run)],
    };
    let mut manifest = RunManifest::new("run", started, resolved, vec![record]);
    manifest.outputs = outputs;
    manifest.write(&args.out.join(MANIFEST_FILE))?;
    verdict(std::slice::from_ref(&fd_run))?;

    let s = fd_run.result.expect("verdict passed");
    let fd = s.fd;
    Ok(Outcome {
        summary: format!(
            "{} n={} density={} veh/km flow={} veh/h mean_speed={} m/s stationary={} collisions={}\n",
            scenario.name, fd.n, fd.density, fd.flow, fd.mean_speed, fd.stationary, s.collision_pairs
        ),
    })
}

pub fn cmd_audit(args: &AuditArgs) -> Result<(AuditReport, Outcome), CliError> {
    let config = ExperimentConfig::load_or_default(args.config.as_deref())?;
    let scenario = one_scenario(&config, args.scenario.as_deref())?;
    let (params, sim) = scenario.apply(&config.strategy, &config.sim);
    let vehicles_path = match &args.vehicles {
        Some(p) => p.clone(),
        None => args
            .trajectories
            .parent()
            .map_or_else(|| PathBuf::from(VEHICLES_FILE), |d| d.join(VEHICLES_FILE)),
    };
    let vehicles = read_vehicles(&vehicles_path)?;
    let states = read_trajectories(&args.trajectories, &vehicles)?;
    let report = audit_states(&states, &params, &sim.geometry);
    let summary = format!(
        "{}{} states, {} rows, {} violations\n",
        report.table(),
        report.states,
        report.rows,
        report.violations.len()
    );
    if !report.is_clean() {
        return Err(CliError::Invariant(format!(
            "{} violations in {}\n{}",
            report.violations.len(),
            args.trajectories.display(),
            report.table()
        )));
    }
    Ok((report, Outcome { summary }))
}
