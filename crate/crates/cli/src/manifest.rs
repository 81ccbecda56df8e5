//! `manifest.json`: the resolved configuration plus what happened.

use std::path::Path;

use chrono::{SecondsFormat, Utc};
use lanefree_core::{FdPoint, FdRun};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::write_text;

pub fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    pub n: usize,
    pub seed: u64,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd: Option<FdPoint>,
    pub collision_pairs: usize,
    pub collision_steps: usize,
}

impl PointRecord {
    pub fn from_run(run: &FdRun) -> Self {
        match &run.result {
            Ok(s) => PointRecord {
                n: run.n,
                seed: run.seed,
                status: if s.is_clean() { "ok" } else { "collisions" },
                error: None,
                fd: Some(s.fd),
                collision_pairs: s.collision_pairs,
                collision_steps: s.collision_steps,
            },
            Err(e) => PointRecord {
                n: run.n,
                seed: run.seed,
                status: "error",
                error: Some(e.to_string()),
                fd: None,
                collision_pairs: 0,
                collision_steps: 0,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioRecord {
    pub name: String,
    pub points: Vec<PointRecord>,
}

/// Safety tally over every point of the invocation.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditSummary {
    pub points: usize,
    pub failed_points: usize,
    pub collision_pairs: usize,
    pub collision_steps: usize,
    pub non_stationary_points: usize,
    pub clean: bool,
}

impl AuditSummary {
    pub fn tally<'a>(records: impl IntoIterator<Item = &'a PointRecord>) -> Self {
        let mut s = AuditSummary::default();
        for r in records {
            s.points += 1;
            s.failed_points += usize::from(r.error.is_some());
            s.collision_pairs += r.collision_pairs;
            s.collision_steps += r.collision_steps;
            s.non_stationary_points += usize::from(r.fd.is_some_and(|fd| !fd.stationary));
        }
        s.clean = s.failed_points == 0 && s.collision_pairs == 0;
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub started_at: String,
    pub finished_at: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub scenarios: Vec<ScenarioRecord>,
    pub audit: AuditSummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, started_at: String, config: ExperimentConfig, scenarios: Vec<ScenarioRecord>) -> Self {
        let audit = AuditSummary::tally(scenarios.iter().flat_map(|s| s.points.iter()));
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            started_at,
            finished_at: timestamp(),
            seed: config.sim.seed,
            config,
            scenarios,
            audit,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
        text.push('\n');
        write_text(path, &text)
    }
}
