//! The experiment configuration file.

use std::path::Path;

use lanefree_core::{PlacementSpec, ScenarioSpec, SimConfig, StrategyParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A complete, self-describing experiment setup. Every section is optional
/// in the file and falls back to the built-in defaults; unknown keys are
/// rejected at every level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub strategy: StrategyParams,
    pub sim: SimConfig,
    pub placement: PlacementSpec,
    pub scenarios: Vec<ScenarioSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            strategy: StrategyParams::default(),
            sim: SimConfig::default(),
            placement: PlacementSpec::default(),
            scenarios: ScenarioSpec::standard(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Load `path` if given, otherwise use the defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.strategy.validate()?;
        self.sim.validate()?;
        let mut names: Vec<&str> = Vec::new();
        for s in &self.scenarios {
            if s.name.is_empty() || !s.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(CliError::Config(format!(
                    "scenario name {:?} must be non-empty and use only letters, digits, '-' or '_'",
                    s.name
                )));
            }
            if names.contains(&s.name.as_str()) {
                return Err(CliError::Config(format!("duplicate scenario name {:?}", s.name)));
            }
            names.push(&s.name);
            let (params, sim) = s.apply(&self.strategy, &self.sim);
            params.validate()?;
            sim.validate()?;
            self.placement.validate(s.width_m)?;
        }
        Ok(())
    }

    /// Resolve scenario names; an empty selection means every configured
    /// scenario.
    pub fn select(&self, names: &[String]) -> Result<Vec<ScenarioSpec>, CliError> {
        let chosen: Vec<ScenarioSpec> = if names.is_empty() {
            self.scenarios.clone()
        } else {
            names
                .iter()
                .map(|name| {
                    self.scenarios.iter().find(|s| &s.name == name).cloned().ok_or_else(|| {
                        let known: Vec<&str> = self.scenarios.iter().map(|s| s.name.as_str()).collect();
                        CliError::Usage(format!("unknown scenario {name:?}; configured: {}", known.join(", ")))
                    })
                })
                .collect::<Result<_, _>>()?
        };
        if chosen.is_empty() {
            return Err(CliError::Usage("no scenarios to run".into()));
        }
        Ok(chosen)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(seed) = seed {
            self.sim.seed = seed;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        assert!(ExperimentConfig::from_json(r#"{"stratgy": {}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"strategy": {"c_x": 3}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"sim": {"geometry": {"lenght_m": 5}}}"#).is_err());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = ExperimentConfig::from_json(r#"{"strategy": {"c_y_ca": 2.0}, "sim": {"horizon_steps": 100, "measure_window_steps": 20}}"#).unwrap();
        assert_eq!(c.strategy.c_y_ca, 2.0);
        assert_eq!(c.strategy.c_x_ca, StrategyParams::default().c_x_ca);
        assert_eq!(c.sim.horizon_steps, 100);
        assert_eq!(c.scenarios.len(), 4);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let e = ExperimentConfig::from_json(r#"{"strategy": {"c_x_ca": 0}}"#).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn selection() {
        let c = ExperimentConfig::default();
        assert_eq!(c.select(&[]).unwrap().len(), 4);
        let one = c.select(&["widened-road".to_string()]).unwrap();
        assert_eq!(one[0].width_m, 11.9);
        assert!(matches!(c.select(&["nope".to_string()]), Err(CliError::Usage(_))));
        let empty = ExperimentConfig { scenarios: vec![], ..Default::default() };
        assert!(matches!(empty.select(&[]), Err(CliError::Usage(_))));
    }
}
