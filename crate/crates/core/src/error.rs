use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid parameter `{name}`: {reason}")]
    Invalid { name: &'static str, reason: String },
    #[error("infeasible placement: {0}")]
    Infeasible(String),
}

impl ConfigError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            name,
            reason: reason.into(),
        }
    }
}

/// Which per-vehicle invariant a step violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantKind {
    RightBoundaryExit,
    LeftBoundaryExit,
    NegativeSpeed,
    Overspeed,
    LateralSpeedCap,
    NonFinite,
}

impl std::fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InvariantKind::RightBoundaryExit => "right boundary exit",
            InvariantKind::LeftBoundaryExit => "left boundary exit",
            InvariantKind::NegativeSpeed => "negative longitudinal speed",
            InvariantKind::Overspeed => "longitudinal overspeed",
            InvariantKind::LateralSpeedCap => "lateral speed cap exceeded",
            InvariantKind::NonFinite => "non-finite state",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Lateral speed toward a boundary already exceeds the escape-velocity bound.
    #[error("escape-velocity bound violated: distance {distance} m, speed {speed} m/s")]
    EscapeVelocity { distance: f64, speed: f64 },
    #[error("step {step}: vehicle {vehicle}: escape-velocity bound violated ({detail})")]
    BoundaryFault {
        step: u64,
        vehicle: u32,
        detail: String,
    },
    #[error("step {step}: vehicle {vehicle}: {kind} (value {value})")]
    Invariant {
        step: u64,
        vehicle: u32,
        kind: InvariantKind,
        value: f64,
    },
    #[error("coincident vehicle centers")]
    CoincidentCenters,
}
