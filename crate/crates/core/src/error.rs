use thiserror::Error;

/// Errors raised by model construction, evaluation, simulation and search.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parking altitude {parking_km} km must be strictly below plane altitude {plane_km} km")]
    ParkingNotBelowPlane { parking_km: f64, plane_km: f64 },

    #[error("relative RAAN drift is zero; parking and plane never re-align")]
    ZeroRelativeDrift,

    #[error("state space has {size} states, above the cap of {cap}")]
    StateSpaceTooLarge { size: usize, cap: usize },

    #[error("transition from state {from:?} targets {to:?}, which is not in the state space")]
    TargetOutsideStateSpace { from: Vec<u32>, to: Vec<u32> },

    #[error("stationary solve failed: {0}")]
    Stationary(String),

    #[error("no order is ever triggered by the chain; expected order quantity is undefined")]
    NoOrders,

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("instance generation starved after {draws} draws ({accepted} accepted): {diagnostics}")]
    GenerationStarved {
        draws: u64,
        accepted: usize,
        diagnostics: String,
    },

    #[error("simulation aborted: {0}")]
    Simulation(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
