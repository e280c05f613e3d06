//! (U, S) joint replenishment at the parking orbits.
//!
//! All parking orbits see statistically identical demand, so one chain is
//! solved and its results reused for every orbit.

pub mod chain;
pub mod metrics;
pub mod space;

pub use chain::{
    solver_registry, stationary_distribution, DenseSolver, MarkovModel, Outcome, PowerSolver,
    RegenerativeSolver, StationarySolver, RESIDUAL_TOL,
};
pub use metrics::{
    evaluate_constellation, expected_shortage_parking, fill_rate_parking, mean_stock_parking,
    order_frequency_parking, parking_demand_rate, solve_chain, summarize, ChainSummary,
    ParkingConstellationMetrics,
};
pub use space::{count_states, StateSpace, DEFAULT_STATE_CAP};
