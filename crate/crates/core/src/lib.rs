//! Continuous-time LMSR option markets with exogenous information.
//!
//! The library covers the full pipeline: exact LMSR pricing over M >= 2
//! assets, agent populations with squashed characteristic-function
//! valuations, the discontinuous price dynamics they induce (a Filippov
//! system integrated by stepping quantities forward), rest-point
//! classification, spectral lag measurement, and seeded experiment runners
//! with plot-ready CSV output.

pub mod agents;
pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod export;
pub mod lmsr;
pub mod signals;
pub mod validation;

pub use agents::{
    binary_drift, drift_counts, eval_psi, purchase_decision, purchase_decision_value, AgentSpec,
    CharacteristicFn, DriftEvaluator, SigmoidFn,
};
pub use analysis::{
    dft_phase, mean_ci, monotone_violation, phase_ratio, PhaseResult, SweepSummary,
};
pub use dynamics::{
    classify_rest_point, integrate, rhs_binary, rhs_multi, IntegratorConfig, RestPointKind,
    RestPointReport, Trajectory,
};
pub use error::{Error, Result};
pub use experiments::{
    run_constant_info_suite, run_interval_tracking, run_lag_sweep, run_lorenz_demo,
    run_multi_asset_mc, run_simulate, ExperimentConfig, ExperimentKind,
};
pub use lmsr::{
    cost_potential, spot_prices, trade_cost, unit_cost_approx, MarketState, PriceSimplex,
};
pub use signals::{integrate_lorenz, lorenz_rhs, LorenzForm, LorenzParams, LorenzTrace, Signal};
