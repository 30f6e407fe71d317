//! Optimal liquidation under stochastic price recovery.
//!
//! A large sell order moves the best bid down by `Γ(ζ) = θ₁ ζ^θ₂`; the
//! depressed price recovers in `δΞ` steps at a rate that grows with the
//! current impact. The trader may sell at market, quote a small limit
//! order that fills at a fixed rate, or wait. This crate
//!
//! * solves the discretized quasi-variational inequality for the reduced
//!   value `φ_t(x, ξ)` and the optimal action on every grid cell
//!   ([`solver`], [`policy`]),
//! * simulates the inventory/impact/price/cash dynamics under a solved
//!   policy ([`simulate`]),
//! * summarises liquidation rates and risk/return frontiers ([`analysis`]),
//! * persists solved policies ([`artifact`]).

pub mod analysis;
pub mod artifact;
pub mod config;
pub mod error;
pub mod grid;
pub mod params;
pub mod policy;
pub mod simulate;
pub mod solver;

pub use error::{AnalysisError, ArtifactError, ParamError, SimError, SolveError};
pub use grid::Discretization;
pub use params::{reconstruct_value, ActionSets, ModelParams, RecoveryKind};
pub use policy::{Action, PolicyGrid};
pub use solver::{solve, Solution, Solver, SolverOptions, Sweep, ValueSurface};
