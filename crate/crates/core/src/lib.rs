//! Smooth games and smooth markets.
//!
//! A game is a set of players, each controlling a block of parameters and
//! following the gradient of its own profit. The crate decomposes the game
//! Jacobian into symmetric and antisymmetric parts, checks whether the
//! symmetric part is block diagonal (a smooth market), tracks per-firm and
//! aggregate forecasts and sentiments, integrates the learning dynamics and
//! classifies their fixed points.

pub mod calculus;
pub mod catalog;
pub mod dynamics;
pub mod error;
pub mod forecasting;
pub mod game;
pub mod partition;
pub mod phase;

pub use calculus::{jacobian, jacobian_fd, verify_sm_structure, JacobianReport, StructureVerdict};
pub use catalog::{builtin_game, random_polymatrix_sm, CATALOG, DEFAULT_EPSILON};
pub use error::{Error, Result};
pub use forecasting::{forecast_ledger, ForecastLedger};
pub use game::{Coupling, GameDefinition, MarketBuilder, PairTerm, SelfTerm, StructureTag};
pub use partition::{LearningRates, ParameterPartition};
pub use phase::{phase_grid, GridSpec, PhaseNode};
