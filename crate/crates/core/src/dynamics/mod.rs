//! Continuous- and discrete-time gradient dynamics, fixed points, and
//! boundedness evidence.

mod boundedness;
mod fixed_point;
mod integrate;

pub use boundedness::{boundedness_probe, BoundednessVerdict};
pub use fixed_point::{
    classify_fixed_point, classify_with_bound, find_fixed_points, Classification, Definiteness, FixedPointReport,
    FixedPointSearch, NewtonFailure, DEFAULT_EIG_TOL, DEFAULT_RESIDUAL_BOUND,
};
pub use integrate::{
    integrate_continuous, integrate_discrete, ContinuousConfig, DiscreteConfig, IntegratorKind, IntegratorMeta, Method,
    Trajectory, DIVERGENCE_RADIUS,
};
