//! Deterministic planar engagement simulator with cooperative optimal
//! guidance laws.
//!
//! Several slow attackers intercept one faster maneuvering target
//! simultaneously. Each attacker solves a two-point boundary-value problem
//! whose terminal values are consensus aggregates over a directed
//! communication graph; the resulting closed-form exponential references
//! feed acceleration commands in the line-of-sight frame. Three law variants
//! are provided (known target acceleration, disturbance-observer based, and
//! piecewise re-anchored), together with the numerical oracles that check
//! the optimality and stability claims along simulated trajectories.
//!
//! Modules:
//! * [`engagement`] — planar relative-motion kinematics.
//! * [`graph`] — communication topology, consensus terminals, target relay.
//! * [`guidance`] — gains, reference trajectories, guidance laws.
//! * [`observer`] — exogenous target model and disturbance observer.
//! * [`sim`] — fixed-step RK4 scenario propagation and event detection.
//! * [`verify`] — cost, Hamiltonian/costate and Lyapunov monitors.
//! * [`scenario`] — configuration schema, validation and presets.
//! * [`output`] / [`plot`] — series files, SVG figures, summaries.

pub mod engagement;
pub mod error;
pub mod graph;
pub mod guidance;
pub mod observer;
pub mod output;
pub mod plot;
pub mod scenario;
pub mod sim;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
