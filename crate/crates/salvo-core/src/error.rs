//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by geometry, guidance, simulation and I/O code.
#[derive(Debug, Error)]
pub enum Error {
    /// Attacker and target are coincident, or a relative distance is not positive.
    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    /// Boundary data violates the two-point boundary-value preconditions
    /// (non-positive log arguments, terminal not smaller than initial, ...).
    #[error("invalid boundary data: {0}")]
    BoundaryData(String),

    /// Final time is not strictly after the initial time.
    #[error("time order: tf = {tf} must be strictly greater than t0 = {t0}")]
    TimeOrder { t0: f64, tf: f64 },

    /// A query time lies outside the trajectory interval.
    #[error("time {t} outside [{t0}, {tf}]")]
    TimeRange { t: f64, t0: f64, tf: f64 },

    /// Relayed geometry is mutually inconsistent beyond numerical tolerance.
    #[error("geometry inconsistency: {0}")]
    GeometryInconsistency(String),

    /// A piecewise segment has no contracting consensus terminal.
    #[error("segment infeasible: {0}")]
    SegmentInfeasible(String),

    /// An operation was asked for data a trace of this law mode does not carry.
    #[error("law-mode mismatch: {0}")]
    ModeMismatch(String),

    /// Scenario configuration failed schema or invariant validation.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A trace is incomplete or its series are inconsistent.
    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, Error>;
