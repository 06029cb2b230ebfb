//! Exogenous target-acceleration model and the per-attacker disturbance
//! observer.
//!
//! The unknown lateral acceleration is generated by `Ȧ_T = s·A_T` with a
//! known non-positive constant `s`. Each attacker runs its own observer
//! copy
//!
//! `ż = s·z + cos(φ)·V_λ − sin(φ)·V_r`,   `Â_T = z`,
//!
//! forced either by the optimal reference velocities (the default, matching
//! the stability analysis) or by the measured relative velocities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exogenous model of the target's lateral acceleration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExoModel {
    /// Decay constant s, 1/s. Non-positive: a growing target acceleration
    /// has no physical meaning here.
    pub s: f64,
    /// Initial acceleration A_T(0), km/s².
    pub a_t0: f64,
}

impl ExoModel {
    pub fn validate(&self) -> Result<()> {
        if self.s > 0.0 {
            return Err(Error::InvalidScenario(format!(
                "exogenous decay constant s = {} must be non-positive",
                self.s
            )));
        }
        Ok(())
    }
}

/// Closed form of the scalar linear model: `A_T(t) = A_T(0)·exp(s·t)`.
pub fn exo_step_truth(model: &ExoModel, t: f64) -> f64 {
    model.a_t0 * (model.s * t).exp()
}

/// Which velocities force the observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverForcing {
    /// Optimal reference values `V_r*`, `V_λ*` (default).
    Reference,
    /// Measured relative velocities.
    Measured,
}

/// Observer state of one attacker. The estimate is the virtual state itself:
/// `Â_T = z`.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ObserverState {
    pub z: f64,
}

impl ObserverState {
    pub fn a_t_hat(&self) -> f64 {
        self.z
    }
}

/// Observer derivative `ż = s·z + cos(φ)·V_λ − sin(φ)·V_r` with the chosen
/// forcing velocities.
pub fn observer_derivative(z: f64, s: f64, phi: f64, v_lambda: f64, v_r: f64) -> f64 {
    s * z + phi.cos() * v_lambda - phi.sin() * v_r
}
