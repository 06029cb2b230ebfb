//! Planar engagement geometry and relative-motion kinematics.
//!
//! The relative motion of each attacker with respect to the target is
//! described in polar line-of-sight (LOS) coordinates: relative distance `R`,
//! LOS angle `λ` (angle of the attacker→target ray from the inertial +x axis,
//! counter-clockwise positive), closing velocity `V_r` along the LOS and
//! `V_λ` normal to it.
//!
//! Angle conventions:
//! * `λ` is normalized to [0, 2π) wherever trigonometry is evaluated; state
//!   traces keep it unwrapped for plotting.
//! * `λ̂` is the reversed LOS: `λ − π` if `λ ≥ π`, else `λ + π`.
//! * The attacker bearing is `ξ = γ − λ`; the target bearing is `φ = γ_T − λ̂`.
//! * The target heading `γ_T` is measured against the reversed LOS: the
//!   target's velocity vector points along `γ_T + π`. This is the one reading
//!   under which `Ṙ = V_T cos φ − V cos ξ` equals the Cartesian range rate
//!   (and it reproduces the reference initial conditions exactly).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TAU: f64 = std::f64::consts::TAU;

/// Wrap an angle to [0, 2π).
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can return TAU when a is a tiny negative number.
    if w >= TAU {
        w - TAU
    } else {
        w
    }
}

/// Reversed LOS angle: `λ − π` for `λ ≥ π`, `λ + π` for `λ < π`,
/// evaluated on the wrapped angle.
pub fn reversed_los(lambda: f64) -> f64 {
    let l = wrap_angle(lambda);
    if l >= std::f64::consts::PI {
        l - std::f64::consts::PI
    } else {
        l + std::f64::consts::PI
    }
}

/// Target state in the inertial frame.
///
/// `heading` is the engagement heading `γ_T`; the velocity vector is
/// `−V_T·(cos γ_T, sin γ_T)`, i.e. the target flies along `γ_T + π`.
/// The heading evolves only through the lateral acceleration:
/// `γ̇_T = A_T / V_T`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TargetState {
    /// Position, km.
    pub position: [f64; 2],
    /// Heading γ_T, rad (see type-level convention note).
    pub heading: f64,
    /// Speed V_T, km/s. Constant and strictly positive.
    pub speed: f64,
    /// Lateral acceleration A_T, km/s² (perpendicular to the velocity).
    pub lateral_accel: f64,
}

impl TargetState {
    /// Velocity vector, km/s.
    pub fn velocity(&self) -> [f64; 2] {
        [-self.speed * self.heading.cos(), -self.speed * self.heading.sin()]
    }
}

/// Attacker state in the inertial frame. The velocity vector is
/// `V·(cos γ, sin γ)` and `γ̇ = A_M / V`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AttackerState {
    /// 1-based attacker index.
    pub id: usize,
    /// Position, km.
    pub position: [f64; 2],
    /// Heading γ, rad.
    pub heading: f64,
    /// Speed V, km/s. Constant, positive, and smaller than the target's.
    pub speed: f64,
    /// Lateral acceleration magnitude A_M, km/s².
    pub lateral_accel: f64,
}

impl AttackerState {
    pub fn velocity(&self) -> [f64; 2] {
        [self.speed * self.heading.cos(), self.speed * self.heading.sin()]
    }
}

/// Polar relative state of one attacker with respect to the target.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RelativeState {
    /// Relative distance R, km. Strictly positive away from the hit event.
    pub r: f64,
    /// LOS angle λ, rad.
    pub lambda: f64,
    /// Reversed LOS angle λ̂, rad.
    pub lambda_hat: f64,
    /// Closing-velocity component along the LOS, km/s.
    pub v_r: f64,
    /// Velocity component normal to the LOS, km/s.
    pub v_lambda: f64,
    /// Attacker bearing ξ = γ − λ, rad.
    pub xi: f64,
    /// Target bearing φ = γ_T − λ̂, rad.
    pub phi: f64,
}

/// Acceleration components resolved along and normal to the LOS.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct AccelComponents {
    /// Attacker acceleration along the LOS, km/s².
    pub a_mr: f64,
    /// Attacker acceleration normal to the LOS, km/s².
    pub a_mlambda: f64,
    /// Target acceleration along the LOS, km/s².
    pub a_tr: f64,
    /// Target acceleration normal to the LOS, km/s².
    pub a_tlambda: f64,
}

impl AccelComponents {
    /// Resolve a scalar target lateral acceleration onto the LOS frame:
    /// `A_Tr = −A_T sin φ`, `A_Tλ = A_T cos φ`.
    pub fn from_target_lateral(a_t: f64, phi: f64) -> Self {
        Self {
            a_mr: 0.0,
            a_mlambda: 0.0,
            a_tr: -a_t * phi.sin(),
            a_tlambda: a_t * phi.cos(),
        }
    }

    /// Resolve a scalar attacker lateral command onto the LOS frame:
    /// `A_Mr = A_M sin ξ`, `A_Mλ = −A_M cos ξ`.
    pub fn with_attacker_scalar(mut self, a_m: f64, xi: f64) -> Self {
        self.a_mr = a_m * xi.sin();
        self.a_mlambda = -a_m * xi.cos();
        self
    }
}

/// Derivatives of the polar relative state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeDerivatives {
    pub dr: f64,
    pub dlambda: f64,
    pub dv_r: f64,
    pub dv_lambda: f64,
}

/// Minimum separation treated as non-coincident, km (1 mm).
const COINCIDENCE_EPS: f64 = 1e-9;

/// Build the polar relative state of `attacker` with respect to `target`.
///
/// Errors with [`Error::SingularGeometry`] when the two positions coincide.
pub fn relative_from_absolute(attacker: &AttackerState, target: &TargetState) -> Result<RelativeState> {
    let dx = target.position[0] - attacker.position[0];
    let dy = target.position[1] - attacker.position[1];
    let r = (dx * dx + dy * dy).sqrt();
    if r < COINCIDENCE_EPS {
        return Err(Error::SingularGeometry(format!(
            "attacker {} coincident with target (separation {r:.3e} km)",
            attacker.id
        )));
    }
    let lambda = wrap_angle(dy.atan2(dx));
    let lambda_hat = reversed_los(lambda);
    let xi = attacker.heading - lambda;
    let phi = target.heading - lambda_hat;
    let v_r = target.speed * phi.cos() - attacker.speed * xi.cos();
    let v_lambda = target.speed * phi.sin() - attacker.speed * xi.sin();
    Ok(RelativeState {
        r,
        lambda,
        lambda_hat,
        v_r,
        v_lambda,
        xi,
        phi,
    })
}

/// Relative-motion derivatives:
/// `Ṙ = V_r`, `λ̇ = V_λ/R`,
/// `V̇_r = V_λ²/R − A_Mr + A_Tr`,
/// `V̇_λ = −V_λ V_r/R − A_Mλ + A_Tλ`.
pub fn relative_derivatives(rel: &RelativeState, acc: &AccelComponents) -> Result<RelativeDerivatives> {
    if rel.r <= 0.0 {
        return Err(Error::SingularGeometry(format!(
            "relative distance R = {} must be positive",
            rel.r
        )));
    }
    Ok(RelativeDerivatives {
        dr: rel.v_r,
        dlambda: rel.v_lambda / rel.r,
        dv_r: rel.v_lambda * rel.v_lambda / rel.r - acc.a_mr + acc.a_tr,
        dv_lambda: -rel.v_lambda * rel.v_r / rel.r - acc.a_mlambda + acc.a_tlambda,
    })
}

/// Least-squares scalar lateral command reproducing the commanded LOS-frame
/// components, plus the residual norm.
///
/// The guidance laws command `A_Mr` and `A_Mλ` independently, while the
/// vehicle has a single lateral channel with `A_Mr = A_M sin ξ`,
/// `A_Mλ = −A_M cos ξ`. The minimizer of
/// `‖(A_M sin ξ − A_Mr, −A_M cos ξ − A_Mλ)‖` is
/// `A_M = A_Mr sin ξ − A_Mλ cos ξ`. Diagnostics only; never fed back into
/// the relative dynamics.
pub fn scalar_command_from_components(acc: &AccelComponents, rel: &RelativeState) -> (f64, f64) {
    let (s, c) = rel.xi.sin_cos();
    let a_m = acc.a_mr * s - acc.a_mlambda * c;
    let er = a_m * s - acc.a_mr;
    let el = -a_m * c - acc.a_mlambda;
    (a_m, (er * er + el * el).sqrt())
}

/// Attacker bearing recovered from the relative velocities:
/// `V cos ξ = V_T cos φ − V_r`, `V sin ξ = V_T sin φ − V_λ`.
///
/// Used when the relative states are integrated directly and no absolute
/// attacker heading is available.
pub fn bearing_from_velocities(v_r: f64, v_lambda: f64, phi: f64, target_speed: f64) -> f64 {
    (target_speed * phi.sin() - v_lambda).atan2(target_speed * phi.cos() - v_r)
}

/// Inverse of the position part of [`relative_from_absolute`]:
/// `position = target.position − R·(cos λ, sin λ)`.
pub fn attacker_position_from_relative(r: f64, lambda: f64, target_position: [f64; 2]) -> [f64; 2] {
    [
        target_position[0] - r * lambda.cos(),
        target_position[1] - r * lambda.sin(),
    ]
}
