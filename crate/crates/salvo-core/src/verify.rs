//! Independent numerical oracles for the optimality and stability claims:
//! the quadratic cost functional, the Hamiltonian and costate residuals, the
//! second-order condition, and the Lyapunov monitor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::{reference_at_unchecked, GuidanceGains};
use crate::trace::SimTrace;

/// Optimality diagnostics of one trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalityReport {
    /// Cost functional value (trapezoidal quadrature over the trace grid).
    pub j: f64,
    /// Hamiltonian along the trajectory.
    pub h_series: Vec<f64>,
    /// Hamiltonian at the final time (transversality diagnostic; reported,
    /// not enforced).
    pub h_terminal: f64,
    /// max_t |P1²·Ṙ + ρ_R| over attackers and samples.
    pub max_stationarity_residual_r: f64,
    /// max_t |P2²·V̇_λ + ρ_Vλ|.
    pub max_stationarity_residual_vlambda: f64,
    /// max_t |ρ̇_R + K1²·R| with a central-difference ρ̇.
    pub max_costate_ode_residual_r: f64,
    /// max_t |ρ̇_Vλ + K2²·V_λ|.
    pub max_costate_ode_residual_vlambda: f64,
    /// Second-order condition: every P1², P2² strictly positive.
    pub convexity_ok: bool,
}

/// Lyapunov diagnostics of one observed/piecewise trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub v_series: Vec<f64>,
    /// Central-difference dV/dt.
    pub dv_series: Vec<f64>,
    /// True when `V(t_{n+1}) <= V(t_n) + tol` at every step within a
    /// segment. Steps that cross a piecewise re-anchor are excluded: the
    /// references jump there by construction.
    pub monotone: bool,
    /// Largest within-segment step increase `V(t_{n+1}) − V(t_n)` (negative
    /// when strictly decreasing everywhere).
    pub max_step_increase: f64,
    /// Number of samples where `dV` exceeds the decay bound by more than the
    /// tolerance.
    pub bound_violations: usize,
    /// Largest positive excursion of `dV − bound`.
    pub max_bound_excursion: f64,
}

/// Per-sample integrand of the cost functional:
/// `½ Σ_i (P1² Ṙ² + P2² V̇_λ² + K1² R² + K2² V_λ²)`.
fn cost_integrand(trace: &SimTrace, gains: &GuidanceGains, k: usize) -> f64 {
    let mut acc = 0.0;
    for (i, a) in trace.attackers.iter().enumerate() {
        let p1 = gains.p1[i];
        let p2 = gains.p2[i];
        let k1 = gains.k1[i];
        let k2 = gains.k2[i];
        let dr = a.v_r[k];
        let dvl = a.dv_lambda[k];
        acc += 0.5
            * (p1 * p1 * dr * dr
                + p2 * p2 * dvl * dvl
                + k1 * k1 * a.r[k] * a.r[k]
                + k2 * k2 * a.v_lambda[k] * a.v_lambda[k]);
    }
    acc
}

/// Composite trapezoidal quadrature of the cost functional over the trace
/// grid, with `Ṙ = V_r` and `V̇_λ` taken from the recorded relative dynamics.
pub fn evaluate_cost(trace: &SimTrace, gains: &GuidanceGains) -> Result<f64> {
    trace.require_complete()?;
    if trace.len() < 2 {
        return Err(Error::InvalidTrace("cost quadrature needs at least two samples".into()));
    }
    let mut j = 0.0;
    let mut prev = cost_integrand(trace, gains, 0);
    for k in 1..trace.len() {
        let cur = cost_integrand(trace, gains, k);
        j += 0.5 * (prev + cur) * (trace.t[k] - trace.t[k - 1]);
        prev = cur;
    }
    Ok(j)
}

/// Cost of a piecewise trace, integrating each segment under its own gains.
pub fn evaluate_cost_segments(trace: &SimTrace) -> Result<f64> {
    trace.require_complete()?;
    let mut j = 0.0;
    for seg in &trace.meta.segments {
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..trace.len() {
            let t = trace.t[k];
            if t < seg.t_start - 1e-12 || t > seg.t_end + 1e-12 {
                continue;
            }
            let cur = cost_integrand(trace, &seg.gains, k);
            if let Some((tp, fp)) = prev {
                j += 0.5 * (fp + cur) * (t - tp);
            }
            prev = Some((t, cur));
        }
    }
    Ok(j)
}

/// Hamiltonian at one sample:
/// `H = ½(Ṙᵀ P1² Ṙ + V̇_λᵀ P2² V̇_λ + Rᵀ K1² R + V_λᵀ K2² V_λ) + ρ_Rᵀ Ṙ + ρ_Vλᵀ V̇_λ`.
fn hamiltonian(trace: &SimTrace, gains: &GuidanceGains, k: usize) -> f64 {
    let mut h = cost_integrand(trace, gains, k);
    for a in &trace.attackers {
        h += a.rho_r[k] * a.v_r[k] + a.rho_vlambda[k] * a.dv_lambda[k];
    }
    h
}

/// Stationarity, costate-consistency and convexity checks plus the
/// Hamiltonian series.
pub fn check_stationarity(trace: &SimTrace, gains: &GuidanceGains) -> Result<OptimalityReport> {
    trace.require_complete()?;
    let len = trace.len();
    if len < 3 {
        return Err(Error::InvalidTrace("stationarity check needs at least three samples".into()));
    }
    let j = evaluate_cost(trace, gains)?;
    let mut max_res_r: f64 = 0.0;
    let mut max_res_vl: f64 = 0.0;
    let mut max_ode_r: f64 = 0.0;
    let mut max_ode_vl: f64 = 0.0;
    for (i, a) in trace.attackers.iter().enumerate() {
        let p1 = gains.p1[i];
        let p2 = gains.p2[i];
        let k1 = gains.k1[i];
        let k2 = gains.k2[i];
        for k in 0..len {
            max_res_r = max_res_r.max((p1 * p1 * a.v_r[k] + a.rho_r[k]).abs());
            max_res_vl = max_res_vl.max((p2 * p2 * a.dv_lambda[k] + a.rho_vlambda[k]).abs());
        }
        for k in 1..len - 1 {
            let h2 = trace.t[k + 1] - trace.t[k - 1];
            let drho_r = (a.rho_r[k + 1] - a.rho_r[k - 1]) / h2;
            let drho_vl = (a.rho_vlambda[k + 1] - a.rho_vlambda[k - 1]) / h2;
            max_ode_r = max_ode_r.max((drho_r + k1 * k1 * a.r[k]).abs());
            max_ode_vl = max_ode_vl.max((drho_vl + k2 * k2 * a.v_lambda[k]).abs());
        }
    }
    let h_series: Vec<f64> = (0..len).map(|k| hamiltonian(trace, gains, k)).collect();
    let h_terminal = *h_series.last().unwrap();
    let convexity_ok = gains
        .p1
        .iter()
        .chain(&gains.p2)
        .all(|&p| p * p > 0.0);
    Ok(OptimalityReport {
        j,
        h_series,
        h_terminal,
        max_stationarity_residual_r: max_res_r,
        max_stationarity_residual_vlambda: max_res_vl,
        max_costate_ode_residual_r: max_ode_r,
        max_costate_ode_residual_vlambda: max_ode_vl,
        convexity_ok,
    })
}

/// Default tolerance for the Lyapunov monotonicity and bound checks.
pub const LYAPUNOV_TOL: f64 = 1e-6;

/// Evaluate the composite Lyapunov function on the starred references plus
/// the observation error, check monotone non-increase, and compare `dV`
/// against the decay bound
/// `dV <= −V_λ*ᵀ(K2/P2)V_λ* − R*ᵀ(K1/P1)(I + (K1/P1)²)R*`.
///
/// `dV` is evaluated analytically sample-wise — the reference derivatives are
/// closed-form and the error derivative follows the observer equation — so
/// the bound comparison is free of finite-difference noise.
pub fn lyapunov_monitor(trace: &SimTrace, tol: f64) -> Result<LyapunovReport> {
    trace.require_complete()?;
    if trace.attackers.iter().any(|a| a.a_t_err.is_empty()) {
        return Err(Error::ModeMismatch(
            "lyapunov monitor needs an observed or piecewise trace with observer series".into(),
        ));
    }
    let exo_s = trace
        .meta
        .config
        .target
        .acceleration
        .exo_model()
        .map(|m| m.s)
        .ok_or_else(|| {
            Error::ModeMismatch("lyapunov monitor needs an exogenous target model".into())
        })?;
    let forcing = trace.meta.config.observer.forcing;
    let len = trace.len();
    let mut v_series = vec![0.0; len];
    let mut dv_series = vec![0.0; len];
    let mut bound = vec![0.0; len];
    for k in 0..len {
        let t = trace.t[k];
        let seg = trace.segment_at(t);
        let mut v = 0.0;
        let mut dv = 0.0;
        let mut b = 0.0;
        for (i, a) in trace.attackers.iter().enumerate() {
            let rp = reference_at_unchecked(&seg.gains, &seg.boundary, i, t);
            let err = a.a_t_err[k];
            v += 0.5
                * (rp.r_star * rp.r_star
                    + rp.v_r_star * rp.v_r_star
                    + rp.v_lambda_star * rp.v_lambda_star
                    + err * err);
            let k1 = seg.gains.rate1(i);
            let k2 = seg.gains.rate2(i);
            // Observer forcing as used in the run; Ã̇ = s·Ã − forcing.
            let phi = trace.target.heading[k] - crate::engagement::reversed_los(a.lambda[k]);
            let (fv_l, fv_r) = match forcing {
                crate::observer::ObserverForcing::Reference => (rp.v_lambda_star, rp.v_r_star),
                crate::observer::ObserverForcing::Measured => (a.v_lambda[k], a.v_r[k]),
            };
            let err_dot = exo_s * err - (phi.cos() * fv_l - phi.sin() * fv_r);
            dv += rp.r_star * rp.v_r_star
                - k1 * rp.v_r_star * rp.v_r_star
                - k2 * rp.v_lambda_star * rp.v_lambda_star
                + err * err_dot;
            b += -k2 * rp.v_lambda_star * rp.v_lambda_star
                - k1 * (1.0 + k1 * k1) * rp.r_star * rp.r_star;
        }
        v_series[k] = v;
        dv_series[k] = dv;
        bound[k] = b;
    }
    let mut monotone = true;
    let mut max_step_increase = f64::MIN;
    for k in 1..len {
        // Re-anchoring steps change the reference trajectories themselves.
        if trace.segment_at(trace.t[k]).index != trace.segment_at(trace.t[k - 1]).index {
            continue;
        }
        let inc = v_series[k] - v_series[k - 1];
        max_step_increase = max_step_increase.max(inc);
        if inc > tol {
            monotone = false;
        }
    }
    let mut bound_violations = 0;
    let mut max_bound_excursion: f64 = 0.0;
    for k in 0..len {
        let excess = dv_series[k] - bound[k];
        if excess > tol {
            bound_violations += 1;
        }
        max_bound_excursion = max_bound_excursion.max(excess);
    }
    Ok(LyapunovReport {
        v_series,
        dv_series,
        monotone,
        max_step_increase,
        bound_violations,
        max_bound_excursion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::{compute_gains, BoundaryData};
    use crate::scenario::{example1, example2};
    use crate::sim::run_scenario;
    use crate::trace::{AttackerSeries, SegmentData, SimTrace, TargetSeries, TraceMeta};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Hand-built scalar trace following R(t) = Rf·e^{−k(t−tf)} with V_λ ≡ 0.
    fn scalar_exponential_trace(r0: f64, rf: f64, tf: f64, steps: usize) -> (SimTrace, GuidanceGains) {
        let boundary = BoundaryData {
            t0: 0.0,
            tf,
            r0: vec![r0],
            vl0: vec![1.0],
            rf_consensus: vec![rf],
            vlf_consensus: vec![0.5],
        };
        let gains = compute_gains(&boundary, &[1.0], &[1.0]).unwrap();
        let k = gains.rate1(0);
        let mut cfg = example1();
        cfg.time.t0_s = 0.0;
        cfg.time.tf_s = tf;
        cfg.time.dt_s = tf / steps as f64;
        let dt = cfg.time.dt_s;
        let mut a = AttackerSeries::default();
        let mut t_axis = Vec::new();
        let mut target = TargetSeries::default();
        for n in 0..=steps {
            let t = if n == steps { tf } else { n as f64 * dt };
            let r = rf * (-k * (t - tf)).exp();
            t_axis.push(t);
            a.r.push(r);
            a.lambda.push(0.0);
            a.v_r.push(-k * r);
            a.v_lambda.push(0.0);
            a.a_mr.push(0.0);
            a.a_mlambda.push(0.0);
            a.a_m_scalar.push(0.0);
            a.a_m_residual.push(0.0);
            a.rho_r.push(k * r); // −P1²·Ṙ
            a.rho_vlambda.push(0.0);
            a.x.push(0.0);
            a.y.push(0.0);
            a.dv_lambda.push(0.0);
            target.x.push(0.0);
            target.y.push(0.0);
            target.heading.push(0.0);
            target.a_t.push(0.0);
        }
        let trace = SimTrace {
            meta: TraceMeta {
                config: cfg,
                law: crate::scenario::LawMode::Known,
                dt,
                costate_convention: "stationarity (rho = -P^2 * state rate)".into(),
                segments: vec![SegmentData {
                    index: 0,
                    t_start: 0.0,
                    t_end: tf,
                    boundary,
                    gains: gains.clone(),
                }],
            },
            t: t_axis,
            attackers: vec![a],
            target,
            lyapunov: vec![],
            hits: vec![],
            diagnostic: None,
        };
        (trace, gains)
    }

    #[test]
    fn cost_of_zero_trajectory_is_zero() {
        let (mut trace, gains) = scalar_exponential_trace(1.0, 0.1, 1.0, 100);
        let a = &mut trace.attackers[0];
        for k in 0..a.r.len() {
            a.r[k] = 0.0;
            a.v_r[k] = 0.0;
            a.v_lambda[k] = 0.0;
            a.dv_lambda[k] = 0.0;
        }
        assert_eq!(evaluate_cost(&trace, &gains).unwrap(), 0.0);
    }

    #[test]
    fn cost_matches_scalar_closed_form() {
        // J = (k/2)(R0² − Rf²) for the exponential with P1 = 1, V_λ ≡ 0.
        let (trace, gains) = scalar_exponential_trace(1.0, 0.1, 1.0, 10_000);
        let k = gains.rate1(0);
        let j = evaluate_cost(&trace, &gains).unwrap();
        let exact = 0.5 * k * (1.0 - 0.01);
        assert_relative_eq!(j, exact, max_relative = 1e-6);
    }

    #[test]
    fn quadrature_converges_at_second_order() {
        let (coarse, gains) = scalar_exponential_trace(1.0, 0.1, 1.0, 500);
        let (fine, _) = scalar_exponential_trace(1.0, 0.1, 1.0, 1000);
        let k = gains.rate1(0);
        let exact = 0.5 * k * (1.0 - 0.01);
        let e_coarse = (evaluate_cost(&coarse, &gains).unwrap() - exact).abs();
        let e_fine = (evaluate_cost(&fine, &gains).unwrap() - exact).abs();
        let ratio = e_coarse / e_fine;
        assert!((3.0..5.0).contains(&ratio), "O(dt²) ratio was {ratio}");
    }

    #[test]
    fn optimal_beats_cubic_with_same_endpoints() {
        // Hermite cubic sharing both endpoint values and slopes costs more.
        let (trace, gains) = scalar_exponential_trace(1.0, 0.1, 1.0, 4000);
        let j_opt = evaluate_cost(&trace, &gains).unwrap();
        let k = gains.rate1(0);
        let (r0, rf, tf) = (1.0, 0.1, 1.0);
        let (d0, df) = (-k * r0, -k * rf);
        let mut cubic = trace.clone();
        {
            let a = &mut cubic.attackers[0];
            for (idx, &t) in cubic.t.iter().enumerate() {
                let s = t / tf;
                let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
                let h10 = s * s * s - 2.0 * s * s + s;
                let h01 = -2.0 * s * s * s + 3.0 * s * s;
                let h11 = s * s * s - s * s;
                a.r[idx] = h00 * r0 + h10 * tf * d0 + h01 * rf + h11 * tf * df;
                let dh00 = (6.0 * s * s - 6.0 * s) / tf;
                let dh10 = (3.0 * s * s - 4.0 * s + 1.0) / tf;
                let dh01 = (-6.0 * s * s + 6.0 * s) / tf;
                let dh11 = (3.0 * s * s - 2.0 * s) / tf;
                a.v_r[idx] = dh00 * r0 + dh10 * tf * d0 + dh01 * rf + dh11 * tf * df;
            }
        }
        let j_cubic = evaluate_cost(&cubic, &gains).unwrap();
        assert!(
            j_opt < j_cubic,
            "optimal J = {j_opt} must beat the cubic's {j_cubic}"
        );
    }

    #[test]
    fn stationarity_residuals_vanish_on_optimal_scalar_trace() {
        let (trace, gains) = scalar_exponential_trace(1.0, 0.1, 1.0, 2000);
        let report = check_stationarity(&trace, &gains).unwrap();
        assert!(report.max_stationarity_residual_r < 1e-12);
        assert!(report.convexity_ok);
        // H vanishes identically along the optimal exponential.
        assert_abs_diff_eq!(report.h_terminal, 0.0, epsilon = 1e-12);
        for &h in &report.h_series {
            assert_abs_diff_eq!(h, 0.0, epsilon = 1e-12);
        }
        // Costate ODE residual is the O(dt²) finite-difference error.
        assert!(report.max_costate_ode_residual_r < 1e-4);
    }

    #[test]
    fn stationarity_residual_grows_under_command_bias() {
        // A radial command offset shifts V_r by −δ·t and R by −δ·t²/2; the
        // stationarity residual must then grow monotonically in time.
        let (mut trace, gains) = scalar_exponential_trace(1.0, 0.1, 1.0, 1000);
        let delta = 0.01;
        {
            let a = &mut trace.attackers[0];
            for (k, &t) in trace.t.iter().enumerate() {
                a.v_r[k] -= delta * t;
                a.r[k] -= 0.5 * delta * t * t;
            }
        }
        let p1 = gains.p1[0];
        let a = &trace.attackers[0];
        let residual: Vec<f64> = trace
            .t
            .iter()
            .enumerate()
            .map(|(k, _)| (p1 * p1 * a.v_r[k] + a.rho_r[k]).abs())
            .collect();
        for k in 1..residual.len() {
            assert!(residual[k] >= residual[k - 1] - 1e-12);
        }
        assert_relative_eq!(*residual.last().unwrap(), delta * 1.0, max_relative = 1e-9);
    }

    #[test]
    fn stationarity_on_known_run_is_tight() {
        let mut cfg = example1();
        cfg.time.dt_s = 0.01;
        let trace = run_scenario(&cfg).unwrap();
        let gains = trace.meta.segments[0].gains.clone();
        let report = check_stationarity(&trace, &gains).unwrap();
        assert!(report.max_stationarity_residual_r < 1e-5);
        assert!(report.max_stationarity_residual_vlambda < 1e-5);
        assert!(report.j >= 0.0);
    }

    #[test]
    fn lyapunov_requires_observer_series() {
        let mut cfg = example1();
        cfg.time.dt_s = 0.01;
        let trace = run_scenario(&cfg).unwrap();
        assert!(matches!(
            lyapunov_monitor(&trace, LYAPUNOV_TOL),
            Err(Error::ModeMismatch(_))
        ));
    }

    #[test]
    fn lyapunov_perfect_observer_has_negative_dv() {
        // Zero observation error: dV equals the decay bound, strictly
        // negative away from the terminal neighborhood.
        let mut cfg = example2();
        cfg.time.dt_s = 0.01;
        let mut trace = run_scenario(&cfg).unwrap();
        for a in &mut trace.attackers {
            for v in &mut a.a_t_err {
                *v = 0.0;
            }
        }
        let report = lyapunov_monitor(&trace, LYAPUNOV_TOL).unwrap();
        assert!(report.monotone);
        assert_eq!(report.bound_violations, 0);
        for &dv in &report.dv_series[..report.dv_series.len() - 1] {
            assert!(dv < 0.0);
        }
    }

    #[test]
    fn lyapunov_zero_states_are_an_equilibrium() {
        let mut cfg = example2();
        cfg.time.dt_s = 0.01;
        let mut trace = run_scenario(&cfg).unwrap();
        // Collapse references and errors to zero: V ≡ 0, dV ≡ 0.
        for seg in &mut trace.meta.segments {
            for i in 0..seg.boundary.r0.len() {
                seg.boundary.rf_consensus[i] = 0.0;
                seg.boundary.vlf_consensus[i] = 0.0;
            }
        }
        for a in &mut trace.attackers {
            for v in &mut a.a_t_err {
                *v = 0.0;
            }
        }
        let report = lyapunov_monitor(&trace, LYAPUNOV_TOL).unwrap();
        for (&v, &dv) in report.v_series.iter().zip(&report.dv_series) {
            assert_eq!(v, 0.0);
            assert_eq!(dv, 0.0);
        }
        assert!(report.monotone);
    }

    #[test]
    fn lyapunov_example2_is_monotone() {
        let mut cfg = example2();
        cfg.time.dt_s = 0.01;
        let trace = run_scenario(&cfg).unwrap();
        let report = lyapunov_monitor(&trace, LYAPUNOV_TOL).unwrap();
        assert!(
            report.monotone,
            "max step increase {}",
            report.max_step_increase
        );
    }

    #[test]
    fn lyapunov_bound_holds_samplewise_on_example2() {
        // dV − bound equals Σ Ã·Ã̇ exactly. The observer error moves away
        // from zero during the first seconds (its forcing is reference-scale
        // while the damping is only s·Ã), so Ã·Ã̇ > 0 there and the per-sample
        // decay bound cannot hold. The assertion keeps the stated tolerance
        // instead of widening it; the monitor's violation report is the
        // usable diagnostic.
        let mut cfg = example2();
        cfg.time.dt_s = 0.01;
        let trace = run_scenario(&cfg).unwrap();
        let report = lyapunov_monitor(&trace, LYAPUNOV_TOL).unwrap();
        assert_eq!(
            report.bound_violations, 0,
            "decay bound exceeded at {} samples (max excursion {:.3e})",
            report.bound_violations, report.max_bound_excursion
        );
    }
}
