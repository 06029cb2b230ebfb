//! Time-indexed simulation traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::{BoundaryData, GuidanceGains};
use crate::scenario::{LawMode, ScenarioConfig};

/// Boundary data and gains active on one time segment. Single-shot laws have
/// exactly one segment spanning the whole engagement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentData {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub boundary: BoundaryData,
    pub gains: GuidanceGains,
}

/// Per-attacker time series. All vectors share the trace time grid.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AttackerSeries {
    pub r: Vec<f64>,
    /// Unwrapped LOS angle (continuous for plotting).
    pub lambda: Vec<f64>,
    pub v_r: Vec<f64>,
    pub v_lambda: Vec<f64>,
    pub a_mr: Vec<f64>,
    pub a_mlambda: Vec<f64>,
    /// Least-squares scalar lateral command (diagnostics).
    pub a_m_scalar: Vec<f64>,
    pub a_m_residual: Vec<f64>,
    /// Costate ρ_R with the stationarity-consistent sign (ρ_R = −P1²·Ṙ).
    pub rho_r: Vec<f64>,
    pub rho_vlambda: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Normal-overload derivative V̇_λ evaluated from the relative dynamics.
    pub dv_lambda: Vec<f64>,
    /// Observer estimate Â_T (empty outside observed/piecewise modes).
    pub a_t_hat: Vec<f64>,
    /// Observation error Ã_T = A_T − Â_T (empty outside observed/piecewise).
    pub a_t_err: Vec<f64>,
}

/// Target time series.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TargetSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub heading: Vec<f64>,
    /// True lateral acceleration A_T(t).
    pub a_t: Vec<f64>,
}

/// First crossing of the killing radius by one attacker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitEvent {
    /// 1-based attacker id.
    pub attacker: usize,
    pub t: f64,
}

/// Trace metadata: enough to re-derive references, costs and reports without
/// re-running the scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMeta {
    pub config: ScenarioConfig,
    pub law: LawMode,
    pub dt: f64,
    /// Costate sign convention: "stationarity" means ρ = −P²·(state rate);
    /// the published simulations use the negated series.
    pub costate_convention: String,
    pub segments: Vec<SegmentData>,
}

/// Full deterministic record of one scenario run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimTrace {
    pub meta: TraceMeta,
    pub t: Vec<f64>,
    pub attackers: Vec<AttackerSeries>,
    pub target: TargetSeries,
    /// Composite Lyapunov series (empty outside observed/piecewise modes).
    pub lyapunov: Vec<f64>,
    pub hits: Vec<HitEvent>,
    /// Set when the run was truncated (singular geometry or divergence),
    /// with the offending time recorded.
    pub diagnostic: Option<String>,
}

impl SimTrace {
    pub fn n(&self) -> usize {
        self.attackers.len()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// True when the trace reaches the configured final time.
    pub fn is_complete(&self) -> bool {
        self.diagnostic.is_none()
            && self
                .t
                .last()
                .is_some_and(|&tl| (tl - self.meta.config.time.tf_s).abs() <= 1e-9)
    }

    /// Ensure the trace covers the full interval; several post-processing
    /// operations require it.
    pub fn require_complete(&self) -> Result<()> {
        if !self.is_complete() {
            return Err(Error::InvalidTrace(match &self.diagnostic {
                Some(d) => format!("trace truncated: {d}"),
                None => "trace does not reach tf".into(),
            }));
        }
        Ok(())
    }

    /// The segment active at time `t` (segments are ordered and contiguous;
    /// boundary instants belong to the earlier segment, matching how the
    /// engine records them).
    pub fn segment_at(&self, t: f64) -> &SegmentData {
        let segs = &self.meta.segments;
        segs.iter()
            .find(|s| t <= s.t_end)
            .or_else(|| segs.last())
            .expect("traces carry at least one segment")
    }

    /// Check that every series shares the time grid.
    pub fn check_consistency(&self) -> Result<()> {
        let len = self.t.len();
        let check = |name: &str, l: usize| {
            if l != len {
                return Err(Error::InvalidTrace(format!(
                    "series {name} has {l} samples, expected {len}"
                )));
            }
            Ok(())
        };
        for (i, a) in self.attackers.iter().enumerate() {
            check(&format!("attacker{}.r", i + 1), a.r.len())?;
            check(&format!("attacker{}.lambda", i + 1), a.lambda.len())?;
            check(&format!("attacker{}.v_r", i + 1), a.v_r.len())?;
            check(&format!("attacker{}.v_lambda", i + 1), a.v_lambda.len())?;
            check(&format!("attacker{}.a_mr", i + 1), a.a_mr.len())?;
            check(&format!("attacker{}.a_mlambda", i + 1), a.a_mlambda.len())?;
            check(&format!("attacker{}.rho_r", i + 1), a.rho_r.len())?;
            check(&format!("attacker{}.rho_vlambda", i + 1), a.rho_vlambda.len())?;
            check(&format!("attacker{}.x", i + 1), a.x.len())?;
            check(&format!("attacker{}.y", i + 1), a.y.len())?;
            check(&format!("attacker{}.dv_lambda", i + 1), a.dv_lambda.len())?;
            if !a.a_t_hat.is_empty() {
                check(&format!("attacker{}.a_t_hat", i + 1), a.a_t_hat.len())?;
                check(&format!("attacker{}.a_t_err", i + 1), a.a_t_err.len())?;
            }
        }
        check("target.x", self.target.x.len())?;
        check("target.y", self.target.y.len())?;
        check("target.heading", self.target.heading.len())?;
        check("target.a_t", self.target.a_t.len())?;
        if !self.lyapunov.is_empty() {
            check("lyapunov", self.lyapunov.len())?;
        }
        Ok(())
    }

    /// JSON persistence (round-trips every f64 exactly).
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidTrace(format!("trace parse error: {e}")))
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Keep every `stride`-th sample (and always the final one). Used to thin
    /// traces for plotting and persistence.
    #[must_use]
    pub fn decimate(&self, stride: usize) -> SimTrace {
        if stride <= 1 || self.t.len() < 3 {
            return self.clone();
        }
        let keep: Vec<usize> = (0..self.t.len())
            .filter(|&i| i % stride == 0 || i == self.t.len() - 1)
            .collect();
        let pick = |v: &[f64]| -> Vec<f64> { keep.iter().map(|&i| v[i]).collect() };
        SimTrace {
            meta: self.meta.clone(),
            t: pick(&self.t),
            attackers: self
                .attackers
                .iter()
                .map(|a| AttackerSeries {
                    r: pick(&a.r),
                    lambda: pick(&a.lambda),
                    v_r: pick(&a.v_r),
                    v_lambda: pick(&a.v_lambda),
                    a_mr: pick(&a.a_mr),
                    a_mlambda: pick(&a.a_mlambda),
                    a_m_scalar: pick(&a.a_m_scalar),
                    a_m_residual: pick(&a.a_m_residual),
                    rho_r: pick(&a.rho_r),
                    rho_vlambda: pick(&a.rho_vlambda),
                    x: pick(&a.x),
                    y: pick(&a.y),
                    dv_lambda: pick(&a.dv_lambda),
                    a_t_hat: if a.a_t_hat.is_empty() { vec![] } else { pick(&a.a_t_hat) },
                    a_t_err: if a.a_t_err.is_empty() { vec![] } else { pick(&a.a_t_err) },
                })
                .collect(),
            target: TargetSeries {
                x: pick(&self.target.x),
                y: pick(&self.target.y),
                heading: pick(&self.target.heading),
                a_t: pick(&self.target.a_t),
            },
            lyapunov: if self.lyapunov.is_empty() {
                vec![]
            } else {
                pick(&self.lyapunov)
            },
            hits: self.hits.clone(),
            diagnostic: self.diagnostic.clone(),
        }
    }
}
