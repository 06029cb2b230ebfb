//! Scenario configuration: schema, validation, presets and TOML round-trip.
//!
//! Configs are human-readable TOML with units spelled out in the key names
//! (`r0_km`, `speed_kms`, `tf_s`, ...). Two presets ship with the crate:
//! `example1` (known target acceleration, sinusoidal lateral maneuver,
//! tf = 15 s) and `example2` (observer-estimated exponential maneuver,
//! s = −2, tf = 8 s).

use serde::{Deserialize, Serialize};

use crate::engagement::{attacker_position_from_relative, reversed_los};
use crate::error::{Error, Result};
use crate::graph::{consensus_terminal, contains_spanning_tree, CommGraph};
use crate::guidance::{BoundaryData, TerminalSource};
use crate::observer::{ExoModel, ObserverForcing};

/// Guidance law selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawMode {
    /// Law fed by the true target acceleration.
    Known,
    /// Law fed by the disturbance-observer estimate.
    Observed,
    /// Piecewise re-anchored closed-loop law.
    Piecewise,
    /// No attacker commands; the relative motion coasts under the target
    /// maneuver alone. Used for oracle and integrator-order checks.
    Ballistic,
}

impl std::fmt::Display for LawMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LawMode::Known => "known",
            LawMode::Observed => "observed",
            LawMode::Piecewise => "piecewise",
            LawMode::Ballistic => "ballistic",
        };
        f.write_str(s)
    }
}

/// Target lateral-acceleration profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AccelProfile {
    /// `a(t) = amplitude·sin(frequency·t)`.
    LateralSine {
        amplitude_kms2: f64,
        frequency_radps: f64,
    },
    /// `a(t) = initial·exp(decay_rate·t)` — the exogenous model.
    Exponential {
        initial_kms2: f64,
        decay_rate_1ps: f64,
    },
    /// Non-maneuvering target.
    None,
}

impl AccelProfile {
    /// Lateral acceleration at time `t`, km/s².
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            AccelProfile::LateralSine {
                amplitude_kms2,
                frequency_radps,
            } => amplitude_kms2 * (frequency_radps * t).sin(),
            AccelProfile::Exponential {
                initial_kms2,
                decay_rate_1ps,
            } => initial_kms2 * (decay_rate_1ps * t).exp(),
            AccelProfile::None => 0.0,
        }
    }

    /// The exogenous-model view, when this profile has one.
    pub fn exo_model(&self) -> Option<ExoModel> {
        match *self {
            AccelProfile::Exponential {
                initial_kms2,
                decay_rate_1ps,
            } => Some(ExoModel {
                s: decay_rate_1ps,
                a_t0: initial_kms2,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub t0_s: f64,
    pub tf_s: f64,
    pub dt_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetConfig {
    pub position_km: [f64; 2],
    /// Engagement heading γ_T (the velocity points along `heading + π`).
    pub heading_rad: f64,
    pub speed_kms: f64,
    pub acceleration: AccelProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackerConfig {
    pub lambda0_rad: f64,
    pub gamma0_rad: f64,
    pub r0_km: f64,
    pub rf_km: f64,
    pub vlambda0_kms: f64,
    pub vlambdaf_kms: f64,
    pub speed_kms: f64,
    /// Optional initial closing velocity. When omitted the guidance laws
    /// start on the optimal manifold (`V_r(t0) = V_r*(t0)`); ballistic runs
    /// fall back to the value implied by the initial bearings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vr0_kms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Weighted adjacency matrix; `weights[i][j] > 0` means attacker i+1
    /// receives information from attacker j+1.
    pub weights: Vec<Vec<f64>>,
    /// 1-based ids of the attackers that observe the target directly.
    pub observers: Vec<usize>,
}

fn default_segments() -> usize {
    1
}

fn default_terminals() -> TerminalSource {
    TerminalSource::Consensus
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub law: LawMode,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    /// Piecewise segment count (uniform schedule).
    #[serde(default = "default_segments")]
    pub segments: usize,
    /// Piecewise terminal source.
    #[serde(default = "default_terminals")]
    pub segment_terminals: TerminalSource,
}

fn default_forcing() -> ObserverForcing {
    ObserverForcing::Reference
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverConfig {
    #[serde(default = "default_forcing")]
    pub forcing: ObserverForcing,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            forcing: ObserverForcing::Reference,
        }
    }
}

fn default_relay() -> bool {
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementConfig {
    pub killing_radius_km: f64,
    /// When set, non-observing attackers obtain their initial target
    /// geometry through the communication graph (and it is checked against
    /// the direct geometry).
    #[serde(default = "default_relay")]
    pub relay_initial_state: bool,
}

/// Full scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub time: TimeConfig,
    pub target: TargetConfig,
    #[serde(rename = "attacker")]
    pub attackers: Vec<AttackerConfig>,
    pub graph: GraphConfig,
    pub guidance: GuidanceConfig,
    #[serde(default)]
    pub observer: ObserverConfig,
    pub engagement: EngagementConfig,
}

/// Tolerance on the published initial `V_λ` against the value implied by the
/// initial bearings (the reference data is rounded to four decimals).
const VLAMBDA_CONSISTENCY_TOL: f64 = 5e-3;

impl ScenarioConfig {
    pub fn n(&self) -> usize {
        self.attackers.len()
    }

    /// Parse and validate a TOML scenario.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s)
            .map_err(|e| Error::InvalidScenario(format!("TOML parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Resolve a preset name, or load a config file.
    pub fn from_preset_or_path(name: &str) -> Result<Self> {
        match name {
            "example1" => Ok(example1()),
            "example2" => Ok(example2()),
            other => Self::from_path(std::path::Path::new(other)),
        }
    }

    pub fn comm_graph(&self) -> Result<CommGraph> {
        CommGraph::new(self.graph.weights.clone())
    }

    /// Initial attacker positions reconstructed from `(R0, λ0)` and the
    /// target position.
    pub fn initial_positions(&self) -> Vec<[f64; 2]> {
        self.attackers
            .iter()
            .map(|a| attacker_position_from_relative(a.r0_km, a.lambda0_rad, self.target.position_km))
            .collect()
    }

    /// Initial closing velocity implied by the configured bearings.
    pub fn geometric_vr0(&self, i: usize) -> f64 {
        let a = &self.attackers[i];
        let phi = self.target.heading_rad - reversed_los(a.lambda0_rad);
        let xi = a.gamma0_rad - a.lambda0_rad;
        self.target.speed_kms * phi.cos() - a.speed_kms * xi.cos()
    }

    /// Initial LOS-normal velocity implied by the configured bearings.
    pub fn geometric_vlambda0(&self, i: usize) -> f64 {
        let a = &self.attackers[i];
        let phi = self.target.heading_rad - reversed_los(a.lambda0_rad);
        let xi = a.gamma0_rad - a.lambda0_rad;
        self.target.speed_kms * phi.sin() - a.speed_kms * xi.sin()
    }

    /// Boundary data of the whole engagement interval, with consensus
    /// terminals aggregated from the per-attacker presets.
    pub fn preset_boundary(&self) -> Result<BoundaryData> {
        let graph = self.comm_graph()?;
        let rf: Vec<f64> = self.attackers.iter().map(|a| a.rf_km).collect();
        let vlf: Vec<f64> = self.attackers.iter().map(|a| a.vlambdaf_kms).collect();
        let rf_consensus = consensus_terminal(&graph, &rf)?;
        let vlf_consensus = consensus_terminal(&graph, &vlf)?
            .iter()
            .map(|v| v.abs())
            .collect();
        Ok(BoundaryData {
            t0: self.time.t0_s,
            tf: self.time.tf_s,
            r0: self.attackers.iter().map(|a| a.r0_km).collect(),
            vl0: self.attackers.iter().map(|a| a.vlambda0_kms).collect(),
            rf_consensus,
            vlf_consensus,
        })
    }

    /// Validate every schema and physical invariant. Error messages name the
    /// offending key and value.
    pub fn validate(&self) -> Result<()> {
        let n = self.attackers.len();
        if n == 0 {
            return Err(Error::InvalidScenario("at least one attacker is required".into()));
        }
        if !(self.time.dt_s > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "time.dt_s = {} must be positive",
                self.time.dt_s
            )));
        }
        if self.time.tf_s <= self.time.t0_s {
            return Err(Error::InvalidScenario(format!(
                "time.tf_s = {} must exceed time.t0_s = {}",
                self.time.tf_s, self.time.t0_s
            )));
        }
        let span = self.time.tf_s - self.time.t0_s;
        let steps = (span / self.time.dt_s).round();
        if steps < 1.0 || (steps * self.time.dt_s - span).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::InvalidScenario(format!(
                "time.dt_s = {} does not divide the interval [{}, {}]",
                self.time.dt_s, self.time.t0_s, self.time.tf_s
            )));
        }
        if !(self.target.speed_kms > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "target.speed_kms = {} must be positive",
                self.target.speed_kms
            )));
        }
        if !(self.engagement.killing_radius_km > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "engagement.killing_radius_km = {} must be positive",
                self.engagement.killing_radius_km
            )));
        }
        for (i, a) in self.attackers.iter().enumerate() {
            if !(a.speed_kms > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "attacker[{}].speed_kms = {} must be positive",
                    i + 1,
                    a.speed_kms
                )));
            }
            if a.speed_kms >= self.target.speed_kms {
                return Err(Error::InvalidScenario(format!(
                    "attacker[{}].speed_kms = {} must be smaller than target.speed_kms = {}",
                    i + 1,
                    a.speed_kms,
                    self.target.speed_kms
                )));
            }
            if !(a.r0_km > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "attacker[{}].r0_km = {} must be positive",
                    i + 1,
                    a.r0_km
                )));
            }
            if !(a.rf_km > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "attacker[{}].rf_km = {} must be positive (the gains take its logarithm)",
                    i + 1,
                    a.rf_km
                )));
            }
            let vl_geo = self.geometric_vlambda0(i);
            if (vl_geo - a.vlambda0_kms).abs() > VLAMBDA_CONSISTENCY_TOL {
                return Err(Error::InvalidScenario(format!(
                    "attacker[{}].vlambda0_kms = {} is inconsistent with the bearing geometry \
                     (implied value {:.6})",
                    i + 1,
                    a.vlambda0_kms,
                    vl_geo
                )));
            }
        }
        let graph = self.comm_graph()?;
        if graph.n() != n {
            return Err(Error::InvalidScenario(format!(
                "graph.weights is {}x{} but there are {} attackers",
                graph.n(),
                graph.n(),
                n
            )));
        }
        if !contains_spanning_tree(&graph) {
            return Err(Error::InvalidScenario(
                "graph.weights does not contain a directed spanning tree".into(),
            ));
        }
        if self.graph.observers.is_empty() {
            return Err(Error::InvalidScenario(
                "graph.observers: at least one attacker must observe the target".into(),
            ));
        }
        for &o in &self.graph.observers {
            if o == 0 || o > n {
                return Err(Error::InvalidScenario(format!(
                    "graph.observers id {o} outside 1..={n}"
                )));
            }
        }
        if self.guidance.p1.len() != n || self.guidance.p2.len() != n {
            return Err(Error::InvalidScenario(format!(
                "guidance.p1/p2 must list one positive weight per attacker ({n})"
            )));
        }
        for (k, w) in self.guidance.p1.iter().chain(&self.guidance.p2).enumerate() {
            if !(*w > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "guidance weight #{k} = {w} must be strictly positive"
                )));
            }
        }
        match self.guidance.law {
            LawMode::Ballistic => {}
            LawMode::Known | LawMode::Observed => {
                self.preset_boundary()?.validate()?;
            }
            LawMode::Piecewise => {
                if self.guidance.segments == 0 {
                    return Err(Error::InvalidScenario(
                        "guidance.segments must be at least 1".into(),
                    ));
                }
                let steps = (span / self.time.dt_s).round() as usize;
                if steps % self.guidance.segments != 0 {
                    return Err(Error::InvalidScenario(format!(
                        "guidance.segments = {} must divide the {} integration steps",
                        self.guidance.segments, steps
                    )));
                }
                if self.guidance.segment_terminals == TerminalSource::Preset {
                    self.preset_boundary()?.validate()?;
                }
            }
        }
        if matches!(self.guidance.law, LawMode::Observed | LawMode::Piecewise) {
            match self.target.acceleration.exo_model() {
                Some(exo) => exo.validate()?,
                None => {
                    return Err(Error::InvalidScenario(
                        "observed/piecewise laws require target.acceleration.kind = \"exponential\" \
                         (the observer needs the exogenous structure)"
                            .into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// Reference parameters shared by both presets: four attackers against one
/// faster target. The angles are published four-decimal values, not
/// truncated fractions of π.
#[allow(clippy::approx_constant)]
fn preset_base(law: LawMode, tf: f64, accel: AccelProfile) -> ScenarioConfig {
    let lambda0 = [-0.8851, 0.6528, -1.3135, 1.2178];
    let gamma0 = [0.6283, -1.0472, -1.0472, 1.5708];
    let r0 = [7.1063, 10.7005, 9.8234, 10.1242];
    let vlambda0 = [-1.6342, 0.3099, -0.8881, -0.0722];
    let attackers = (0..4)
        .map(|i| AttackerConfig {
            lambda0_rad: lambda0[i],
            gamma0_rad: gamma0[i],
            r0_km: r0[i],
            rf_km: 0.01,
            vlambda0_kms: vlambda0[i],
            vlambdaf_kms: 0.01,
            speed_kms: 0.7,
            vr0_kms: None,
        })
        .collect();
    ScenarioConfig {
        time: TimeConfig {
            t0_s: 0.0,
            tf_s: tf,
            dt_s: 1e-3,
        },
        target: TargetConfig {
            position_km: [6.5, 0.5],
            heading_rad: 1.0472,
            speed_kms: 1.0,
            acceleration: accel,
        },
        attackers,
        graph: GraphConfig {
            // Each attacker hears the next two around the ring: uniform
            // weights keep the consensus terminals equal across attackers,
            // and pair-averaging keeps re-anchored piecewise segments
            // contracting gently.
            weights: CommGraph::directed_ring(4, 2).weights().to_vec(),
            observers: vec![1],
        },
        guidance: GuidanceConfig {
            law,
            p1: vec![1.0; 4],
            p2: vec![1.0; 4],
            segments: 1,
            segment_terminals: TerminalSource::Consensus,
        },
        observer: ObserverConfig::default(),
        engagement: EngagementConfig {
            killing_radius_km: 0.01,
            relay_initial_state: false,
        },
    }
}

/// Known-acceleration engagement: sinusoidal lateral target maneuver
/// `0.1·sin(10t)` km/s², tf = 15 s.
pub fn example1() -> ScenarioConfig {
    preset_base(
        LawMode::Known,
        15.0,
        AccelProfile::LateralSine {
            amplitude_kms2: 0.1,
            frequency_radps: 10.0,
        },
    )
}

/// Observer-based engagement: exponential target maneuver with s = −2,
/// tf = 8 s, same initial geometry as `example1`.
pub fn example2() -> ScenarioConfig {
    preset_base(
        LawMode::Observed,
        8.0,
        AccelProfile::Exponential {
            initial_kms2: 0.5,
            decay_rate_1ps: -2.0,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn example1_preset_values() {
        let cfg = example1();
        assert_eq!(cfg.n(), 4);
        let r0: Vec<f64> = cfg.attackers.iter().map(|a| a.r0_km).collect();
        assert_eq!(r0, vec![7.1063, 10.7005, 9.8234, 10.1242]);
        assert_eq!(cfg.time.tf_s, 15.0);
        assert_eq!(cfg.guidance.law, LawMode::Known);
        assert!(matches!(
            cfg.target.acceleration,
            AccelProfile::LateralSine { amplitude_kms2, frequency_radps }
                if amplitude_kms2 == 0.1 && frequency_radps == 10.0
        ));
        cfg.validate().unwrap();
    }

    #[test]
    fn example2_preset_values() {
        let cfg = example2();
        assert_eq!(cfg.time.tf_s, 8.0);
        assert_eq!(cfg.guidance.law, LawMode::Observed);
        let exo = cfg.target.acceleration.exo_model().unwrap();
        assert_eq!(exo.s, -2.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn fast_attacker_is_rejected() {
        let mut cfg = example1();
        cfg.attackers[2].speed_kms = 1.2;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("speed_kms"), "unexpected error: {err}");
    }

    #[test]
    fn missing_spanning_tree_is_rejected() {
        let mut cfg = example1();
        cfg.graph.weights = vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("spanning tree"));
    }

    #[test]
    fn inconsistent_vlambda0_is_rejected() {
        let mut cfg = example1();
        cfg.attackers[0].vlambda0_kms = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_roundtrip_is_equivalent() {
        let cfg = example2();
        let text = cfg.to_toml_string().unwrap();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn geometric_initial_velocities_match_reference_data() {
        let cfg = example1();
        let published = [-1.6342, 0.3099, -0.8881, -0.0722];
        for i in 0..4 {
            assert_relative_eq!(cfg.geometric_vlambda0(i), published[i], epsilon = 5e-4);
        }
        // Independent scalar evaluation of attacker 1's closing velocity.
        assert_relative_eq!(cfg.geometric_vr0(0), 0.3135257447536777, max_relative = 1e-12);
    }

    #[test]
    fn preset_boundary_uses_ring_consensus() {
        let cfg = example1();
        let b = cfg.preset_boundary().unwrap();
        for i in 0..4 {
            // Two unit-weight neighbors over N = 4.
            assert_relative_eq!(b.rf_consensus[i], 0.005, max_relative = 1e-15);
            assert_relative_eq!(b.vlf_consensus[i], 0.005, max_relative = 1e-15);
        }
        b.validate().unwrap();
    }

    #[test]
    fn observed_law_requires_exogenous_profile() {
        let mut cfg = example2();
        cfg.target.acceleration = AccelProfile::None;
        assert!(cfg.validate().is_err());
    }
}
