//! Directed weighted communication topology among the attackers.
//!
//! The adjacency matrix follows the information-flow convention: `a[i][j] > 0`
//! means attacker `i` receives information from attacker `j`. Self-loops are
//! not permitted. Every scenario requires the graph to contain a directed
//! spanning tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted adjacency matrix with the attacker count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommGraph {
    n: usize,
    weights: Vec<Vec<f64>>,
}

impl CommGraph {
    /// Build a graph from an N×N weight matrix. Rejects non-square matrices,
    /// negative weights and self-loops.
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::InvalidScenario("adjacency matrix is empty".into()));
        }
        for (i, row) in weights.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidScenario(format!(
                    "adjacency row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidScenario(format!(
                        "adjacency weight a[{}][{}] = {w} must be finite and non-negative",
                        i + 1,
                        j + 1
                    )));
                }
                if i == j && w != 0.0 {
                    return Err(Error::InvalidScenario(format!(
                        "self-loop a[{0}][{0}] = {w} is not permitted",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { n, weights })
    }

    /// Complete graph on `n` vertices with unit weights.
    pub fn complete(n: usize) -> Self {
        let weights = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self { n, weights }
    }

    /// Directed cycle `1 ← 2 ← 3 ← ... ← n ← 1` with unit weights
    /// (each attacker receives from the next index).
    pub fn directed_cycle(n: usize) -> Self {
        Self::directed_ring(n, 1)
    }

    /// Directed ring where each attacker receives from the next `k` indices
    /// (mod n) with unit weights. `k = 1` is the plain directed cycle.
    pub fn directed_ring(n: usize, k: usize) -> Self {
        let weights = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let ahead = (1..=k.min(n.saturating_sub(1)))
                            .any(|step| j == (i + step) % n);
                        if ahead {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Self { n, weights }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i][j]
    }
}

/// True iff some vertex reaches all others along information-flow edges,
/// i.e. the graph contains a directed spanning tree.
pub fn contains_spanning_tree(graph: &CommGraph) -> bool {
    let n = graph.n();
    // Flow edge j -> i exists when a[i][j] > 0.
    let reaches_all = |root: usize| {
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        seen[root] = true;
        let mut count = 1;
        while let Some(j) = stack.pop() {
            for i in 0..n {
                if !seen[i] && graph.weight(i, j) > 0.0 {
                    seen[i] = true;
                    count += 1;
                    stack.push(i);
                }
            }
        }
        count == n
    };
    (0..n).any(reaches_all)
}

/// Neighbor-weighted terminal aggregation: `out_i = (1/N) Σ_j a_ij x_j`.
///
/// This is the boundary value that couples the attackers' individual
/// boundary-value problems.
pub fn consensus_terminal(graph: &CommGraph, terminal_values: &[f64]) -> Result<Vec<f64>> {
    if terminal_values.len() != graph.n() {
        return Err(Error::InvalidScenario(format!(
            "terminal vector has {} entries, expected {}",
            terminal_values.len(),
            graph.n()
        )));
    }
    let n = graph.n() as f64;
    Ok((0..graph.n())
        .map(|i| {
            terminal_values
                .iter()
                .enumerate()
                .map(|(j, &x)| graph.weight(i, j) * x)
                .sum::<f64>()
                / n
        })
        .collect())
}

/// Target information held by one attacker, together with the geometry of a
/// neighbor link: distance `r_ij` and the inertial angle `α` of the i→j line
/// (the same angle is seen at both ends).
#[derive(Debug, Clone, Copy)]
pub struct RelayObservation {
    pub observer_id: usize,
    /// Target speed, km/s (relayed verbatim).
    pub target_speed: f64,
    /// Observer's relative distance to the target, km.
    pub r_i: f64,
    /// Observer's LOS angle, rad.
    pub lambda_i: f64,
    /// Distance from observer to neighbor, km.
    pub r_ij: f64,
    /// Inertial angle of the observer→neighbor line, rad.
    pub alpha: f64,
}

/// Distance below which two attackers are treated as coincident, km.
const RELAY_SINGULAR_EPS: f64 = 1e-9;
/// Slack accepted on the law-of-sines argument before the geometry is
/// declared inconsistent.
const RELAY_ARG_TOL: f64 = 1e-9;

/// Relay target geometry one hop: from attacker i's `(R_i, λ_i)` and the
/// link `(r_ij, α)` compute the neighbor's `(R_j, λ_j)` by the triangle
/// cosine and sine theorems:
///
/// `R_j = √(R_i² + r_ij² − 2 R_i r_ij cos(λ_i − α))`,
/// `λ_j = λ_i + arcsin(r_ij sin(λ_i − α) / R_j)`,
///
/// with the law-of-sines branch corrected when the angle subtended at the
/// target is obtuse (`r_ij² > R_i² + R_j²`), where the bare arcsin would
/// return the supplement's mirror.
pub fn relay_target_info(obs: &RelayObservation) -> Result<(f64, f64)> {
    if obs.r_i <= 0.0 {
        return Err(Error::SingularGeometry(format!(
            "relay source distance R_i = {} must be positive",
            obs.r_i
        )));
    }
    if obs.r_ij < 0.0 {
        return Err(Error::GeometryInconsistency(format!(
            "attacker separation r_ij = {} must be non-negative",
            obs.r_ij
        )));
    }
    let theta = obs.lambda_i - obs.alpha;
    let r_j = (obs.r_i * obs.r_i + obs.r_ij * obs.r_ij
        - 2.0 * obs.r_i * obs.r_ij * theta.cos())
    .max(0.0)
    .sqrt();
    if r_j < RELAY_SINGULAR_EPS {
        return Err(Error::SingularGeometry(format!(
            "relayed attacker {} coincides with the target",
            obs.observer_id
        )));
    }
    let arg = obs.r_ij * theta.sin() / r_j;
    if arg.abs() > 1.0 + RELAY_ARG_TOL {
        return Err(Error::GeometryInconsistency(format!(
            "law-of-sines argument {arg} outside [-1, 1]"
        )));
    }
    let base = arg.clamp(-1.0, 1.0).asin();
    // Obtuse angle at the target vertex: the arcsin branch must be reflected.
    let delta = if obs.r_ij * obs.r_ij > obs.r_i * obs.r_i + r_j * r_j {
        if base >= 0.0 {
            std::f64::consts::PI - base
        } else {
            -std::f64::consts::PI - base
        }
    } else {
        base
    };
    Ok((r_j, obs.lambda_i + delta))
}

/// Per-attacker target knowledge produced by [`relay_from_observers`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayedTargetInfo {
    pub r: f64,
    pub lambda: f64,
    /// Hop count from the nearest observing attacker (0 = direct).
    pub hops: usize,
}

/// Propagate target information from the directly-observing attackers to the
/// whole formation, breadth-first along information-flow edges. The first
/// value to arrive wins; ties within a BFS layer resolve by node index, so
/// the result is deterministic.
///
/// `direct` holds `(R_i, λ_i)` for observers (indices in `observers`),
/// `positions` the attackers' inertial positions used for the link geometry.
pub fn relay_from_observers(
    graph: &CommGraph,
    observers: &[usize],
    direct: &[(f64, f64)],
    positions: &[[f64; 2]],
) -> Result<Vec<RelayedTargetInfo>> {
    let n = graph.n();
    if positions.len() != n || direct.len() != n {
        return Err(Error::InvalidScenario(
            "relay inputs must have one entry per attacker".into(),
        ));
    }
    if observers.is_empty() {
        return Err(Error::InvalidScenario(
            "at least one attacker must observe the target".into(),
        ));
    }
    let mut info: Vec<Option<RelayedTargetInfo>> = vec![None; n];
    let mut frontier: Vec<usize> = Vec::new();
    for &o in observers {
        if o >= n {
            return Err(Error::InvalidScenario(format!(
                "observer index {} out of range 1..={n}",
                o + 1
            )));
        }
        info[o] = Some(RelayedTargetInfo {
            r: direct[o].0,
            lambda: direct[o].1,
            hops: 0,
        });
        frontier.push(o);
    }
    frontier.sort_unstable();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &j in &frontier {
            let held = info[j].expect("frontier nodes hold info");
            for i in 0..n {
                // j relays to i when i receives from j.
                if graph.weight(i, j) > 0.0 && info[i].is_none() {
                    let dx = positions[i][0] - positions[j][0];
                    let dy = positions[i][1] - positions[j][1];
                    let obs = RelayObservation {
                        observer_id: j + 1,
                        target_speed: 0.0,
                        r_i: held.r,
                        lambda_i: held.lambda,
                        r_ij: (dx * dx + dy * dy).sqrt(),
                        alpha: dy.atan2(dx),
                    };
                    let (r, lambda) = relay_target_info(&obs)?;
                    info[i] = Some(RelayedTargetInfo {
                        r,
                        lambda,
                        hops: held.hops + 1,
                    });
                    next.push(i);
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        frontier = next;
    }
    info.into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| {
                Error::InvalidScenario(format!(
                    "attacker {} cannot obtain target information over the graph",
                    i + 1
                ))
            })
        })
        .collect()
}
