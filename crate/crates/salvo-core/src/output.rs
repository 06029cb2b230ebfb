//! Trace persistence: delimited time-series files, SVG plots, the run
//! summary and the run manifest.
//!
//! Series files are CSV with a time column followed by one column per
//! attacker, written with shortest-round-trip formatting so every value
//! parses back bit-exactly. One file and one plot are emitted per quantity
//! family; observed/piecewise runs add the observation-error family.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plot::{line_plot, Series};
use crate::sim::{detect_simultaneity, SimultaneityReport};
use crate::trace::SimTrace;
use crate::verify::{LyapunovReport, OptimalityReport};

/// Summary metrics of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub law: String,
    pub hit_times_s: Vec<Option<f64>>,
    pub hit_spread_s: Option<f64>,
    pub predicted_impact_time_s: f64,
    pub terminal_consensus_spread_km: f64,
    pub cost_j: Option<f64>,
    pub hamiltonian_terminal: Option<f64>,
    pub lyapunov_monotone: Option<bool>,
    pub diagnostic: Option<String>,
}

/// What a run left on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: String,
    pub law: String,
    pub output_dir: String,
    pub artifacts: Vec<String>,
    pub summary: RunSummary,
}

struct Family<'a> {
    stem: &'a str,
    title: &'a str,
    unit: &'a str,
    per_attacker: Vec<&'a [f64]>,
}

fn families(trace: &SimTrace) -> Vec<Family<'_>> {
    let mut fams = vec![
        Family {
            stem: "R",
            title: "Relative distances",
            unit: "km",
            per_attacker: trace.attackers.iter().map(|a| a.r.as_slice()).collect(),
        },
        Family {
            stem: "Vr",
            title: "Closing velocities V_r",
            unit: "km/s",
            per_attacker: trace.attackers.iter().map(|a| a.v_r.as_slice()).collect(),
        },
        Family {
            stem: "Vlambda",
            title: "LOS-normal velocities V_lambda",
            unit: "km/s",
            per_attacker: trace.attackers.iter().map(|a| a.v_lambda.as_slice()).collect(),
        },
        Family {
            stem: "AMr",
            title: "Commands A_Mr",
            unit: "km/s^2",
            per_attacker: trace.attackers.iter().map(|a| a.a_mr.as_slice()).collect(),
        },
        Family {
            stem: "AMlambda",
            title: "Commands A_Mlambda",
            unit: "km/s^2",
            per_attacker: trace.attackers.iter().map(|a| a.a_mlambda.as_slice()).collect(),
        },
        Family {
            stem: "lambda",
            title: "LOS angles",
            unit: "rad",
            per_attacker: trace.attackers.iter().map(|a| a.lambda.as_slice()).collect(),
        },
        Family {
            stem: "rhoR",
            title: "Costates rho_R",
            unit: "km",
            per_attacker: trace.attackers.iter().map(|a| a.rho_r.as_slice()).collect(),
        },
        Family {
            stem: "rhoVlambda",
            title: "Costates rho_Vlambda",
            unit: "km/s",
            per_attacker: trace.attackers.iter().map(|a| a.rho_vlambda.as_slice()).collect(),
        },
    ];
    if trace.attackers.iter().all(|a| !a.a_t_err.is_empty()) {
        fams.push(Family {
            stem: "ATerr",
            title: "Observation errors A_T - A_T_hat",
            unit: "km/s^2",
            per_attacker: trace.attackers.iter().map(|a| a.a_t_err.as_slice()).collect(),
        });
    }
    fams
}

fn write_series_csv(path: &Path, t: &[f64], columns: &[(&str, &[f64])]) -> Result<()> {
    let mut out = String::with_capacity(t.len() * columns.len() * 24);
    out.push_str("t_s");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (k, &tv) in t.iter().enumerate() {
        out.push_str(&format!("{tv}"));
        for (_, col) in columns {
            out.push_str(&format!(",{}", col[k]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Terminal spread max_{i,j} |R_i(tf) − R_j(tf)|.
pub fn terminal_consensus_spread(trace: &SimTrace) -> f64 {
    let finals: Vec<f64> = trace
        .attackers
        .iter()
        .filter_map(|a| a.r.last().copied())
        .collect();
    let max = finals.iter().cloned().fold(f64::MIN, f64::max);
    let min = finals.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

/// Build the run summary from the trace and the verification reports.
pub fn summarize(
    trace: &SimTrace,
    optimality: Option<&OptimalityReport>,
    lyapunov: Option<&LyapunovReport>,
) -> RunSummary {
    let sim: Option<SimultaneityReport> = detect_simultaneity(
        trace,
        trace.meta.config.engagement.killing_radius_km,
    )
    .ok();
    RunSummary {
        law: trace.meta.law.to_string(),
        hit_times_s: sim
            .as_ref()
            .map(|s| s.hit_times.clone())
            .unwrap_or_else(|| vec![None; trace.n()]),
        hit_spread_s: sim.as_ref().and_then(|s| s.spread),
        predicted_impact_time_s: sim.as_ref().map(|s| s.predicted_impact_time).unwrap_or(f64::NAN),
        terminal_consensus_spread_km: terminal_consensus_spread(trace),
        cost_j: optimality.map(|o| o.j),
        hamiltonian_terminal: optimality.map(|o| o.h_terminal),
        lyapunov_monotone: lyapunov.map(|l| l.monotone),
        diagnostic: trace.diagnostic.clone(),
    }
}

/// Write the full artifact set for one run: the trace JSON, one CSV and one
/// SVG per quantity family, the XY trajectory plot with its positions CSV,
/// the summary and the manifest. Returns the manifest (also persisted as
/// `manifest.json`).
pub fn emit_outputs(
    trace: &SimTrace,
    optimality: Option<&OptimalityReport>,
    lyapunov: Option<&LyapunovReport>,
    config_path: &str,
    dir: &Path,
) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let mut artifacts: Vec<String> = Vec::new();
    let mut record = |p: PathBuf| -> String {
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        artifacts.push(name.clone());
        name
    };

    let trace_path = dir.join("trace.json");
    trace.write_json(&trace_path)?;
    record(trace_path);

    let n = trace.n();
    let labels: Vec<String> = (1..=n).map(|i| format!("a{i}")).collect();
    for fam in families(trace) {
        let cols: Vec<(&str, &[f64])> = labels
            .iter()
            .map(|l| l.as_str())
            .zip(fam.per_attacker.iter().copied())
            .collect();
        let csv_path = dir.join(format!("{}.csv", fam.stem));
        write_series_csv(&csv_path, &trace.t, &cols)?;
        record(csv_path);

        let series: Vec<Series<'_>> = fam
            .per_attacker
            .iter()
            .enumerate()
            .map(|(i, col)| Series {
                label: format!("attacker {}", i + 1),
                x: &trace.t,
                y: col,
            })
            .collect();
        let svg = line_plot(
            fam.title,
            "t (s)",
            &format!("{} ({})", fam.stem, fam.unit),
            &series,
        );
        let svg_path = dir.join(format!("{}.svg", fam.stem));
        std::fs::write(&svg_path, svg)?;
        record(svg_path);
    }

    // Positions family: time, attacker x/y pairs, then the target track.
    {
        let mut cols: Vec<(String, &[f64])> = Vec::new();
        for (i, a) in trace.attackers.iter().enumerate() {
            cols.push((format!("a{}_x", i + 1), &a.x));
            cols.push((format!("a{}_y", i + 1), &a.y));
        }
        cols.push(("target_x".into(), &trace.target.x));
        cols.push(("target_y".into(), &trace.target.y));
        let named: Vec<(&str, &[f64])> = cols.iter().map(|(n, c)| (n.as_str(), *c)).collect();
        let csv_path = dir.join("positions.csv");
        write_series_csv(&csv_path, &trace.t, &named)?;
        record(csv_path);

        let mut series: Vec<Series<'_>> = trace
            .attackers
            .iter()
            .enumerate()
            .map(|(i, a)| Series {
                label: format!("attacker {}", i + 1),
                x: &a.x,
                y: &a.y,
            })
            .collect();
        series.push(Series {
            label: "target".into(),
            x: &trace.target.x,
            y: &trace.target.y,
        });
        let svg = line_plot("Trajectories", "x (km)", "y (km)", &series);
        let svg_path = dir.join("positions.svg");
        std::fs::write(&svg_path, svg)?;
        record(svg_path);
    }

    let summary = summarize(trace, optimality, lyapunov);
    let summary_path = dir.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Serialize(e.to_string()))?,
    )?;
    record(summary_path);

    let manifest = RunManifest {
        config_path: config_path.to_string(),
        law: trace.meta.law.to_string(),
        output_dir: dir.to_string_lossy().into_owned(),
        artifacts,
        summary,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Serialize(e.to_string()))?,
    )?;
    Ok(manifest)
}
