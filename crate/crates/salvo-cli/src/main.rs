//! Command-line driver: run scenarios, verify traces, dump presets, and
//! sweep parameters.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime
//! singularity/divergence, 3 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use salvo_core::error::Error;
use salvo_core::output::{emit_outputs, terminal_consensus_spread, RunManifest};
use salvo_core::scenario::{LawMode, ScenarioConfig};
use salvo_core::sim::run_scenario;
use salvo_core::trace::SimTrace;
use salvo_core::verify::{
    check_stationarity, evaluate_cost_segments, lyapunov_monitor, LyapunovReport,
    OptimalityReport, LYAPUNOV_TOL,
};

/// Environment variable naming the default output root.
const OUTPUT_ROOT_ENV: &str = "SALVO_OUTPUT_ROOT";

#[derive(Parser)]
#[command(
    name = "salvo",
    about = "Cooperative-guidance engagement simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (a config path or a preset name) and emit artifacts.
    Run {
        /// Path to a scenario TOML, or `example1` / `example2`.
        config: String,
        /// Output directory (default: <output root>/<config stem>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep every n-th trace sample in the persisted outputs.
        #[arg(long, default_value_t = 1)]
        decimate: usize,
    },
    /// Re-check a persisted trace: cost, stationarity, Lyapunov monitor.
    Verify {
        /// Path to a trace.json produced by `run`.
        trace: PathBuf,
        /// Optional path for the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print (or write) a built-in scenario preset as TOML.
    Preset {
        /// `example1` or `example2`.
        name: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a one-parameter family of scenarios concurrently.
    Sweep {
        /// Path to a scenario TOML, or `example1` / `example2`.
        config: String,
        /// Parameter to vary: `p1`, `p2` (weight scale), `segments`, `dt`.
        #[arg(long)]
        param: String,
        /// Range `start:end:count` (inclusive endpoints).
        #[arg(long)]
        range: String,
        /// Output directory (default: <output root>/sweep_<param>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("salvo_out"))
}

fn config_stem(name: &str) -> String {
    Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string())
}

fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::SingularGeometry(_) | Error::SegmentInfeasible(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

/// Verification verdict with the thresholds applied per law mode.
struct Verdict {
    optimality: Option<OptimalityReport>,
    lyapunov: Option<LyapunovReport>,
    j: f64,
    pass: bool,
    notes: Vec<String>,
}

const STATIONARITY_TOL: f64 = 1e-5;

fn verify_trace(trace: &SimTrace) -> Result<Verdict, Error> {
    trace.require_complete()?;
    let mut notes = Vec::new();
    let mut pass = true;
    let j = evaluate_cost_segments(trace)?;
    if !(j >= 0.0) {
        pass = false;
        notes.push(format!("cost J = {j} is not non-negative"));
    }
    let single_segment = trace.meta.segments.len() == 1;
    let optimality = if single_segment {
        let report = check_stationarity(trace, &trace.meta.segments[0].gains)?;
        if !report.convexity_ok {
            pass = false;
            notes.push("second-order condition violated".into());
        }
        if trace.meta.law == LawMode::Known {
            if report.max_stationarity_residual_r > STATIONARITY_TOL
                || report.max_stationarity_residual_vlambda > STATIONARITY_TOL
            {
                pass = false;
                notes.push(format!(
                    "stationarity residuals {:.3e}/{:.3e} exceed {STATIONARITY_TOL:.0e}",
                    report.max_stationarity_residual_r, report.max_stationarity_residual_vlambda
                ));
            }
        }
        Some(report)
    } else {
        notes.push("piecewise trace: stationarity reported per segment gains is skipped".into());
        None
    };
    let lyapunov = match trace.meta.law {
        LawMode::Observed | LawMode::Piecewise => {
            let report = lyapunov_monitor(trace, LYAPUNOV_TOL)?;
            if !report.monotone {
                pass = false;
                notes.push(format!(
                    "Lyapunov function increased by {:.3e} at some step",
                    report.max_step_increase
                ));
            }
            Some(report)
        }
        _ => None,
    };
    Ok(Verdict {
        optimality,
        lyapunov,
        j,
        pass,
        notes,
    })
}

fn cmd_run(config: &str, out: Option<PathBuf>, decimate: usize) -> ExitCode {
    let cfg = match ScenarioConfig::from_preset_or_path(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let trace = match run_scenario(&cfg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    let dir = out.unwrap_or_else(|| output_root().join(config_stem(config)));
    let emitted = trace.decimate(decimate);
    let verdict = if trace.is_complete() {
        match verify_trace(&trace) {
            Ok(v) => Some(v),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        }
    } else {
        None
    };
    let manifest = emit_outputs(
        &emitted,
        verdict.as_ref().and_then(|v| v.optimality.as_ref()),
        verdict.as_ref().and_then(|v| v.lyapunov.as_ref()),
        config,
        &dir,
    );
    match manifest {
        Ok(m) => print_manifest(&m),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if let Some(diag) = &trace.diagnostic {
        eprintln!("run truncated: {diag}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

fn print_manifest(m: &RunManifest) {
    println!("law: {}", m.law);
    println!("output: {}", m.output_dir);
    println!(
        "terminal consensus spread: {:.6e} km",
        m.summary.terminal_consensus_spread_km
    );
    if let Some(spread) = m.summary.hit_spread_s {
        println!("hit-time spread: {spread:.6} s");
    }
    println!(
        "predicted common impact time: {:.4} s",
        m.summary.predicted_impact_time_s
    );
    if let Some(j) = m.summary.cost_j {
        println!("cost J: {j:.6}");
    }
    if let Some(flag) = m.summary.lyapunov_monotone {
        println!("Lyapunov monotone: {flag}");
    }
    println!("artifacts: {}", m.artifacts.len());
}

fn cmd_verify(trace_path: &Path, out: Option<PathBuf>) -> ExitCode {
    let trace = match SimTrace::read_json(trace_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let verdict = match verify_trace(&trace) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    println!("cost J: {:.9}", verdict.j);
    if let Some(o) = &verdict.optimality {
        println!("H(tf): {:.3e}", o.h_terminal);
        println!(
            "stationarity residuals: R {:.3e}, V_lambda {:.3e}",
            o.max_stationarity_residual_r, o.max_stationarity_residual_vlambda
        );
        println!(
            "costate ODE residuals: R {:.3e}, V_lambda {:.3e}",
            o.max_costate_ode_residual_r, o.max_costate_ode_residual_vlambda
        );
        println!("convexity: {}", o.convexity_ok);
    }
    if let Some(l) = &verdict.lyapunov {
        println!(
            "Lyapunov: monotone={} max_step_increase={:.3e} bound_violations={}",
            l.monotone, l.max_step_increase, l.bound_violations
        );
    }
    for note in &verdict.notes {
        println!("note: {note}");
    }
    if let Some(path) = out {
        #[derive(serde::Serialize)]
        struct Report<'a> {
            pass: bool,
            j: f64,
            notes: &'a [String],
            optimality: Option<&'a OptimalityReport>,
            lyapunov_monotone: Option<bool>,
        }
        let report = Report {
            pass: verdict.pass,
            j: verdict.j,
            notes: &verdict.notes,
            optimality: verdict.optimality.as_ref(),
            lyapunov_monotone: verdict.lyapunov.as_ref().map(|l| l.monotone),
        };
        match serde_json::to_string_pretty(&report) {
            Ok(body) => {
                if let Err(e) = std::fs::write(&path, body) {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }
    if verdict.pass {
        println!("verification: PASS");
        ExitCode::SUCCESS
    } else {
        println!("verification: FAIL");
        ExitCode::from(3)
    }
}

fn cmd_preset(name: &str, out: Option<PathBuf>) -> ExitCode {
    let cfg = match name {
        "example1" => salvo_core::scenario::example1(),
        "example2" => salvo_core::scenario::example2(),
        other => {
            eprintln!("error: unknown preset '{other}' (expected example1 or example2)");
            return ExitCode::from(1);
        }
    };
    let text = match cfg.to_toml_string() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

fn parse_range(range: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range '{range}' is not start:end:count"));
    }
    let start: f64 = parts[0].parse().map_err(|e| format!("bad start: {e}"))?;
    let end: f64 = parts[1].parse().map_err(|e| format!("bad end: {e}"))?;
    let count: usize = parts[2].parse().map_err(|e| format!("bad count: {e}"))?;
    if count == 0 {
        return Err("count must be positive".into());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
        .collect())
}

fn apply_param(cfg: &ScenarioConfig, param: &str, value: f64) -> Result<ScenarioConfig, String> {
    let mut c = cfg.clone();
    match param {
        "p1" => {
            for w in &mut c.guidance.p1 {
                *w = value;
            }
        }
        "p2" => {
            for w in &mut c.guidance.p2 {
                *w = value;
            }
        }
        "segments" => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(format!("segments value {value} is not a positive integer"));
            }
            c.guidance.law = LawMode::Piecewise;
            c.guidance.segments = value as usize;
        }
        "dt" => {
            c.time.dt_s = value;
        }
        other => return Err(format!("unknown sweep parameter '{other}'")),
    }
    Ok(c)
}

fn cmd_sweep(config: &str, param: &str, range: &str, out: Option<PathBuf>) -> ExitCode {
    let cfg = match ScenarioConfig::from_preset_or_path(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let values = match parse_range(range) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let root = out.unwrap_or_else(|| output_root().join(format!("sweep_{param}")));
    if let Err(e) = std::fs::create_dir_all(&root) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let results: Vec<(f64, String)> = values
        .par_iter()
        .map(|&value| {
            let line = (|| -> Result<String, String> {
                let c = apply_param(&cfg, param, value)?;
                c.validate().map_err(|e| e.to_string())?;
                let trace = run_scenario(&c).map_err(|e| e.to_string())?;
                let dir = root.join(format!("{param}_{value}"));
                let verdict = if trace.is_complete() {
                    verify_trace(&trace).ok()
                } else {
                    None
                };
                emit_outputs(
                    &trace,
                    verdict.as_ref().and_then(|v| v.optimality.as_ref()),
                    verdict.as_ref().and_then(|v| v.lyapunov.as_ref()),
                    config,
                    &dir,
                )
                .map_err(|e| e.to_string())?;
                let spread = terminal_consensus_spread(&trace);
                let j = verdict.as_ref().map(|v| v.j);
                Ok(format!(
                    "{value},{},{spread},{},{}",
                    trace.is_complete(),
                    j.map_or(String::from(""), |j| format!("{j}")),
                    trace.diagnostic.clone().unwrap_or_default()
                ))
            })();
            match line {
                Ok(l) => (value, l),
                Err(e) => (value, format!("{value},false,,,{e}")),
            }
        })
        .collect();
    let mut csv = String::from("value,complete,terminal_spread_km,cost_j,diagnostic\n");
    let mut sorted = results;
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (_, line) in &sorted {
        csv.push_str(line);
        csv.push('\n');
    }
    let summary_path = root.join("sweep_summary.csv");
    if let Err(e) = std::fs::write(&summary_path, csv) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    println!("sweep summary: {}", summary_path.display());
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            decimate,
        } => cmd_run(&config, out, decimate.max(1)),
        Command::Verify { trace, out } => cmd_verify(&trace, out),
        Command::Preset { name, out } => cmd_preset(&name, out),
        Command::Sweep {
            config,
            param,
            range,
            out,
        } => cmd_sweep(&config, &param, &range, out),
    }
}
