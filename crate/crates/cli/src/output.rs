//! Run artifacts: `trajectory.csv`, `metrics.json` and the resolved
//! `config.toml`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wmac_formation::engine::{CertificateDigest, RoundCost};
use wmac_formation::{CostReport, Sample, SimConfig, SimTrace};

use crate::config::to_toml_string;
use crate::error::{CliError, Result};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const TRAJECTORY_HEADER: &str = "t,agent,x,y,theta_x,theta_y";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory<W: Write>(mut w: W, samples: &[Sample]) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            format_float(s.t),
            s.agent,
            format_float(s.x),
            format_float(s.y),
            format_float(s.theta_x),
            format_float(s.theta_y)
        )?;
    }
    Ok(())
}

pub fn trajectory_string(samples: &[Sample]) -> String {
    let mut buf = Vec::with_capacity(samples.len() * 128 + 32);
    write_trajectory(&mut buf, samples).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub k: usize,
    pub t_k: f64,
    pub delta: f64,
    pub formation_error: f64,
    pub in_degree_sum: u64,
    pub g_broadcast: u64,
    pub g_orthogonal: u64,
    pub g_broadcast_cumulative: u64,
    pub g_orthogonal_cumulative: u64,
    pub certificates: CertificateDigest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub seed: u64,
    pub convergence_tol: f64,
    pub rounds_executed: usize,
    pub converged: bool,
    pub converged_round: Option<usize>,
    pub consensus_point: Option<[f64; 2]>,
    pub final_formation_error: Option<f64>,
    pub g_broadcast_cumulative: u64,
    pub g_orthogonal_cumulative: u64,
    pub rounds: Vec<RoundMetrics>,
}

impl Metrics {
    pub fn new(trace: &SimTrace, costs: &CostReport, config: &SimConfig) -> Self {
        let rounds = trace
            .rounds
            .iter()
            .zip(&costs.rounds)
            .map(|(r, c): (_, &RoundCost)| RoundMetrics {
                k: r.k,
                t_k: r.t_k,
                delta: r.delta,
                formation_error: r.formation_error,
                in_degree_sum: c.in_degree_sum,
                g_broadcast: c.g_broadcast,
                g_orthogonal: c.g_orthogonal,
                g_broadcast_cumulative: r.g_broadcast_cumulative,
                g_orthogonal_cumulative: r.g_orthogonal_cumulative,
                certificates: r.certificates,
            })
            .collect();
        Metrics {
            n: config.n,
            seed: config.seed,
            convergence_tol: config.convergence_tol,
            rounds_executed: trace.rounds.len(),
            converged: trace.converged(),
            converged_round: trace.converged_round,
            consensus_point: trace.consensus_point,
            final_formation_error: trace.rounds.last().map(|r| r.formation_error),
            g_broadcast_cumulative: costs.total_broadcast,
            g_orthogonal_cumulative: costs.total_orthogonal,
            rounds,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Serialize(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub trajectory: PathBuf,
    pub metrics: PathBuf,
    pub config: PathBuf,
}

/// Writes the three artifacts into `out_dir`, creating it if needed.
pub fn emit_outputs(trace: &SimTrace, costs: &CostReport, config: &SimConfig, out_dir: &Path) -> Result<OutputPaths> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let paths = OutputPaths {
        trajectory: out_dir.join(TRAJECTORY_FILE),
        metrics: out_dir.join(METRICS_FILE),
        config: out_dir.join(CONFIG_FILE),
    };

    let file = std::fs::File::create(&paths.trajectory).map_err(|e| CliError::io(&paths.trajectory, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_trajectory(&mut w, &trace.samples).and_then(|_| w.flush()).map_err(|e| CliError::io(&paths.trajectory, e))?;

    let metrics = Metrics::new(trace, costs, config).to_json()?;
    std::fs::write(&paths.metrics, metrics).map_err(|e| CliError::io(&paths.metrics, e))?;

    let toml = to_toml_string(config)?;
    std::fs::write(&paths.config, toml).map_err(|e| CliError::io(&paths.config, e))?;
    Ok(paths)
}
