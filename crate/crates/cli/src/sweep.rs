//! Multi-seed batches.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wmac_formation::SimConfig;

use crate::error::{CliError, Result};
use crate::output::emit_outputs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub rounds_executed: usize,
    pub converged_round: Option<usize>,
    pub final_formation_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub seeds: usize,
    pub converged: usize,
    pub by_round: usize,
    pub converged_by_round: usize,
    /// `None` when at least half the seeds never converge.
    pub median_converged_round: Option<f64>,
    pub outcomes: Vec<SeedOutcome>,
}

/// Median with non-converged runs ranked last.
pub fn median_round(rounds: &[Option<usize>]) -> Option<f64> {
    if rounds.is_empty() {
        return None;
    }
    let mut sorted: Vec<Option<usize>> = rounds.to_vec();
    sorted.sort_by_key(|r| r.unwrap_or(usize::MAX));
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2].map(|v| v as f64)
    } else {
        match (sorted[m / 2 - 1], sorted[m / 2]) {
            (Some(a), Some(b)) => Some((a + b) as f64 / 2.0),
            _ => None,
        }
    }
}

/// Runs `base` once per seed in parallel. When `out_dir` is given, each run
/// writes into `out_dir/seed-<seed>` and the summary goes to
/// `out_dir/summary.json`.
pub fn run_sweep(base: &SimConfig, seeds: &[u64], by_round: usize, out_dir: Option<&Path>) -> Result<SweepSummary> {
    let outcomes = seeds
        .par_iter()
        .map(|&seed| {
            let mut config = base.clone();
            config.seed = seed;
            let out = wmac_formation::run(&config)?;
            if let Some(dir) = out_dir {
                emit_outputs(&out.trace, &out.costs, &config, &dir.join(format!("seed-{seed}")))?;
            }
            Ok(SeedOutcome {
                seed,
                rounds_executed: out.trace.rounds.len(),
                converged_round: out.trace.converged_round,
                final_formation_error: out.trace.rounds.last().map(|r| r.formation_error),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rounds: Vec<Option<usize>> = outcomes.iter().map(|o| o.converged_round).collect();
    let summary = SweepSummary {
        seeds: seeds.len(),
        converged: rounds.iter().flatten().count(),
        by_round,
        converged_by_round: rounds.iter().flatten().filter(|&&r| r <= by_round).count(),
        median_converged_round: median_round(&rounds),
        outcomes,
    };
    if let Some(dir) = out_dir {
        let path = dir.join("summary.json");
        let mut text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Serialize(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(summary)
}
