//! Simulation loop and transmission accounting.
//!
//! Each round samples a realization, applies the broadcast update at `t_k`,
//! then flows the closed-form dynamics to `t_{k+1}`, recording trajectory
//! samples along the way.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{certify, formation_centroid, formation_error};
use crate::channel::build_h_matrix;
use crate::dynamics::{apply_update, build_operator, propagate, step_matrix_form, tilde_vector, MissingNeighbors};
use crate::error::{Error, Result};
use crate::model::{AgentState, Axis, InitialCondition, RoundRealization, SimConfig, TopologyMode};
use crate::topology::{substream, RoundSampler, RoundSource, Stream};

/// Signals one broadcast round costs: two position channels and the constant.
pub const BROADCAST_TRANSMISSIONS: u64 = 3;

/// Row-sum tolerance used by the per-round certificates.
pub const CERTIFICATE_TOL: f64 = 1e-12;

/// Tolerance of the matrix-form shadow check, relative to the state scale.
pub const SHADOW_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub agent: usize,
    pub x: f64,
    pub y: f64,
    pub theta_x: f64,
    pub theta_y: f64,
}

impl Sample {
    fn new(t: f64, agent: usize, s: &AgentState) -> Self {
        Sample { t, agent, x: s.x, y: s.y, theta_x: s.theta_x, theta_y: s.theta_y }
    }
}

/// Structural facts about one round's matrices. Operator entries hold for
/// both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateDigest {
    pub adjacency_row_stochastic: bool,
    pub adjacency_irreducible: bool,
    pub flow_row_stochastic: bool,
    pub update_row_stochastic: bool,
    pub omega_row_stochastic: bool,
    pub omega_irreducible: bool,
    pub omega_primitive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub k: usize,
    pub t_k: f64,
    pub delta: f64,
    /// Formation error at `t_{k+1}`.
    pub formation_error: f64,
    pub g_broadcast_cumulative: u64,
    pub g_orthogonal_cumulative: u64,
    pub certificates: CertificateDigest,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimTrace {
    /// Initial snapshot at `t = 0`, then `sample_rate` snapshots per round.
    pub samples: Vec<Sample>,
    pub rounds: Vec<RoundSummary>,
    /// First round whose end-of-round formation error is below tolerance.
    pub converged_round: Option<usize>,
    /// Mean of `p_i - d_i` at the converged round.
    pub consensus_point: Option<[f64; 2]>,
    pub final_states: Vec<AgentState>,
}

impl SimTrace {
    pub fn converged(&self) -> bool {
        self.converged_round.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCost {
    pub k: usize,
    /// `sum_i |N_i(t_k)|`.
    pub in_degree_sum: u64,
    pub g_broadcast: u64,
    /// Point-to-point transmissions an orthogonal access scheme would need.
    pub g_orthogonal: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CostReport {
    pub rounds: Vec<RoundCost>,
    pub total_broadcast: u64,
    pub total_orthogonal: u64,
}

pub fn round_cost(round: &RoundRealization) -> RoundCost {
    let in_degree_sum = round.links.len() as u64;
    RoundCost { k: round.k, in_degree_sum, g_broadcast: BROADCAST_TRANSMISSIONS, g_orthogonal: 2 * in_degree_sum }
}

pub fn account_costs(rounds: &[RoundRealization]) -> CostReport {
    let rounds: Vec<RoundCost> = rounds.iter().map(round_cost).collect();
    CostReport {
        total_broadcast: rounds.iter().map(|r| r.g_broadcast).sum(),
        total_orthogonal: rounds.iter().map(|r| r.g_orthogonal).sum(),
        rounds,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: SimTrace,
    pub costs: CostReport,
    pub realizations: Vec<RoundRealization>,
}

pub fn initial_states(config: &SimConfig) -> Vec<AgentState> {
    match &config.initial {
        InitialCondition::Explicit { states } => states.clone(),
        InitialCondition::UniformBox { lo, hi } => {
            let mut rng = substream(config.seed, 0, Stream::Initial);
            (0..config.n)
                .map(|_| {
                    let x = rng.random_range(*lo..*hi);
                    let y = rng.random_range(*lo..*hi);
                    AgentState::at_rest(x, y)
                })
                .collect()
        }
    }
}

pub fn run(config: &SimConfig) -> Result<RunOutput> {
    run_with(config, &mut RoundSampler::new(config))
}

/// Runs the loop with rounds drawn from `source` instead of the config seed.
pub fn run_with<S: RoundSource + ?Sized>(config: &SimConfig, source: &mut S) -> Result<RunOutput> {
    config.validate()?;
    let policy = match config.topology {
        TopologyMode::Fixed { .. } => MissingNeighbors::Hold,
        TopologyMode::RandomStronglyConnected { .. } => MissingNeighbors::Reject,
    };
    let spec = &config.formation;
    let params = &config.params;

    let mut states = initial_states(config);
    let mut trace = SimTrace::default();
    let mut realizations = Vec::new();
    let mut costs = CostReport::default();
    let mut t = 0.0;

    trace.samples.extend(states.iter().enumerate().map(|(i, s)| Sample::new(t, i, s)));

    for k in 0..config.max_rounds {
        let round = source.round(k)?;
        if round.n != config.n {
            return Err(Error::DimensionMismatch { expected: config.n, found: round.n });
        }

        let updated = apply_update(&states, &round, spec, params.sigma, policy)?;
        for m in 1..=config.sample_rate {
            let offset =
                if m == config.sample_rate { round.delta } else { round.delta * m as f64 / config.sample_rate as f64 };
            let snapshot = propagate(&updated, params, offset)?;
            let ts = t + offset;
            trace.samples.extend(snapshot.iter().enumerate().map(|(i, s)| Sample::new(ts, i, s)));
        }
        let next = propagate(&updated, params, round.delta)?;

        let h = build_h_matrix(&round);
        let adjacency = certify(h.matrix(), CERTIFICATE_TOL)?;
        let mut digest = CertificateDigest {
            adjacency_row_stochastic: adjacency.row_stochastic,
            adjacency_irreducible: adjacency.irreducible,
            flow_row_stochastic: true,
            update_row_stochastic: true,
            omega_row_stochastic: true,
            omega_irreducible: true,
            omega_primitive: true,
        };
        for axis in Axis::BOTH {
            let op = build_operator(&round, params, &h, axis)?;
            let phi = certify(&op.phi, CERTIFICATE_TOL)?;
            let d = certify(&op.d, CERTIFICATE_TOL)?;
            let omega = certify(&op.omega, CERTIFICATE_TOL)?;
            digest.flow_row_stochastic &= phi.row_stochastic;
            digest.update_row_stochastic &= d.row_stochastic;
            digest.omega_row_stochastic &= omega.row_stochastic;
            digest.omega_irreducible &= omega.irreducible;
            digest.omega_primitive &= omega.primitive;

            if config.shadow_check {
                let before = tilde_vector(&states, spec, axis);
                let predicted = step_matrix_form(&before, &op)?;
                let actual = tilde_vector(&next, spec, axis);
                let scale = before.amax().max(1.0);
                let deviation = (&predicted - &actual).amax();
                if deviation > SHADOW_TOL * scale {
                    return Err(Error::ShadowMismatch { round: k, deviation });
                }
            }
        }

        let cost = round_cost(&round);
        costs.total_broadcast += cost.g_broadcast;
        costs.total_orthogonal += cost.g_orthogonal;
        costs.rounds.push(cost);

        let error = formation_error(&next, spec);
        trace.rounds.push(RoundSummary {
            k,
            t_k: t,
            delta: round.delta,
            formation_error: error,
            g_broadcast_cumulative: costs.total_broadcast,
            g_orthogonal_cumulative: costs.total_orthogonal,
            certificates: digest,
        });
        realizations.push(round);
        t += trace.rounds[k].delta;
        states = next;

        if error < config.convergence_tol {
            trace.converged_round = Some(k);
            trace.consensus_point = Some(formation_centroid(&states, spec));
            break;
        }
    }

    trace.final_states = states;
    Ok(RunOutput { trace, costs, realizations })
}
