//! Consensus-based formation control for planar single-integrator agents
//! that communicate by simultaneous broadcasts over a fading multiple access
//! channel.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: agents, formations, parameters and round realizations
//! * [`channel`]: superposition channel, three-signal broadcast, normalization
//! * [`topology`]: digraphs, strong connectivity, seeded per-round sampling
//! * [`dynamics`]: update map, closed-form flow and the stacked operators
//! * [`analysis`]: irreducibility/primitivity certificates, product limits
//! * [`engine`]: the simulation loop and transmission accounting

pub mod analysis;
pub mod channel;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod model;
pub mod topology;

pub use analysis::{certify, formation_error, product_limit, ConsensusLimit, MatrixCertificate};
pub use channel::{build_h_matrix, normalized_receive, wmac_receive, BroadcastSignals, NormalizedFadingMatrix};
pub use dynamics::{
    agent_transition, apply_update, build_operator, propagate, propagate_interval, step_matrix_form, AgentTransition,
    MissingNeighbors, TransitionOperator,
};
pub use engine::{account_costs, run, run_with, CostReport, RoundSummary, RunOutput, Sample, SimTrace};
pub use error::{Error, Result};
pub use model::{
    tilde_state, untilde_state, AgentGains, AgentState, Axis, ControlParams, DeltaBounds, FadingDistribution,
    FormationSpec, InitialCondition, Link, RoundRealization, SimConfig, TildeState, TopologyMode,
};
pub use topology::{
    is_strongly_connected, random_strongly_connected, sample_round, Digraph, RoundSampler, RoundSource,
};
