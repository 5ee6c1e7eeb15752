//! Domain types shared by every stage of the simulator.
//!
//! Agents are addressed `0..n`. Positions `(x, y)` are continuous in time;
//! the auxiliary controller states `(theta_x, theta_y)` only jump at update
//! instants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar coordinate axis. The two axes evolve independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X, Axis::Y];
}

/// Physical position and auxiliary controller state of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub theta_x: f64,
    pub theta_y: f64,
}

impl AgentState {
    /// Agent at rest at `(x, y)`: auxiliary state equal to position.
    pub fn at_rest(x: f64, y: f64) -> Self {
        AgentState { x, y, theta_x: x, theta_y: y }
    }

    /// `(position, auxiliary)` pair along one axis.
    pub fn axis(&self, axis: Axis) -> (f64, f64) {
        match axis {
            Axis::X => (self.x, self.theta_x),
            Axis::Y => (self.y, self.theta_y),
        }
    }

    pub fn set_axis(&mut self, axis: Axis, position: f64, auxiliary: f64) {
        match axis {
            Axis::X => {
                self.x = position;
                self.theta_x = auxiliary;
            }
            Axis::Y => {
                self.y = position;
                self.theta_y = auxiliary;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta_x.is_finite() && self.theta_y.is_finite()
    }
}

/// Desired displacement of every agent from the formation centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationSpec {
    pub displacements: Vec<[f64; 2]>,
}

impl FormationSpec {
    pub fn new(displacements: Vec<[f64; 2]>) -> Result<Self> {
        let spec = FormationSpec { displacements };
        spec.validate()?;
        Ok(spec)
    }

    /// Regular polygon with `n` vertices on a circle of the given radius,
    /// first vertex on the positive x-axis.
    pub fn regular_polygon(n: usize, radius: f64) -> Result<Self> {
        let displacements = (0..n)
            .map(|i| {
                let angle = std::f64::consts::TAU * i as f64 / n as f64;
                [radius * angle.cos(), radius * angle.sin()]
            })
            .collect();
        Self::new(displacements)
    }

    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    pub fn displacement(&self, agent: usize, axis: Axis) -> f64 {
        let d = self.displacements[agent];
        match axis {
            Axis::X => d[0],
            Axis::Y => d[1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.displacements.len() < 2 {
            return Err(Error::config(
                "formation.displacements",
                format!("need at least 2 agents, got {}", self.displacements.len()),
            ));
        }
        for (i, d) in self.displacements.iter().enumerate() {
            if !(d[0].is_finite() && d[1].is_finite()) {
                return Err(Error::config(format!("formation.displacements[{i}]"), "entries must be finite"));
            }
        }
        Ok(())
    }
}

/// Controller gains of one agent, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentGains {
    pub a_x: f64,
    pub a_y: f64,
    pub b_x: f64,
    pub b_y: f64,
}

impl AgentGains {
    pub fn uniform(a: f64, b: f64) -> Self {
        AgentGains { a_x: a, a_y: a, b_x: b, b_y: b }
    }

    /// `(a, b)` along one axis.
    pub fn axis(&self, axis: Axis) -> (f64, f64) {
        match axis {
            Axis::X => (self.a_x, self.b_x),
            Axis::Y => (self.a_y, self.b_y),
        }
    }
}

/// Time-invariant controller parameters of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlParams {
    /// Anti-stubbornness parameter, shared by the whole network.
    pub sigma: f64,
    pub gains: Vec<AgentGains>,
}

impl ControlParams {
    pub fn uniform(n: usize, a: f64, b: f64, sigma: f64) -> Self {
        ControlParams { sigma, gains: vec![AgentGains::uniform(a, b); n] }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::config(
                "params.sigma",
                format!("must lie in the open interval (0, 1), got {}", self.sigma),
            ));
        }
        if self.gains.len() != n {
            return Err(Error::config("params.gains", format!("expected {n} entries, got {}", self.gains.len())));
        }
        for (i, g) in self.gains.iter().enumerate() {
            for (name, v) in [("a_x", g.a_x), ("a_y", g.a_y), ("b_x", g.b_x), ("b_y", g.b_y)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(
                        format!("params.gains[{i}].{name}"),
                        format!("must be strictly positive and finite, got {v}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A directed link `from -> to` carrying the raw fading coefficient
/// measured at the receiver `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub xi: f64,
}

/// Everything random about one update round: interval length, topology and
/// fading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRealization {
    pub k: usize,
    pub n: usize,
    /// `t_{k+1} - t_k` in seconds.
    pub delta: f64,
    /// Sorted by `(to, from)` so each receiver's in-neighbors are contiguous.
    pub links: Vec<Link>,
}

impl RoundRealization {
    pub fn new(k: usize, n: usize, delta: f64, mut links: Vec<Link>) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::NonPositiveParameter { name: "delta", value: delta });
        }
        links.sort_by_key(|l| (l.to, l.from));
        for (idx, l) in links.iter().enumerate() {
            if l.from >= n || l.to >= n {
                return Err(Error::IndexOutOfRange { index: l.from.max(l.to), n });
            }
            if l.from == l.to {
                return Err(Error::config(format!("links[{idx}]"), "self-loops are not allowed"));
            }
            if !(l.xi > 0.0 && l.xi.is_finite()) {
                return Err(Error::NonPositiveCoefficient { index: idx, value: l.xi });
            }
            if idx > 0 && links[idx - 1].to == l.to && links[idx - 1].from == l.from {
                return Err(Error::config(format!("links[{idx}]"), "duplicate arc"));
            }
        }
        Ok(RoundRealization { k, n, delta, links })
    }

    /// Links received by `receiver`.
    pub fn incoming(&self, receiver: usize) -> &[Link] {
        let start = self.links.partition_point(|l| l.to < receiver);
        let end = self.links.partition_point(|l| l.to <= receiver);
        &self.links[start..end]
    }

    pub fn in_degree(&self, receiver: usize) -> usize {
        self.incoming(receiver).len()
    }

    /// Arcs as `(from, to)` pairs.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().map(|l| (l.from, l.to))
    }
}

/// Tilde (displacement-compensated) coordinates of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeState {
    pub x: f64,
    pub theta_x: f64,
    pub y: f64,
    pub theta_y: f64,
}

/// Subtracts the agent's displacement from both its position and auxiliary
/// state.
pub fn tilde_state(state: &AgentState, spec: &FormationSpec, agent: usize) -> Result<TildeState> {
    let [dx, dy] = *spec.displacements.get(agent).ok_or(Error::IndexOutOfRange { index: agent, n: spec.len() })?;
    Ok(TildeState { x: state.x - dx, theta_x: state.theta_x - dx, y: state.y - dy, theta_y: state.theta_y - dy })
}

/// Inverse of [`tilde_state`].
pub fn untilde_state(tilde: &TildeState, spec: &FormationSpec, agent: usize) -> Result<AgentState> {
    let [dx, dy] = *spec.displacements.get(agent).ok_or(Error::IndexOutOfRange { index: agent, n: spec.len() })?;
    Ok(AgentState { x: tilde.x + dx, y: tilde.y + dy, theta_x: tilde.theta_x + dx, theta_y: tilde.theta_y + dy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaBounds {
    pub min: f64,
    pub max: f64,
}

/// Distribution of the raw fading coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FadingDistribution {
    /// Uniform on `[lo, hi)`; draws at or below [`FADING_FLOOR`] are rejected.
    Uniform { lo: f64, hi: f64 },
}

/// Draws at or below this value are rejected so every coefficient is
/// strictly positive.
pub const FADING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyMode {
    /// Same arc set every round. Arcs are `(from, to)` pairs. Receivers
    /// without in-neighbors hold their auxiliary state.
    Fixed { arcs: Vec<(usize, usize)> },
    /// Random Hamiltonian cycle plus independent extra arcs.
    RandomStronglyConnected { extra_arc_probability: f64 },
}

/// How the initial agent states are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Explicit {
        states: Vec<AgentState>,
    },
    /// Positions uniform in `[lo, hi)^2`, auxiliary state equal to position.
    UniformBox {
        lo: f64,
        hi: f64,
    },
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub seed: u64,
    pub max_rounds: usize,
    /// Formation error (meters) below which a run counts as converged.
    pub convergence_tol: f64,
    /// Trajectory samples per round.
    pub sample_rate: usize,
    /// Recompute each round in matrix form and compare against the agent-wise
    /// step.
    #[serde(default)]
    pub shadow_check: bool,
    pub formation: FormationSpec,
    pub params: ControlParams,
    pub delta_bounds: DeltaBounds,
    pub fading: FadingDistribution,
    pub topology: TopologyMode,
    pub initial: InitialCondition,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config("n", format!("need at least 2 agents, got {}", self.n)));
        }
        self.formation.validate()?;
        if self.formation.len() != self.n {
            return Err(Error::config(
                "formation.displacements",
                format!("expected {} entries, got {}", self.n, self.formation.len()),
            ));
        }
        self.params.validate(self.n)?;

        let DeltaBounds { min, max } = self.delta_bounds;
        if !(min > 0.0 && min.is_finite()) {
            return Err(Error::config("delta_bounds.min", format!("must be positive, got {min}")));
        }
        if !(max >= min && max.is_finite()) {
            return Err(Error::config(
                "delta_bounds.max",
                format!("must be finite and at least min = {min}, got {max}"),
            ));
        }

        match self.fading {
            FadingDistribution::Uniform { lo, hi } => {
                if !(lo >= 0.0 && lo.is_finite()) {
                    return Err(Error::config("fading.lo", format!("must be nonnegative, got {lo}")));
                }
                if !(hi > lo && hi.is_finite()) {
                    return Err(Error::config("fading.hi", format!("must exceed lo = {lo}, got {hi}")));
                }
                if hi <= FADING_FLOOR {
                    return Err(Error::config("fading.hi", format!("must exceed {FADING_FLOOR:e}")));
                }
            }
        }

        match &self.topology {
            TopologyMode::Fixed { arcs } => {
                for (idx, &(from, to)) in arcs.iter().enumerate() {
                    if from >= self.n || to >= self.n {
                        return Err(Error::config(
                            format!("topology.arcs[{idx}]"),
                            format!("node index out of range for n = {}", self.n),
                        ));
                    }
                    if from == to {
                        return Err(Error::config(format!("topology.arcs[{idx}]"), "self-loops are not allowed"));
                    }
                }
            }
            TopologyMode::RandomStronglyConnected { extra_arc_probability: p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::config(
                        "topology.extra_arc_probability",
                        format!("must lie in [0, 1], got {p}"),
                    ));
                }
            }
        }

        match &self.initial {
            InitialCondition::Explicit { states } => {
                if states.len() != self.n {
                    return Err(Error::config(
                        "initial.states",
                        format!("expected {} entries, got {}", self.n, states.len()),
                    ));
                }
                if let Some(i) = states.iter().position(|s| !s.is_finite()) {
                    return Err(Error::config(format!("initial.states[{i}]"), "entries must be finite"));
                }
            }
            InitialCondition::UniformBox { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return Err(Error::config("initial", format!("need finite lo < hi, got [{lo}, {hi})")));
                }
            }
        }

        if !(self.convergence_tol > 0.0 && self.convergence_tol.is_finite()) {
            return Err(Error::config(
                "convergence_tol",
                format!("must be strictly positive, got {}", self.convergence_tol),
            ));
        }
        if self.sample_rate == 0 {
            return Err(Error::config("sample_rate", "must be at least 1"));
        }
        Ok(())
    }
}
