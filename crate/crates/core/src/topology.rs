//! Directed communication graphs and per-round random draws.
//!
//! All randomness is derived from one master seed. Each round and purpose
//! (topology, fading, interval length) gets its own ChaCha stream seeded by
//! `SHA-256(seed, k, tag)`, so a round can be regenerated in isolation.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{FadingDistribution, Link, RoundRealization, SimConfig, TopologyMode, FADING_FLOOR};

/// Directed graph without self-loops. Arcs are `(from, to)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    pub n: usize,
    pub arcs: BTreeSet<(usize, usize)>,
}

impl Digraph {
    pub fn new(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let arcs: BTreeSet<_> = arcs.into_iter().collect();
        for &(from, to) in &arcs {
            if from >= n || to >= n {
                return Err(Error::IndexOutOfRange { index: from.max(to), n });
            }
            if from == to {
                return Err(Error::InvalidConfig {
                    field: format!("arc ({from}, {to})"),
                    reason: "self-loops are not allowed".into(),
                });
            }
        }
        Ok(Digraph { n, arcs })
    }

    pub fn from_round(round: &RoundRealization) -> Self {
        Digraph { n: round.n, arcs: round.arcs().collect() }
    }

    /// Number of in-neighbors of every node.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(_, to) in &self.arcs {
            deg[to] += 1;
        }
        deg
    }

    fn adjacency(&self, reversed: bool) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(from, to) in &self.arcs {
            if reversed {
                adj[to].push(from);
            } else {
                adj[from].push(to);
            }
        }
        adj
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == adj.len()
}

/// Every ordered node pair is joined by a directed path.
///
/// Node 0 must reach everything in the graph and in its reverse.
pub fn is_strongly_connected(g: &Digraph) -> bool {
    if g.n <= 1 {
        return true;
    }
    reaches_all(&g.adjacency(false)) && reaches_all(&g.adjacency(true))
}

/// Random Hamiltonian cycle over a shuffled node order, plus each remaining
/// ordered pair with probability `extra_arc_probability`.
pub fn random_strongly_connected<R: Rng + ?Sized>(
    n: usize,
    extra_arc_probability: f64,
    rng: &mut R,
) -> Result<Digraph> {
    if n < 2 {
        return Err(Error::TooFewAgents(n));
    }
    if !(0.0..=1.0).contains(&extra_arc_probability) {
        return Err(Error::InvalidConfig {
            field: "extra_arc_probability".into(),
            reason: format!("must lie in [0, 1], got {extra_arc_probability}"),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut arcs: BTreeSet<(usize, usize)> = (0..n).map(|q| (order[q], order[(q + 1) % n])).collect();
    for from in 0..n {
        for to in 0..n {
            if from == to {
                continue;
            }
            // always draw so the stream position does not depend on the cycle
            let draw: f64 = rng.random();
            if draw < extra_arc_probability {
                arcs.insert((from, to));
            }
        }
    }
    Ok(Digraph { n, arcs })
}

/// Purpose tags for per-round random substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology,
    Fading,
    Delta,
    Initial,
}

impl Stream {
    fn tag(self) -> &'static [u8] {
        match self {
            Stream::Topology => b"topology",
            Stream::Fading => b"fading",
            Stream::Delta => b"delta",
            Stream::Initial => b"initial",
        }
    }
}

/// ChaCha stream for `(seed, k, purpose)`.
pub fn substream(seed: u64, k: u64, purpose: Stream) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(k.to_le_bytes());
    hasher.update(purpose.tag());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Draw from the fading distribution, rejecting values at or below
/// [`FADING_FLOOR`].
pub fn sample_fading<R: Rng + ?Sized>(dist: &FadingDistribution, rng: &mut R) -> f64 {
    match *dist {
        FadingDistribution::Uniform { lo, hi } => loop {
            let v = rng.random_range(lo..hi);
            if v > FADING_FLOOR {
                return v;
            }
        },
    }
}

/// Topology, fading coefficients and interval length for round `k`.
pub fn sample_round(config: &SimConfig, k: usize) -> Result<RoundRealization> {
    let n = config.n;
    let graph = match &config.topology {
        TopologyMode::Fixed { arcs } => Digraph::new(n, arcs.iter().copied())?,
        TopologyMode::RandomStronglyConnected { extra_arc_probability } => {
            let mut rng = substream(config.seed, k as u64, Stream::Topology);
            random_strongly_connected(n, *extra_arc_probability, &mut rng)?
        }
    };

    let mut fading_rng = substream(config.seed, k as u64, Stream::Fading);
    let mut links: Vec<Link> = graph.arcs.iter().map(|&(from, to)| Link { from, to, xi: 0.0 }).collect();
    links.sort_by_key(|l| (l.to, l.from));
    for l in &mut links {
        l.xi = sample_fading(&config.fading, &mut fading_rng);
    }

    let bounds = config.delta_bounds;
    let delta = if bounds.min == bounds.max {
        bounds.min
    } else {
        substream(config.seed, k as u64, Stream::Delta).random_range(bounds.min..=bounds.max)
    };

    RoundRealization::new(k, n, delta, links)
}

/// Source of round realizations for the simulation loop.
pub trait RoundSource {
    fn round(&mut self, k: usize) -> Result<RoundRealization>;
}

/// Draws rounds from a config's seed.
#[derive(Debug, Clone)]
pub struct RoundSampler<'a> {
    config: &'a SimConfig,
}

impl<'a> RoundSampler<'a> {
    pub fn new(config: &'a SimConfig) -> Self {
        RoundSampler { config }
    }
}

impl RoundSource for RoundSampler<'_> {
    fn round(&mut self, k: usize) -> Result<RoundRealization> {
        sample_round(self.config, k)
    }
}

impl<F> RoundSource for F
where
    F: FnMut(usize) -> Result<RoundRealization>,
{
    fn round(&mut self, k: usize) -> Result<RoundRealization> {
        self(k)
    }
}
