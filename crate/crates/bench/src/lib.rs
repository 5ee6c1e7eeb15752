//! Fixtures shared by the benchmarks.

use wmac_formation::{ControlParams, Link, RoundRealization, SimConfig};

/// Fully connected round on `n` agents with deterministic fading.
pub fn dense_round(n: usize, delta: f64) -> RoundRealization {
    let links = (0..n)
        .flat_map(|to| (0..n).filter(move |&from| from != to).map(move |from| (from, to)))
        .map(|(from, to)| Link { from, to, xi: 0.1 + ((from * 7 + to * 3) % 10) as f64 / 10.0 })
        .collect();
    RoundRealization::new(0, n, delta, links).expect("valid round")
}

pub fn uniform_params(n: usize) -> ControlParams {
    ControlParams::uniform(n, 0.5, 0.5, 0.8)
}

pub fn hexagon6(seed: u64) -> SimConfig {
    wmac_formation_cli::hexagon6(seed)
}
