//! Noiseless fading multiple access channel and the three-signal broadcast
//! scheme built on it.
//!
//! Every agent broadcasts its displacement-compensated position on two
//! orthogonal channels plus a constant `1` on a third. A receiver sees the
//! fading-weighted superposition of each channel; dividing the position sums
//! by the sum of the constant channel cancels the unknown coefficients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{AgentState, Axis, FormationSpec, RoundRealization};

/// The three values an agent broadcasts at an update instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadcastSignals {
    pub tau_x: f64,
    pub tau_y: f64,
    pub tau_prime: f64,
}

impl BroadcastSignals {
    pub fn new(state: &AgentState, displacement: [f64; 2]) -> Self {
        BroadcastSignals { tau_x: state.x - displacement[0], tau_y: state.y - displacement[1], tau_prime: 1.0 }
    }
}

/// Superposition `sum_j xi_j * omega_j` seen by a single receiver.
pub fn wmac_receive(signals: &[f64], coefficients: &[f64]) -> Result<f64> {
    if signals.is_empty() {
        return Err(Error::Empty("signals"));
    }
    if signals.len() != coefficients.len() {
        return Err(Error::LengthMismatch { expected: signals.len(), found: coefficients.len() });
    }
    if let Some((index, &value)) = coefficients.iter().enumerate().find(|(_, &c)| c.is_nan() || c <= 0.0) {
        return Err(Error::NonPositiveCoefficient { index, value });
    }
    Ok(signals.iter().zip(coefficients).map(|(s, c)| s * c).sum())
}

/// Normalized receptions `(zeta_x, zeta_y)` of `receiver`.
pub fn normalized_receive(
    round: &RoundRealization,
    states: &[AgentState],
    spec: &FormationSpec,
    receiver: usize,
) -> Result<(f64, f64)> {
    if states.len() != round.n || spec.len() != round.n {
        return Err(Error::DimensionMismatch {
            expected: round.n,
            found: if states.len() != round.n { states.len() } else { spec.len() },
        });
    }
    if receiver >= round.n {
        return Err(Error::IndexOutOfRange { index: receiver, n: round.n });
    }
    let incoming = round.incoming(receiver);
    if incoming.is_empty() {
        return Err(Error::NoInNeighbors { receiver, round: round.k });
    }

    let xi: Vec<f64> = incoming.iter().map(|l| l.xi).collect();
    let signals: Vec<BroadcastSignals> =
        incoming.iter().map(|l| BroadcastSignals::new(&states[l.from], spec.displacements[l.from])).collect();
    let channel = |f: fn(&BroadcastSignals) -> f64| -> Result<f64> {
        let values: Vec<f64> = signals.iter().map(f).collect();
        wmac_receive(&values, &xi)
    };

    let nu_x = channel(|s| s.tau_x)?;
    let nu_y = channel(|s| s.tau_y)?;
    let nu_prime = channel(|s| s.tau_prime)?;
    Ok((nu_x / nu_prime, nu_y / nu_prime))
}

/// Row-normalized fading coefficients, `H[i][j] = h_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFadingMatrix(pub DMatrix<f64>);

impl NormalizedFadingMatrix {
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Receivers whose row is zero (no in-neighbors this round).
    pub fn silent_receivers(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.0.row(i).iter().all(|&v| v == 0.0)).collect()
    }

    /// `sum_j h_ij * values[j]`, with `values` indexed by agent.
    pub fn mix(&self, receiver: usize, values: &[f64]) -> f64 {
        self.0.row(receiver).iter().zip(values).map(|(h, v)| h * v).sum()
    }

    /// Tilde positions along one axis, mixed by every row.
    pub fn mix_axis(&self, states: &[AgentState], spec: &FormationSpec, axis: Axis) -> Vec<f64> {
        let values: Vec<f64> =
            states.iter().enumerate().map(|(j, s)| s.axis(axis).0 - spec.displacement(j, axis)).collect();
        (0..self.n()).map(|i| self.mix(i, &values)).collect()
    }
}

pub fn build_h_matrix(round: &RoundRealization) -> NormalizedFadingMatrix {
    let n = round.n;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let incoming = round.incoming(i);
        let total: f64 = incoming.iter().map(|l| l.xi).sum();
        for l in incoming {
            h[(i, l.from)] = l.xi / total;
        }
    }
    NormalizedFadingMatrix(h)
}
