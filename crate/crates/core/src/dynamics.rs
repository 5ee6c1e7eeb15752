//! Hybrid control law: discrete update of the auxiliary state at each
//! broadcast instant and exact exponential relaxation between instants.
//!
//! Between updates every axis of agent `i` follows
//!
//! ```text
//! dx/dt     = -a (x - theta)
//! dtheta/dt =  b (x - theta)
//! ```
//!
//! whose flow over `dt` is a positive row-stochastic 2x2 matrix. Stacking the
//! per-agent flows and the update gives the `2n x 2n` operators `Phi`, `D`
//! and `Omega = Phi * D` acting on `[x~_1..x~_n, theta~_1..theta~_n]`.

use nalgebra::{DMatrix, DVector};

use crate::channel::{normalized_receive, NormalizedFadingMatrix};
use crate::error::{Error, Result};
use crate::model::{AgentState, Axis, ControlParams, FormationSpec, RoundRealization};

/// Closed-form flow of one agent along one axis over a fixed duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentTransition {
    pub phi_a: f64,
    pub phi_b: f64,
    pub phi_c: f64,
    pub phi_d: f64,
}

impl AgentTransition {
    /// `(position, auxiliary)` after the flow.
    #[inline]
    pub fn apply(&self, position: f64, auxiliary: f64) -> (f64, f64) {
        (self.phi_a * position + self.phi_b * auxiliary, self.phi_c * position + self.phi_d * auxiliary)
    }
}

pub fn agent_transition(a: f64, b: f64, dt: f64) -> Result<AgentTransition> {
    for (name, value) in [("a", a), ("b", b), ("dt", dt)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveParameter { name, value });
        }
    }
    let rate = a + b;
    let decay = (-rate * dt).exp();
    // 1 - e^{-z} without cancellation for short intervals
    let relaxed = -(-rate * dt).exp_m1();
    Ok(AgentTransition {
        phi_a: (a * decay + b) / rate,
        phi_b: a * relaxed / rate,
        phi_c: b * relaxed / rate,
        phi_d: (b * decay + a) / rate,
    })
}

/// What to do with a receiver that hears nobody in a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingNeighbors {
    #[default]
    Reject,
    /// Skip the update and keep the auxiliary state.
    Hold,
}

/// Discrete update at a broadcast instant. Positions are untouched.
pub fn apply_update(
    states: &[AgentState],
    round: &RoundRealization,
    spec: &FormationSpec,
    sigma: f64,
    policy: MissingNeighbors,
) -> Result<Vec<AgentState>> {
    if states.len() != round.n {
        return Err(Error::DimensionMismatch { expected: round.n, found: states.len() });
    }
    let mut next = states.to_vec();
    for (i, state) in next.iter_mut().enumerate() {
        let (zeta_x, zeta_y) = match normalized_receive(round, states, spec, i) {
            Ok(z) => z,
            Err(Error::NoInNeighbors { .. }) if policy == MissingNeighbors::Hold => continue,
            Err(e) => return Err(e),
        };
        let [dx, dy] = spec.displacements[i];
        state.theta_x = (1.0 - sigma) * state.theta_x + sigma * dx + sigma * zeta_x;
        state.theta_y = (1.0 - sigma) * state.theta_y + sigma * dy + sigma * zeta_y;
    }
    Ok(next)
}

/// Flow every agent forward by `offset` seconds.
pub fn propagate(states: &[AgentState], params: &ControlParams, offset: f64) -> Result<Vec<AgentState>> {
    if params.gains.len() != states.len() {
        return Err(Error::DimensionMismatch { expected: states.len(), found: params.gains.len() });
    }
    states
        .iter()
        .zip(&params.gains)
        .map(|(s, g)| {
            let mut out = *s;
            for axis in Axis::BOTH {
                let (a, b) = g.axis(axis);
                let (p, q) = s.axis(axis);
                let (p, q) = agent_transition(a, b, offset)?.apply(p, q);
                out.set_axis(axis, p, q);
            }
            Ok(out)
        })
        .collect()
}

/// Snapshots of the post-update state at each offset in `(0, dt]`.
pub fn propagate_interval(
    states: &[AgentState],
    params: &ControlParams,
    dt: f64,
    offsets: &[f64],
) -> Result<Vec<Vec<AgentState>>> {
    offsets
        .iter()
        .map(|&offset| {
            if !(offset > 0.0 && offset <= dt) {
                return Err(Error::SampleOffsetOutOfRange { offset, dt });
            }
            propagate(states, params, offset)
        })
        .collect()
}

/// Stacked tilde vector `[x~_1..x~_n, theta~_1..theta~_n]` along one axis.
pub fn tilde_vector(states: &[AgentState], spec: &FormationSpec, axis: Axis) -> DVector<f64> {
    let n = states.len();
    DVector::from_fn(2 * n, |r, _| {
        let i = r % n;
        let (p, q) = states[i].axis(axis);
        let d = spec.displacement(i, axis);
        if r < n {
            p - d
        } else {
            q - d
        }
    })
}

/// Flow, update and one-round operator of the stacked system along an axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOperator {
    pub axis: Axis,
    pub phi: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub omega: DMatrix<f64>,
}

impl TransitionOperator {
    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }
}

/// Block-diagonal flow matrix `Phi` from per-agent transitions.
pub fn flow_matrix(transitions: &[AgentTransition]) -> DMatrix<f64> {
    let n = transitions.len();
    let mut phi = DMatrix::zeros(2 * n, 2 * n);
    for (i, t) in transitions.iter().enumerate() {
        phi[(i, i)] = t.phi_a;
        phi[(i, n + i)] = t.phi_b;
        phi[(n + i, i)] = t.phi_c;
        phi[(n + i, n + i)] = t.phi_d;
    }
    phi
}

/// Update matrix `D = [[I, 0], [sigma H, (1 - sigma) I]]`.
///
/// Rows of silent receivers keep their auxiliary state, which matches
/// [`MissingNeighbors::Hold`].
pub fn update_matrix(h: &NormalizedFadingMatrix, sigma: f64) -> DMatrix<f64> {
    let n = h.n();
    let silent = h.silent_receivers();
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        d[(i, i)] = 1.0;
        if silent.contains(&i) {
            d[(n + i, n + i)] = 1.0;
            continue;
        }
        for j in 0..n {
            d[(n + i, j)] = sigma * h.0[(i, j)];
        }
        d[(n + i, n + i)] = 1.0 - sigma;
    }
    d
}

/// `Omega` assembled directly from its blocks, without a generic product:
///
/// ```text
/// [[Phi_a + sigma Phi_b H, (1 - sigma) Phi_b],
///  [Phi_c + sigma Phi_d H, (1 - sigma) Phi_d]]
/// ```
pub fn omega_from_blocks(transitions: &[AgentTransition], h: &NormalizedFadingMatrix, sigma: f64) -> DMatrix<f64> {
    let n = transitions.len();
    let silent = h.silent_receivers();
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for (i, t) in transitions.iter().enumerate() {
        let (mix, keep) = if silent.contains(&i) { (0.0, 1.0) } else { (sigma, 1.0 - sigma) };
        for j in 0..n {
            omega[(i, j)] = t.phi_b * mix * h.0[(i, j)];
            omega[(n + i, j)] = t.phi_d * mix * h.0[(i, j)];
        }
        omega[(i, i)] += t.phi_a;
        omega[(n + i, i)] += t.phi_c;
        omega[(i, n + i)] = keep * t.phi_b;
        omega[(n + i, n + i)] = keep * t.phi_d;
    }
    omega
}

pub fn axis_transitions(params: &ControlParams, axis: Axis, dt: f64) -> Result<Vec<AgentTransition>> {
    params
        .gains
        .iter()
        .map(|g| {
            let (a, b) = g.axis(axis);
            agent_transition(a, b, dt)
        })
        .collect()
}

pub fn build_operator(
    round: &RoundRealization,
    params: &ControlParams,
    h: &NormalizedFadingMatrix,
    axis: Axis,
) -> Result<TransitionOperator> {
    if round.n < 2 {
        return Err(Error::TooFewAgents(round.n));
    }
    if h.n() != round.n {
        return Err(Error::DimensionMismatch { expected: round.n, found: h.n() });
    }
    if params.gains.len() != round.n {
        return Err(Error::DimensionMismatch { expected: round.n, found: params.gains.len() });
    }
    let transitions = axis_transitions(params, axis, round.delta)?;
    let phi = flow_matrix(&transitions);
    let d = update_matrix(h, params.sigma);
    let omega = &phi * &d;
    Ok(TransitionOperator { axis, phi, d, omega })
}

/// One round in matrix form: `Omega * x~(t_k)`.
pub fn step_matrix_form(tilde: &DVector<f64>, op: &TransitionOperator) -> Result<DVector<f64>> {
    if tilde.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: tilde.len() });
    }
    Ok(&op.omega * tilde)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_h_matrix;
    use crate::model::Link;
    use proptest::prelude::*;

    fn mutual_pair(xi01: f64, xi10: f64) -> RoundRealization {
        RoundRealization::new(0, 2, 15.0, vec![Link { from: 0, to: 1, xi: xi01 }, Link { from: 1, to: 0, xi: xi10 }])
            .unwrap()
    }

    #[test]
    fn symmetric_gains_give_symmetric_transition() {
        let t = agent_transition(0.7, 0.7, 3.3).unwrap();
        assert_eq!(t.phi_a, t.phi_d);
        assert_eq!(t.phi_b, t.phi_c);
    }

    #[test]
    fn vanishing_interval_is_identity() {
        let t = agent_transition(0.5, 2.0, 1e-12).unwrap();
        assert!((t.phi_a - 1.0).abs() < 1e-9 && (t.phi_d - 1.0).abs() < 1e-9);
        assert!(t.phi_b.abs() < 1e-9 && t.phi_c.abs() < 1e-9);
        assert!(t.phi_b > 0.0 && t.phi_c > 0.0);
    }

    #[test]
    fn transitions_are_positive_row_stochastic() {
        for (a, b, dt) in [(0.05, 5.0, 30.0), (5.0, 5.0, 30.0), (0.5, 0.5, 20.0), (1.0, 0.1, 1e-9)] {
            let t = agent_transition(a, b, dt).unwrap();
            assert!(t.phi_a > 0.0 && t.phi_b > 0.0 && t.phi_c > 0.0 && t.phi_d > 0.0);
            assert!((t.phi_a + t.phi_b - 1.0).abs() < 1e-12);
            assert!((t.phi_c + t.phi_d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_rejects_nonpositive_inputs() {
        assert!(agent_transition(0.0, 1.0, 1.0).is_err());
        assert!(agent_transition(1.0, -1.0, 1.0).is_err());
        assert!(agent_transition(1.0, 1.0, 0.0).is_err());
        assert!(agent_transition(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn near_unit_sigma_adopts_reception() {
        let spec = FormationSpec::new(vec![[1.0, 0.0], [-1.0, 0.5]]).unwrap();
        let states = vec![
            AgentState { x: 0.3, y: 0.1, theta_x: 9.0, theta_y: -4.0 },
            AgentState { x: 2.0, y: -1.0, theta_x: 0.0, theta_y: 0.0 },
        ];
        let r = mutual_pair(0.4, 0.9);
        let next = apply_update(&states, &r, &spec, 0.999999, MissingNeighbors::Reject).unwrap();
        // agent 0 hears agent 1: zeta = (2 - (-1), -1 - 0.5) = (3, -1.5)
        assert!((next[0].theta_x - (1.0 + 3.0)).abs() < 1e-5);
        assert!((next[0].theta_y - (0.0 - 1.5)).abs() < 1e-5);
        assert_eq!(next[0].x, states[0].x);
    }

    #[test]
    fn tilde_consensus_is_a_fixed_point_of_the_update() {
        let spec = FormationSpec::regular_polygon(3, 2.0).unwrap();
        let c = (0.75, -2.0);
        let states: Vec<AgentState> =
            spec.displacements.iter().map(|d| AgentState::at_rest(c.0 + d[0], c.1 + d[1])).collect();
        let r = RoundRealization::new(
            0,
            3,
            12.0,
            vec![
                Link { from: 0, to: 1, xi: 0.3 },
                Link { from: 1, to: 2, xi: 0.6 },
                Link { from: 2, to: 0, xi: 0.1 },
                Link { from: 1, to: 0, xi: 0.8 },
            ],
        )
        .unwrap();
        let next = apply_update(&states, &r, &spec, 0.8, MissingNeighbors::Reject).unwrap();
        for (a, b) in states.iter().zip(&next) {
            assert!((a.theta_x - b.theta_x).abs() < 1e-14);
            assert!((a.theta_y - b.theta_y).abs() < 1e-14);
        }
    }

    #[test]
    fn two_agent_update_by_hand() {
        let spec = FormationSpec::new(vec![[0.5, 0.0], [-0.5, 0.0]]).unwrap();
        let states = vec![
            AgentState { x: 1.0, y: 2.0, theta_x: -1.0, theta_y: 0.0 },
            AgentState { x: 3.0, y: -2.0, theta_x: 4.0, theta_y: 1.0 },
        ];
        let r = mutual_pair(0.37, 0.81);
        let next = apply_update(&states, &r, &spec, 0.8, MissingNeighbors::Reject).unwrap();
        // tilde: x~ = (0.5, 3.5), theta~_x = (-1.5, 4.5); each hears only the other
        let th0 = 0.2 * -1.5 + 0.8 * 3.5;
        let th1 = 0.2 * 4.5 + 0.8 * 0.5;
        assert!((next[0].theta_x - (th0 + 0.5)).abs() < 1e-14);
        assert!((next[1].theta_x - (th1 - 0.5)).abs() < 1e-14);
        // y axis, zero displacement: theta_y = 0.2 theta + 0.8 y_other
        assert!((next[0].theta_y - (0.2 * 0.0 + 0.8 * -2.0)).abs() < 1e-14);
        assert!((next[1].theta_y - (0.2 * 1.0 + 0.8 * 2.0)).abs() < 1e-14);
    }

    #[test]
    fn hold_policy_keeps_silent_receivers() {
        let r = RoundRealization::new(0, 3, 5.0, vec![Link { from: 0, to: 1, xi: 1.0 }]).unwrap();
        let spec = FormationSpec::regular_polygon(3, 1.0).unwrap();
        let states = vec![AgentState { x: 1.0, y: 0.0, theta_x: 2.0, theta_y: 3.0 }; 3];
        assert!(matches!(
            apply_update(&states, &r, &spec, 0.5, MissingNeighbors::Reject),
            Err(Error::NoInNeighbors { receiver: 0, .. })
        ));
        let next = apply_update(&states, &r, &spec, 0.5, MissingNeighbors::Hold).unwrap();
        assert_eq!(next[0], states[0]);
        assert_eq!(next[2], states[2]);
        assert_ne!(next[1], states[1]);
    }

    #[test]
    fn equilibrium_stays_constant() {
        let params = ControlParams::uniform(2, 0.3, 1.7, 0.5);
        let states = vec![AgentState::at_rest(1.5, -2.0), AgentState::at_rest(0.0, 4.0)];
        let snaps = propagate_interval(&states, &params, 10.0, &[0.5, 3.0, 10.0]).unwrap();
        for snap in snaps {
            for (a, b) in snap.iter().zip(&states) {
                assert!((a.x - b.x).abs() < 1e-14 && (a.theta_x - b.theta_x).abs() < 1e-14);
                assert!((a.y - b.y).abs() < 1e-14 && (a.theta_y - b.theta_y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn position_above_auxiliary_decreases() {
        let params = ControlParams::uniform(1, 0.5, 0.5, 0.5);
        let states = vec![AgentState { x: 2.0, y: 0.0, theta_x: -1.0, theta_y: 0.0 }];
        let offsets: Vec<f64> = (1..=20).map(|m| m as f64 * 0.5).collect();
        let snaps = propagate_interval(&states, &params, 10.0, &offsets).unwrap();
        let mut prev = states[0];
        for snap in snaps {
            assert!(snap[0].x < prev.x);
            assert!(snap[0].theta_x > prev.theta_x);
            prev = snap[0];
        }
    }

    #[test]
    fn weighted_sum_is_conserved() {
        let mut params = ControlParams::uniform(1, 0.3, 1.1, 0.5);
        params.gains[0].a_y = 2.0;
        params.gains[0].b_y = 0.25;
        let states = vec![AgentState { x: 3.0, y: -2.0, theta_x: -1.0, theta_y: 5.0 }];
        let offsets: Vec<f64> = (1..=30).map(|m| m as f64).collect();
        let inv = |s: &AgentState| (1.1 * s.x + 0.3 * s.theta_x, 0.25 * s.y + 2.0 * s.theta_y);
        let start = inv(&states[0]);
        for snap in propagate_interval(&states, &params, 30.0, &offsets).unwrap() {
            let now = inv(&snap[0]);
            assert!((now.0 - start.0).abs() < 1e-10);
            assert!((now.1 - start.1).abs() < 1e-10);
        }
    }

    #[test]
    fn offsets_must_lie_in_interval() {
        let params = ControlParams::uniform(1, 0.5, 0.5, 0.5);
        let states = vec![AgentState::default()];
        for bad in [0.0, -1.0, 10.5] {
            assert_eq!(
                propagate_interval(&states, &params, 10.0, &[bad]),
                Err(Error::SampleOffsetOutOfRange { offset: bad, dt: 10.0 })
            );
        }
    }

    #[test]
    fn single_agent_operator_is_rejected() {
        let r = RoundRealization::new(0, 1, 1.0, vec![]).unwrap();
        let h = build_h_matrix(&r);
        let params = ControlParams::uniform(1, 0.5, 0.5, 0.5);
        assert_eq!(build_operator(&r, &params, &h, Axis::X), Err(Error::TooFewAgents(1)));
    }

    #[test]
    fn operator_dimension_mismatch() {
        let r = mutual_pair(1.0, 1.0);
        let h = build_h_matrix(&r);
        let params = ControlParams::uniform(3, 0.5, 0.5, 0.5);
        assert!(matches!(build_operator(&r, &params, &h, Axis::X), Err(Error::DimensionMismatch { .. })));
        let op = build_operator(&r, &ControlParams::uniform(2, 0.5, 0.5, 0.5), &h, Axis::X).unwrap();
        assert!(step_matrix_form(&DVector::zeros(3), &op).is_err());
    }

    #[test]
    fn consensus_vector_is_fixed() {
        let r = mutual_pair(0.2, 0.9);
        let h = build_h_matrix(&r);
        let op = build_operator(&r, &ControlParams::uniform(2, 0.4, 1.3, 0.6), &h, Axis::Y).unwrap();
        let v = DVector::from_element(4, 2.5);
        let out = step_matrix_form(&v, &op).unwrap();
        for x in out.iter() {
            assert!((x - 2.5).abs() < 1e-14);
        }
    }

    fn arb_round() -> impl Strategy<Value = (RoundRealization, ControlParams)> {
        (2usize..7, 0.05..0.95f64, 0.1..30.0f64).prop_flat_map(|(n, sigma, delta)| {
            let links = proptest::collection::vec((0..n, 0..n, 1e-3..1.0f64), 0..(n * n));
            let gains = proptest::collection::vec((0.05..5.0f64, 0.05..5.0f64), n);
            (links, gains).prop_map(move |(raw, gains)| {
                let mut seen = std::collections::BTreeSet::new();
                // cycle keeps every receiver heard
                let mut links: Vec<Link> = (0..n).map(|i| Link { from: i, to: (i + 1) % n, xi: 0.5 }).collect();
                for l in &links {
                    seen.insert((l.from, l.to));
                }
                links.extend(
                    raw.into_iter().filter(|&(f, t, _)| f != t && seen.insert((f, t))).map(|(from, to, xi)| Link {
                        from,
                        to,
                        xi,
                    }),
                );
                let params = ControlParams {
                    sigma,
                    gains: gains
                        .into_iter()
                        .map(|(a, b)| crate::model::AgentGains { a_x: a, a_y: b, b_x: b, b_y: a })
                        .collect(),
                };
                (RoundRealization::new(0, n, delta, links).unwrap(), params)
            })
        })
    }

    proptest! {
        #[test]
        fn block_form_matches_generic_product((round, params) in arb_round()) {
            let h = build_h_matrix(&round);
            for axis in Axis::BOTH {
                let op = build_operator(&round, &params, &h, axis).unwrap();
                let blocks = omega_from_blocks(&axis_transitions(&params, axis, round.delta).unwrap(), &h, params.sigma);
                prop_assert!((&op.omega - blocks).amax() < 1e-13);
                for r in 0..op.dim() {
                    prop_assert!((op.omega.row(r).sum() - 1.0).abs() < 1e-12);
                    prop_assert!((op.phi.row(r).sum() - 1.0).abs() < 1e-12);
                    prop_assert!((op.d.row(r).sum() - 1.0).abs() < 1e-12);
                    prop_assert!(op.omega[(r, r)] > 0.0);
                }
            }
        }

        #[test]
        fn matrix_path_matches_agent_path(
            (round, params) in arb_round(),
            raw in proptest::collection::vec(-10.0..10.0f64, 24),
        ) {
            let n = round.n;
            let spec = FormationSpec::regular_polygon(n, 1.5).unwrap();
            let states: Vec<AgentState> = (0..n)
                .map(|i| AgentState { x: raw[i], y: raw[6 + i], theta_x: raw[12 + i], theta_y: raw[18 + i] })
                .collect();
            let updated = apply_update(&states, &round, &spec, params.sigma, MissingNeighbors::Reject).unwrap();
            let flowed = propagate(&updated, &params, round.delta).unwrap();
            let h = build_h_matrix(&round);
            for axis in Axis::BOTH {
                let op = build_operator(&round, &params, &h, axis).unwrap();
                let before = tilde_vector(&states, &spec, axis);
                let out = step_matrix_form(&before, &op).unwrap();
                let expected = tilde_vector(&flowed, &spec, axis);
                prop_assert!((&out - &expected).amax() < 1e-10);
                prop_assert!(out.max() <= before.max() + 1e-12);
                prop_assert!(out.min() >= before.min() - 1e-12);
            }
        }
    }
}
