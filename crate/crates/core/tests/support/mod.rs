//! Independent reference computations for the integration and acceptance
//! suites. Nothing here calls into the closed-form or matrix code it checks.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wmac_formation::{AgentGains, ControlParams, Link, RoundRealization};

/// Adaptive Dormand-Prince 5(4) integration of the 2x2 relaxation system
/// `x' = -a (x - q)`, `q' = b (x - q)` from `(x0, q0)` over `[0, t_end]`.
pub fn integrate_relaxation(a: f64, b: f64, x0: f64, q0: f64, t_end: f64) -> (f64, f64) {
    let f = |y: [f64; 2]| -> [f64; 2] {
        let diff = y[0] - y[1];
        [-a * diff, b * diff]
    };
    let [x, q] = dormand_prince(f, [x0, q0], t_end, 1e-13, 1e-15);
    (x, q)
}

fn dormand_prince<F: Fn([f64; 2]) -> [f64; 2]>(f: F, y0: [f64; 2], t_end: f64, rtol: f64, atol: f64) -> [f64; 2] {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

    let mut t = 0.0;
    let mut y = y0;
    let mut h = (t_end / 1000.0).min(1e-3);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k = [[0.0; 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for d in 0..2 {
                    ys[d] += h * A[s][j] * kj[d];
                }
            }
            k[s] = f(ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for d in 0..2 {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B5[s] * k[s][d];
                lo += B4[s] * k[s][d];
            }
            y5[d] += h * hi;
            let scale = atol + rtol * y[d].abs().max(y5[d].abs());
            err = err.max((h * (hi - lo)).abs() / scale);
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

/// Reference transition entries from two basis initial conditions.
pub fn reference_transition(a: f64, b: f64, dt: f64) -> [f64; 4] {
    let (pa, pc) = integrate_relaxation(a, b, 1.0, 0.0, dt);
    let (pb, pd) = integrate_relaxation(a, b, 0.0, 1.0, dt);
    [pa, pb, pc, pd]
}

/// Left Perron vector of a row-stochastic matrix by power iteration on the
/// transpose, normalized to unit sum. Stops early once the iterate is
/// stationary.
pub fn left_perron_vector(m: &DMatrix<f64>, iterations: usize) -> DVector<f64> {
    let t = m.transpose();
    let dim = m.nrows();
    let mut v = DVector::from_element(dim, 1.0 / dim as f64);
    for _ in 0..iterations {
        let mut next = &t * &v;
        let s = next.sum();
        next /= s;
        let change = (&next - &v).amax();
        v = next;
        if change < 1e-17 {
            break;
        }
    }
    v
}

/// Primitivity by repeated floating-point multiplication: true when some
/// power up to `max_power` is entrywise positive.
pub fn float_power_primitive(m: &DMatrix<f64>, max_power: usize) -> bool {
    // binarize so tiny entries do not underflow during repeated products
    let pattern = m.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let mut p = pattern.clone();
    for _ in 0..max_power {
        if p.iter().all(|&v| v > 0.0) {
            return true;
        }
        p = (&p * &pattern).map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    }
    false
}

/// Reachability closure oracle for strong connectivity of the positive
/// pattern of a square matrix.
pub fn closure_irreducible(m: &DMatrix<f64>) -> bool {
    let dim = m.nrows();
    let mut reach = DMatrix::from_fn(dim, dim, |i, j| i == j || m[(i, j)] > 0.0);
    for _ in 0..dim {
        let prev = reach.clone();
        for i in 0..dim {
            for j in 0..dim {
                if !reach[(i, j)] {
                    reach[(i, j)] = (0..dim).any(|k| prev[(i, k)] && prev[(k, j)]);
                }
            }
        }
    }
    reach.iter().all(|&b| b)
}

/// Random round on `n` agents: a shuffled Hamiltonian cycle plus random
/// chords, uniform fading, random interval.
pub fn random_round(rng: &mut ChaCha8Rng, n: usize, k: usize) -> RoundRealization {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut arcs = std::collections::BTreeSet::new();
    for q in 0..n {
        arcs.insert((order[q], order[(q + 1) % n]));
    }
    let p: f64 = rng.random();
    for from in 0..n {
        for to in 0..n {
            if from != to && rng.random::<f64>() < p {
                arcs.insert((from, to));
            }
        }
    }
    let links = arcs.into_iter().map(|(from, to)| Link { from, to, xi: rng.random_range(1e-6..1.0) }).collect();
    let delta = rng.random_range(0.1..30.0);
    RoundRealization::new(k, n, delta, links).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, n: usize) -> ControlParams {
    ControlParams {
        sigma: rng.random_range(0.05..0.95),
        gains: (0..n)
            .map(|_| AgentGains {
                a_x: rng.random_range(0.05..5.0),
                a_y: rng.random_range(0.05..5.0),
                b_x: rng.random_range(0.05..5.0),
                b_y: rng.random_range(0.05..5.0),
            })
            .collect(),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
