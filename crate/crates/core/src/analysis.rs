//! Structural checks on nonnegative matrices and consensus-limit estimation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentState, Axis, FormationSpec};
use crate::topology::{is_strongly_connected, Digraph};

/// Entries at or below this fraction of the matrix maximum are treated as
/// structural zeros.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCertificate {
    pub dim: usize,
    pub row_stochastic: bool,
    pub max_row_sum_deviation: f64,
    pub irreducible: bool,
    pub primitive: bool,
    /// Smallest `h` with `M^h` entrywise positive, when found.
    pub primitivity_exponent: Option<usize>,
    pub positive_diagonal: bool,
    /// Off-diagonal positive pattern: arc `(i, j)` iff `M[i][j] > 0`.
    pub support: Digraph,
}

/// Square boolean matrix stored as packed rows.
#[derive(Clone, PartialEq)]
struct BoolMatrix {
    dim: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BoolMatrix {
    fn new(dim: usize) -> Self {
        let words = dim.div_ceil(64);
        BoolMatrix { dim, words, bits: vec![0; dim * words] }
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn is_full(&self) -> bool {
        let tail = self.dim % 64;
        (0..self.dim).all(|i| {
            let row = self.row(i);
            row.iter().enumerate().all(|(w, &bits)| {
                if w + 1 == self.words && tail != 0 {
                    bits == (1u64 << tail) - 1
                } else {
                    bits == u64::MAX
                }
            })
        })
    }

    fn mul(&self, other: &BoolMatrix) -> BoolMatrix {
        let mut out = BoolMatrix::new(self.dim);
        for i in 0..self.dim {
            let dst = i * self.words;
            for k in 0..self.dim {
                if self.get(i, k) {
                    for (w, &bits) in other.row(k).iter().enumerate() {
                        out.bits[dst + w] |= bits;
                    }
                }
            }
        }
        out
    }
}

/// Smallest `h <= m^2 - 2m + 2` with `pattern^h` full.
fn primitivity_exponent(pattern: &BoolMatrix) -> Option<usize> {
    let m = pattern.dim;
    let bound = m * m - 2 * m + 2;
    let mut power = pattern.clone();
    for h in 1..=bound {
        if power.is_full() {
            return Some(h);
        }
        if h < bound {
            power = power.mul(pattern);
        }
    }
    None
}

pub fn certify(m: &DMatrix<f64>, tol: f64) -> Result<MatrixCertificate> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let dim = m.nrows();
    if dim == 0 {
        return Err(Error::Empty("matrix"));
    }
    for i in 0..dim {
        for j in 0..dim {
            let v = m[(i, j)];
            if v.is_nan() || v < -tol {
                return Err(Error::NegativeEntry { row: i, col: j, value: v });
            }
        }
    }

    let max_row_sum_deviation = m.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
    let scale = m.iter().cloned().fold(0.0, f64::max);
    let floor = SUPPORT_THRESHOLD * scale;

    let mut pattern = BoolMatrix::new(dim);
    let mut arcs = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            if scale > 0.0 && m[(i, j)] > floor {
                pattern.set(i, j);
                if i != j {
                    arcs.push((i, j));
                }
            }
        }
    }
    let support = Digraph::new(dim, arcs)?;
    let positive_diagonal = (0..dim).all(|i| pattern.get(i, i));
    let irreducible = if dim == 1 { pattern.get(0, 0) } else { is_strongly_connected(&support) };
    let primitivity_exponent = if irreducible { primitivity_exponent(&pattern) } else { None };

    Ok(MatrixCertificate {
        dim,
        row_stochastic: max_row_sum_deviation <= tol,
        max_row_sum_deviation,
        irreducible,
        primitive: primitivity_exponent.is_some(),
        primitivity_exponent,
        positive_diagonal,
        support,
    })
}

/// Converged left product of a sequence of row-stochastic matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusLimit {
    /// Common row `v` of the limit `1 v'`.
    pub weights: DVector<f64>,
    pub rounds_used: usize,
    pub disagreement: f64,
}

impl ConsensusLimit {
    /// Predicted consensus value `v' x(0)`.
    pub fn predict(&self, initial: &DVector<f64>) -> f64 {
        self.weights.dot(initial)
    }
}

/// Largest column spread of a matrix: zero iff all rows agree.
pub fn row_disagreement(p: &DMatrix<f64>) -> f64 {
    p.column_iter().map(|c| c.max() - c.min()).fold(0.0, f64::max)
}

/// Accumulates `Omega_{k-1} ... Omega_0` until rows agree within `tol`.
pub fn product_limit<I>(operators: I, tol: f64, max_rounds: usize) -> Result<ConsensusLimit>
where
    I: IntoIterator<Item = DMatrix<f64>>,
{
    let mut product: Option<DMatrix<f64>> = None;
    let mut disagreement = f64::INFINITY;
    let mut rounds = 0;
    for omega in operators.into_iter().take(max_rounds) {
        if !omega.is_square() {
            return Err(Error::NotSquare { rows: omega.nrows(), cols: omega.ncols() });
        }
        let next = match product {
            None => omega,
            Some(p) => {
                if p.nrows() != omega.nrows() {
                    return Err(Error::DimensionMismatch { expected: p.nrows(), found: omega.nrows() });
                }
                omega * p
            }
        };
        rounds += 1;
        disagreement = row_disagreement(&next);
        if disagreement < tol {
            return Ok(ConsensusLimit { weights: next.row(0).transpose(), rounds_used: rounds, disagreement });
        }
        product = Some(next);
    }
    Err(Error::NotConverged { rounds, disagreement })
}

/// Worst distance of any agent from its slot around the mean centroid.
pub fn formation_error(states: &[AgentState], spec: &FormationSpec) -> f64 {
    assert_eq!(states.len(), spec.len(), "state and formation sizes differ");
    let n = states.len() as f64;
    let offsets: Vec<[f64; 2]> =
        states.iter().zip(&spec.displacements).map(|(s, d)| [s.x - d[0], s.y - d[1]]).collect();
    let cx = offsets.iter().map(|o| o[0]).sum::<f64>() / n;
    let cy = offsets.iter().map(|o| o[1]).sum::<f64>() / n;
    offsets.iter().map(|o| (o[0] - cx).hypot(o[1] - cy)).fold(0.0, f64::max)
}

/// Mean of `p_i - d_i` over all agents.
pub fn formation_centroid(states: &[AgentState], spec: &FormationSpec) -> [f64; 2] {
    let n = states.len() as f64;
    let (sx, sy) =
        states.iter().zip(&spec.displacements).fold((0.0, 0.0), |(ax, ay), (s, d)| (ax + s.x - d[0], ay + s.y - d[1]));
    [sx / n, sy / n]
}

/// `max - min` over all `2n` tilde components along an axis.
pub fn tilde_span(states: &[AgentState], spec: &FormationSpec, axis: Axis) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, s) in states.iter().enumerate() {
        let d = spec.displacement(i, axis);
        let (p, q) = s.axis(axis);
        for v in [p - d, q - d] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    hi - lo
}
