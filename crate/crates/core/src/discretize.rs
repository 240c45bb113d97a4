//! Semi-discretization of graphon models to N-agent systems and the
//! piecewise-constant lift back.
//!
//! Labels partition [0,1] into half-open cells [(i−1)/n, i/n) with the last
//! cell closed. Matrix entries are cell averages of the kernel computed with
//! an m×m midpoint rule, and initial states are cell averages of the label
//! profile. The 1/N measure convention lives in the discrete inner products
//! downstream, not in the sampled weights.

use crate::kernel::{cell_index, TimeKernel};
use crate::Error;
use std::path::Path;

/// N×N sampled interaction weights at a fixed time.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyMatrix {
    n: usize,
    weights: Vec<f64>,
    pub sample_time: f64,
}

impl AdjacencyMatrix {
    /// Builds a matrix from row-major weights, validating the [0,1] range.
    pub fn new(n: usize, weights: Vec<f64>, sample_time: f64) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::InvalidParam(
                "matrix dimension must be positive".into(),
            ));
        }
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}×{n} weights"),
                got: format!("{}", weights.len()),
            });
        }
        for (k, &w) in weights.iter().enumerate() {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidParam(format!(
                    "weight {w} at ({}, {}) outside [0,1]",
                    k / n,
                    k % n
                )));
            }
        }
        Ok(AdjacencyMatrix {
            n,
            weights,
            sample_time,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Copy with the diagonal forced to 1, restoring the unit
    /// self-interaction convention for scrambling computations that use the
    /// stochastic form. The Laplacian drift is insensitive to the diagonal.
    pub fn with_unit_diagonal(&self) -> AdjacencyMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            out.weights[i * self.n + i] = 1.0;
        }
        out
    }

    /// Serializes as CSV: n rows of n comma-separated values, 17 significant
    /// digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|&w| crate::fmt_f64(w)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Self, Error> {
        let mut weights = Vec::new();
        let mut n = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> =
                line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let row = row.map_err(|_| Error::Parse {
                path: origin.to_string(),
                line: lineno + 1,
                message: "bad float".into(),
            })?;
            if n == 0 {
                n = row.len();
            } else if row.len() != n {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: lineno + 1,
                    message: format!("expected {n} columns, got {}", row.len()),
                });
            }
            weights.extend(row);
        }
        AdjacencyMatrix::new(n, weights, 0.0)
    }
}

/// Positions of N agents in ℝ^d, row-major by agent.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    n: usize,
    dim: usize,
    positions: Vec<f64>,
}

impl State {
    pub fn new(n: usize, dim: usize, positions: Vec<f64>) -> Result<Self, Error> {
        if n == 0 || dim == 0 {
            return Err(Error::InvalidParam(
                "state dimensions must be positive".into(),
            ));
        }
        if positions.len() != n * dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}×{dim} positions"),
                got: format!("{}", positions.len()),
            });
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParam(
                "state contains non-finite entries".into(),
            ));
        }
        Ok(State { n, dim, positions })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub(crate) fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    /// Euclidean distance between agents i and j.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.agent(i), self.agent(j));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Serializes as CSV with d columns, one row per agent.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.agent(i).iter().map(|&x| crate::fmt_f64(x)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Self, Error> {
        let mut positions = Vec::new();
        let mut dim = 0usize;
        let mut n = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> =
                line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let row = row.map_err(|_| Error::Parse {
                path: origin.to_string(),
                line: lineno + 1,
                message: "bad float".into(),
            })?;
            if dim == 0 {
                dim = row.len();
            } else if row.len() != dim {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: lineno + 1,
                    message: format!("expected {dim} columns, got {}", row.len()),
                });
            }
            positions.extend(row);
            n += 1;
        }
        State::new(n, dim, positions)
    }

    pub fn from_csv_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        State::from_csv(&text, &path.display().to_string())
    }
}

/// Samples the kernel at time t into an N×N matrix of cell averages.
///
/// Entry (i,j) is the mean of a(t,·,·) over the label cell product,
/// approximated by an m×m midpoint rule with m = `quadrature_order`;
/// entries are clamped to [0,1].
// Pairwise reduction; exact for power-of-two counts of identical values,
// which is what makes sample ∘ lift a bit-exact identity.
fn pairwise_sum(buf: &[f64]) -> f64 {
    match buf.len() {
        0 => 0.0,
        1 => buf[0],
        2 => buf[0] + buf[1],
        len => {
            let mid = len / 2;
            pairwise_sum(&buf[..mid]) + pairwise_sum(&buf[mid..])
        }
    }
}

pub fn sample_adjacency(
    kernel: &TimeKernel,
    t: f64,
    n: usize,
    quadrature_order: usize,
) -> AdjacencyMatrix {
    let m = quadrature_order.max(1);
    let h = 1.0 / (n as f64 * m as f64);
    let mut weights = vec![0.0; n * n];
    // Midpoints are shared across cells: global index k ⇒ (k + 1/2)·h.
    let mids: Vec<f64> = (0..n * m).map(|k| (k as f64 + 0.5) * h).collect();
    let inv_m2 = 1.0 / (m * m) as f64;
    let mut scratch = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            for p in 0..m {
                let x = mids[i * m + p];
                for q in 0..m {
                    scratch[p * m + q] = kernel.eval(t, x, mids[j * m + q]);
                }
            }
            weights[i * n + j] = (pairwise_sum(&scratch) * inv_m2).clamp(0.0, 1.0);
        }
    }
    AdjacencyMatrix {
        n,
        weights,
        sample_time: t,
    }
}

/// Default midpoint order for [`sample_adjacency`].
pub const DEFAULT_QUADRATURE_ORDER: usize = 4;

/// Samples a label profile into agent positions by cell averaging.
pub fn sample_state(
    profile: &dyn Fn(f64) -> Vec<f64>,
    n: usize,
    dim: usize,
) -> Result<State, Error> {
    sample_state_with_order(profile, n, dim, 16)
}

/// Cell averages of the profile with an explicit midpoint order per cell.
pub fn sample_state_with_order(
    profile: &dyn Fn(f64) -> Vec<f64>,
    n: usize,
    dim: usize,
    order: usize,
) -> Result<State, Error> {
    let m = order.max(1);
    let h = 1.0 / (n as f64 * m as f64);
    let mut positions = vec![0.0; n * dim];
    for i in 0..n {
        for p in 0..m {
            let x = (i * m + p) as f64 * h + 0.5 * h;
            let v = profile(x);
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: format!("profile of dimension {dim}"),
                    got: format!("{}", v.len()),
                });
            }
            for c in 0..dim {
                positions[i * dim + c] += v[c];
            }
        }
        for c in 0..dim {
            positions[i * dim + c] /= m as f64;
        }
    }
    State::new(n, dim, positions)
}

/// Lifts a sampled matrix back to a stationary piecewise-constant kernel.
///
/// The round trip `sample_adjacency(lift_piecewise(a), ·, n)` reproduces `a`
/// exactly because the midpoint rule is exact on piecewise-constant data.
pub fn lift_piecewise(matrix: &AdjacencyMatrix) -> TimeKernel {
    let n = matrix.n;
    let weights = matrix.weights.clone();
    let meta = crate::kernel::KernelMeta {
        // Honest flags computed from the data.
        is_symmetric: (0..n).all(|i| (0..n).all(|j| weights[i * n + j] == weights[j * n + i])),
        is_balanced: (0..n).all(|i| {
            let row: f64 = (0..n).map(|j| weights[i * n + j]).sum();
            let col: f64 = (0..n).map(|j| weights[j * n + i]).sum();
            (row - col).abs() <= 1e-12
        }),
        is_stationary: true,
        period: None,
        switch_times: None,
        piecewise_constant_in_time: true,
    };
    TimeKernel::new(meta, move |_t, i, j| {
        weights[cell_index(i, n) * n + cell_index(j, n)]
    })
}
