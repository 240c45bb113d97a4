//! Connectivity functionals of sampled interaction topologies: scrambling
//! coefficient, graph-Laplacian, algebraic connectivity, strongly connected
//! components, Perron weights, sliding-window persistence estimates, the
//! dwell-time inequality and the Ψ_τ operator bounds.
//!
//! Scaling conventions: the Laplacian is L = (1/N)(D − A) with
//! D_ii = Σ_j a_ij, the inner product is (1/N)-weighted, and λ₂ is the
//! infimum of the Rayleigh quotient of the symmetrized Laplacian over the
//! orthogonal complement of the consensus manifold. With these conventions
//! every functional matches its continuum counterpart on piecewise-constant
//! kernels.

use crate::discretize::{sample_adjacency, AdjacencyMatrix, State};
use crate::dynamics::Trajectory;
use crate::kernel::{NonlinKernel, TimeKernel};
use crate::rng::SplitMix64;
use crate::Error;

/// Compensated (Neumaier) summation; keeps Laplacian row sums at the
/// round-off floor instead of growing with N.
pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

// ---------------------------------------------------------------------------
// Scrambling coefficient
// ---------------------------------------------------------------------------

fn scrambling_rows(n: usize, data: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..n {
        let ri = &data[i * n..(i + 1) * n];
        for j in i..n {
            let rj = &data[j * n..(j + 1) * n];
            // Four independent accumulators over bounds-check-free chunks
            // let the min+add reduction vectorize.
            let (mut a0, mut a1, mut a2, mut a3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            let mut ci = ri.chunks_exact(4);
            let mut cj = rj.chunks_exact(4);
            for (x, y) in ci.by_ref().zip(cj.by_ref()) {
                a0 += x[0].min(y[0]);
                a1 += x[1].min(y[1]);
                a2 += x[2].min(y[2]);
                a3 += x[3].min(y[3]);
            }
            let mut total = (a0 + a1) + (a2 + a3);
            for (x, y) in ci.remainder().iter().zip(cj.remainder()) {
                total += x.min(*y);
            }
            if total < best {
                best = total;
            }
        }
    }
    best / n as f64
}

/// Scrambling coefficient η(A) = min_{i,j} (1/N) Σ_k min{a_ik, a_jk},
/// evaluated exactly in O(N³).
pub fn scrambling(a: &AdjacencyMatrix) -> f64 {
    scrambling_rows(a.n(), a.weights())
}

/// Alternative form valid for unit-diagonal matrices:
/// η = min_{i≠j} (1/N)(Σ_{k≠i,j} min{a_ik, a_jk} + a_ij + a_ji).
pub fn scrambling_unit_diagonal_form(a: &AdjacencyMatrix) -> f64 {
    let n = a.n();
    if n < 2 {
        return scrambling(a);
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let (ri, rj) = (a.row(i), a.row(j));
            let mut acc = 0.0;
            for k in 0..n {
                if k != i && k != j {
                    acc += ri[k].min(rj[k]);
                }
            }
            acc += a.get(i, j) + a.get(j, i);
            best = best.min(acc);
        }
    }
    best / n as f64
}

/// Stochastic reparametrisation of an adjacency matrix: off-diagonals are
/// kept and the diagonal becomes ã_ii = N − Σ_{k≠i} a_ik, so every row sums
/// to N. Diagonal entries may exceed 1, hence the separate type.
#[derive(Clone, Debug)]
pub struct StochasticReparam {
    n: usize,
    weights: Vec<f64>,
}

impl StochasticReparam {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.weights[i * self.n..(i + 1) * self.n].iter().sum()
    }

    /// Scrambling coefficient of the reparametrised matrix; equals the
    /// original's bit for bit.
    pub fn scrambling(&self) -> f64 {
        scrambling_rows(self.n, &self.weights)
    }
}

pub fn stochastic_reparam(a: &AdjacencyMatrix) -> StochasticReparam {
    let n = a.n();
    let mut weights = a.weights().to_vec();
    for i in 0..n {
        let off: f64 = (0..n).filter(|&k| k != i).map(|k| a.get(i, k)).sum();
        weights[i * n + i] = n as f64 - off;
    }
    StochasticReparam { n, weights }
}

// ---------------------------------------------------------------------------
// Graph-Laplacian and algebraic connectivity
// ---------------------------------------------------------------------------

/// Dense graph-Laplacian L = (1/N)(D − A); rows sum to zero, so the
/// consensus manifold lies in the kernel.
#[derive(Clone, Debug)]
pub struct LaplacianMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl LaplacianMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        neumaier_sum(self.entries[i * self.n..(i + 1) * self.n].iter().copied())
    }

    /// ‖Lᵀ v‖∞ for a scalar weight vector.
    pub fn transpose_apply_inf_norm(&self, v: &[f64]) -> f64 {
        let n = self.n;
        (0..n)
            .map(|i| neumaier_sum((0..n).map(|j| self.entries[j * n + i] * v[j])).abs())
            .fold(0.0f64, f64::max)
    }
}

/// Linear graph-Laplacian of the sampled weights.
pub fn graph_laplacian(a: &AdjacencyMatrix) -> LaplacianMatrix {
    let n = a.n();
    let inv_n = 1.0 / n as f64;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let row = a.row(i);
        let degree = neumaier_sum((0..n).filter(|&k| k != i).map(|k| row[k]));
        for j in 0..n {
            entries[i * n + j] = if i == j {
                degree * inv_n
            } else {
                -row[j] * inv_n
            };
        }
    }
    LaplacianMatrix { n, entries }
}

/// Nonlinear graph-Laplacian with effective weights a_ij φ(|x_i − x_j|).
pub fn nonlinear_laplacian(
    a: &AdjacencyMatrix,
    phi: &NonlinKernel,
    x: &State,
) -> Result<LaplacianMatrix, Error> {
    if a.n() != x.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("state with {} agents", a.n()),
            got: format!("{}", x.n()),
        });
    }
    let n = a.n();
    let inv_n = 1.0 / n as f64;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let mut eff_row = vec![0.0; n];
        for j in 0..n {
            eff_row[j] = a.get(i, j) * phi.eval(x.distance(i, j));
        }
        let degree = neumaier_sum((0..n).filter(|&k| k != i).map(|k| eff_row[k]));
        for j in 0..n {
            entries[i * n + j] = if i == j {
                degree * inv_n
            } else {
                -eff_row[j] * inv_n
            };
        }
    }
    Ok(LaplacianMatrix { n, entries })
}

/// Cyclic Jacobi diagonalization of a dense symmetric matrix (row-major),
/// returning the unsorted eigenvalues. Converges when every off-diagonal
/// magnitude drops below 1e-12; errors after 100 sweeps.
pub fn sym_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<f64>, Error> {
    const OFF_TOL: f64 = 1e-12;
    const MAX_SWEEPS: usize = 100;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut b = matrix.to_vec();
    for sweep in 0..MAX_SWEEPS {
        let mut max_off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                max_off = max_off.max(b[p * n + q].abs());
            }
        }
        if max_off < OFF_TOL {
            return Ok((0..n).map(|i| b[i * n + i]).collect());
        }
        let _ = sweep;
        for p in 0..n {
            for q in (p + 1)..n {
                let bpq = b[p * n + q];
                if bpq.abs() < OFF_TOL * 1e-3 {
                    continue;
                }
                let theta = (b[q * n + q] - b[p * n + p]) / (2.0 * bpq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let bkp = b[k * n + p];
                    let bkq = b[k * n + q];
                    b[k * n + p] = c * bkp - s * bkq;
                    b[k * n + q] = s * bkp + c * bkq;
                }
                for k in 0..n {
                    let bpk = b[p * n + k];
                    let bqk = b[q * n + k];
                    b[p * n + k] = c * bpk - s * bqk;
                    b[q * n + k] = s * bpk + c * bqk;
                }
            }
        }
    }
    Err(Error::JacobiNoConvergence { sweeps: MAX_SWEEPS })
}

/// Projects the symmetrized matrix onto the mean-zero subspace through an
/// orthonormal (Helmert) basis, removing the consensus eigenvalue
/// structurally rather than by sorting.
fn project_out_consensus(l_sym: &[f64], n: usize) -> Vec<f64> {
    let k = n - 1;
    // alpha_c = 1/sqrt(c(c+1)); column c has entries alpha_c on 0..c and
    // −c·alpha_c at index c.
    let alpha: Vec<f64> = (1..n)
        .map(|c| 1.0 / ((c as f64) * (c as f64 + 1.0)).sqrt())
        .collect();
    // T = L_sym · Q via prefix sums along rows.
    let mut t = vec![0.0; n * k];
    for i in 0..n {
        let row = &l_sym[i * n..(i + 1) * n];
        let mut prefix = 0.0;
        for c in 1..n {
            prefix += row[c - 1];
            t[i * k + (c - 1)] = alpha[c - 1] * (prefix - c as f64 * row[c]);
        }
    }
    // B = Qᵀ · T via prefix sums along columns.
    let mut b = vec![0.0; k * k];
    for col in 0..k {
        let mut prefix = 0.0;
        for c in 1..n {
            prefix += t[(c - 1) * k + col];
            b[(c - 1) * k + col] = alpha[c - 1] * (prefix - c as f64 * t[c * k + col]);
        }
    }
    b
}

/// Algebraic connectivity: the smallest eigenvalue of the symmetrized
/// Laplacian restricted to the orthogonal complement of the consensus
/// manifold.
pub fn lambda2(l: &LaplacianMatrix) -> Result<f64, Error> {
    let n = l.n;
    if n < 2 {
        return Err(Error::InvalidParam(
            "lambda2 needs at least 2 agents".into(),
        ));
    }
    let mut l_sym = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            l_sym[i * n + j] = 0.5 * (l.entries[i * n + j] + l.entries[j * n + i]);
        }
    }
    let b = project_out_consensus(&l_sym, n);
    let eigen = sym_eigenvalues(&b, n - 1)?;
    Ok(eigen.into_iter().fold(f64::INFINITY, f64::min))
}

/// Algebraic connectivity of the row-rescaled Laplacian (L_v)_ij = v_i L_ij
/// (symmetrized inside [`lambda2`]).
pub fn lambda2_weighted(l: &LaplacianMatrix, v: &PerronVector) -> Result<f64, Error> {
    let n = l.n;
    if v.values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} weights"),
            got: format!("{}", v.values.len()),
        });
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = v.values[i] * l.entries[i * n + j];
        }
    }
    lambda2(&LaplacianMatrix { n, entries })
}

/// In-degree vector d_i = (1/N) Σ_j a_ij.
pub fn in_degree(a: &AdjacencyMatrix) -> Vec<f64> {
    let n = a.n();
    (0..n)
        .map(|i| a.row(i).iter().sum::<f64>() / n as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Strongly connected components and Perron weights
// ---------------------------------------------------------------------------

/// SCC decomposition of the digraph with edges a_ij > threshold.
#[derive(Clone, Debug)]
pub struct SccDecomposition {
    /// Component id per agent.
    pub component_of: Vec<usize>,
    /// Agent index sets, each sorted, ordered by smallest member.
    pub components: Vec<Vec<usize>>,
    /// True when no above-threshold edge crosses distinct components.
    pub is_disjoint_union: bool,
    /// Min over components of the minimal average in-degree
    /// min_{i∈I} (1/|I|) Σ_{j∈I} a_ij.
    pub delta: f64,
}

/// Default edge threshold absorbing quadrature noise.
pub const DEFAULT_SCC_THRESHOLD: f64 = 1e-12;

pub fn scc_decompose(a: &AdjacencyMatrix, threshold: f64) -> SccDecomposition {
    let n = a.n();
    // Iterative Tarjan.
    let mut index = vec![usize::MAX; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components: Vec<Vec<usize>> = Vec::new();

    enum Frame {
        Enter(usize),
        Resume(usize, usize),
    }
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call_stack = vec![Frame::Enter(root)];
        while let Some(frame) = call_stack.pop() {
            match frame {
                Frame::Enter(v) => {
                    index[v] = next_index;
                    lowlink[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    call_stack.push(Frame::Resume(v, 0));
                }
                Frame::Resume(v, mut w) => {
                    let mut descended = false;
                    while w < n {
                        if a.get(v, w) > threshold {
                            if index[w] == usize::MAX {
                                call_stack.push(Frame::Resume(v, w + 1));
                                call_stack.push(Frame::Enter(w));
                                descended = true;
                                break;
                            } else if on_stack[w] {
                                lowlink[v] = lowlink[v].min(index[w]);
                            }
                        }
                        w += 1;
                    }
                    if descended {
                        continue;
                    }
                    if lowlink[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let u = stack.pop().unwrap();
                            on_stack[u] = false;
                            comp.push(u);
                            if u == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        components.push(comp);
                    }
                    // Propagate the lowlink to the parent frame.
                    if let Some(Frame::Resume(parent, _)) = call_stack.last() {
                        let parent = *parent;
                        lowlink[parent] = lowlink[parent].min(lowlink[v]);
                    }
                }
            }
        }
    }

    components.sort_by_key(|c| c[0]);
    let mut component_of = vec![0usize; n];
    for (id, comp) in components.iter().enumerate() {
        for &i in comp {
            component_of[i] = id;
        }
    }
    let mut is_disjoint_union = true;
    'outer: for i in 0..n {
        for j in 0..n {
            if a.get(i, j) > threshold && component_of[i] != component_of[j] {
                is_disjoint_union = false;
                break 'outer;
            }
        }
    }
    let mut delta = f64::INFINITY;
    for comp in &components {
        let size = comp.len() as f64;
        for &i in comp {
            let avg = comp.iter().map(|&j| a.get(i, j)).sum::<f64>() / size;
            delta = delta.min(avg);
        }
    }
    SccDecomposition {
        component_of,
        components,
        is_disjoint_union,
        delta,
    }
}

/// Strictly positive left null vector of the Laplacian with (1/N)Σv = 1 and
/// per-component mass |I_n|/N.
#[derive(Clone, Debug)]
pub struct PerronVector {
    pub values: Vec<f64>,
    /// ‖Lᵀ v‖∞ of the returned vector.
    pub residual: f64,
}

impl PerronVector {
    /// The canonical weights for balanced or symmetric topologies.
    pub fn uniform(n: usize) -> PerronVector {
        PerronVector {
            values: vec![1.0; n],
            residual: 0.0,
        }
    }
}

const PERRON_TOL: f64 = 1e-12;
const PERRON_MAX_ITER: usize = 100_000;

/// Dense null-space solve of Lᵀ restricted to one component: Gaussian
/// elimination with partial pivoting, smallest-pivot column as the free
/// variable.
fn perron_dense_component(a: &AdjacencyMatrix, comp: &[usize]) -> Result<Vec<f64>, Error> {
    let k = comp.len();
    // M = (D − A)ᵀ restricted to the component; the 1/N scale drops out of
    // the null space. M[r][c] = L[c][r] with L the restricted Laplacian.
    let mut m = vec![0.0; k * k];
    for (r, &i) in comp.iter().enumerate() {
        for (c, &j) in comp.iter().enumerate() {
            if r == c {
                let degree: f64 = comp.iter().filter(|&&l| l != j).map(|&l| a.get(j, l)).sum();
                m[r * k + c] = degree;
            } else {
                m[r * k + c] = -a.get(j, i);
            }
        }
    }

    // Forward elimination with row partial pivoting. The rank deficiency of
    // the component Laplacian cascades into the final position, so the
    // smallest pivot ends up in the last column, which becomes the free
    // variable.
    let mut rows_order: Vec<usize> = (0..k).collect();
    let mut mat = m;
    for step in 0..k {
        let (mut best_row, mut best_val) = (step, 0.0f64);
        for r in step..k {
            let v = mat[rows_order[r] * k + step].abs();
            if v > best_val {
                best_val = v;
                best_row = r;
            }
        }
        rows_order.swap(step, best_row);
        if best_val == 0.0 {
            continue;
        }
        let pr = rows_order[step];
        for r in (step + 1)..k {
            let rr = rows_order[r];
            let factor = mat[rr * k + step] / mat[pr * k + step];
            if factor != 0.0 {
                for c in step..k {
                    mat[rr * k + c] -= factor * mat[pr * k + c];
                }
            }
        }
    }
    let free = k - 1;
    let mut x = vec![0.0f64; k];
    x[free] = 1.0;
    for step in (0..free).rev() {
        let pr = rows_order[step];
        let mut rhs = 0.0;
        for c in (step + 1)..k {
            rhs -= mat[pr * k + c] * x[c];
        }
        let pivot = mat[pr * k + step];
        if pivot == 0.0 {
            return Err(Error::NonPositivePerron { agent: comp[step] });
        }
        x[step] = rhs / pivot;
    }
    if x.iter().all(|&v| v <= 0.0) {
        for v in &mut x {
            *v = -*v;
        }
    }
    Ok(x)
}

/// Perron weight vector of a topology that is a disjoint union of strongly
/// connected components: fixed-point iteration per component with a dense
/// null-space fallback.
pub fn perron_vector(a: &AdjacencyMatrix, dec: &SccDecomposition) -> Result<PerronVector, Error> {
    if !dec.is_disjoint_union {
        return Err(Error::NotDisjointUnion);
    }
    let n = a.n();
    let mut values = vec![0.0; n];
    for comp in &dec.components {
        let k = comp.len();
        let degrees: Vec<f64> = comp
            .iter()
            .map(|&i| comp.iter().map(|&j| a.get(i, j)).sum::<f64>())
            .collect();
        if let Some(pos) = degrees.iter().position(|&d| d == 0.0) {
            return Err(Error::ZeroInDegree { agent: comp[pos] });
        }
        let mut v = vec![1.0f64; k];
        let mut converged = false;
        for _ in 0..PERRON_MAX_ITER {
            // w_i = Σ_j a_ji v_j / Σ_j a_ij on the component.
            let mut w: Vec<f64> = (0..k)
                .map(|ci| {
                    let i = comp[ci];
                    let num: f64 = comp
                        .iter()
                        .enumerate()
                        .map(|(cj, &j)| a.get(j, i) * v[cj])
                        .sum();
                    num / degrees[ci]
                })
                .collect();
            let mean = w.iter().sum::<f64>() / k as f64;
            if mean <= 0.0 {
                return Err(Error::NonPositivePerron { agent: comp[0] });
            }
            for wi in &mut w {
                *wi /= mean;
            }
            let diff = v
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            v = w;
            if diff < PERRON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            v = perron_dense_component(a, comp)?;
            let mean = v.iter().sum::<f64>() / k as f64;
            for vi in &mut v {
                *vi /= mean;
            }
        }
        for (ci, &i) in comp.iter().enumerate() {
            if !(v[ci] > 0.0) || !v[ci].is_finite() {
                return Err(Error::NonPositivePerron { agent: i });
            }
            values[i] = v[ci];
        }
    }
    let residual = graph_laplacian(a).transpose_apply_inf_norm(&values);
    Ok(PerronVector { values, residual })
}

// ---------------------------------------------------------------------------
// Window averages, persistence and dwell time
// ---------------------------------------------------------------------------

/// Time average of the sampled adjacency over [t, t+τ]: exact one-point
/// evaluation per piece for piecewise-constant kernels, composite midpoint
/// with `time_quadrature` points per smooth piece otherwise.
pub fn window_average_adjacency(
    kernel: &TimeKernel,
    t: f64,
    tau: f64,
    n: usize,
    time_quadrature: usize,
) -> Result<AdjacencyMatrix, Error> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParam(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if kernel.meta.is_stationary {
        return Ok(sample_adjacency(
            kernel,
            t,
            n,
            crate::discretize::DEFAULT_QUADRATURE_ORDER,
        ));
    }
    // Pieces of [t, t+τ] cut at switch instants.
    let mut cuts = vec![t, t + tau];
    for s in kernel.switch_instants(t + tau) {
        if s > t + 1e-12 && s < t + tau - 1e-12 {
            cuts.push(s);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut acc = vec![0.0f64; n * n];
    let order = crate::discretize::DEFAULT_QUADRATURE_ORDER;
    for piece in cuts.windows(2) {
        let (p0, p1) = (piece[0], piece[1]);
        let len = p1 - p0;
        if kernel.meta.piecewise_constant_in_time {
            let sample = sample_adjacency(kernel, 0.5 * (p0 + p1), n, order);
            for (a, w) in acc.iter_mut().zip(sample.weights()) {
                *a += len * w;
            }
        } else {
            let q = time_quadrature.max(1);
            let h = len / q as f64;
            for m in 0..q {
                let s = p0 + (m as f64 + 0.5) * h;
                let sample = sample_adjacency(kernel, s, n, order);
                for (a, w) in acc.iter_mut().zip(sample.weights()) {
                    *a += h * w;
                }
            }
        }
    }
    for a in &mut acc {
        *a = (*a / tau).clamp(0.0, 1.0);
    }
    AdjacencyMatrix::new(n, acc, t)
}

/// Laplacian of the window-averaged kernel, i.e. (1/τ)∫ L^a(s) ds.
pub fn window_average_laplacian(
    kernel: &TimeKernel,
    t: f64,
    tau: f64,
    n: usize,
    time_quadrature: usize,
) -> Result<LaplacianMatrix, Error> {
    Ok(graph_laplacian(&window_average_adjacency(
        kernel,
        t,
        tau,
        n,
        time_quadrature,
    )?))
}

/// Sliding-window persistence functionals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PersistenceMode {
    /// (1/τ)∫ η(A(s)) ds ≥ μ.
    Scrambling,
    /// λ₂((1/τ)∫ L^a(s) ds) ≥ μ.
    Lambda2OfAverage,
    /// (1/τ)∫ λ₂(L(s)) ds ≥ μ.
    AverageOfLambda2,
    /// (1/τ)∫ d_i(s) ds ≥ μ per agent.
    InDegree,
    /// (1/τ)∫ λ₂(L_v(s)) ds ≥ μ.
    WeightedLambda2,
}

impl PersistenceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PersistenceMode::Scrambling => "scrambling",
            PersistenceMode::Lambda2OfAverage => "lambda2_of_average",
            PersistenceMode::AverageOfLambda2 => "average_of_lambda2",
            PersistenceMode::InDegree => "in_degree",
            PersistenceMode::WeightedLambda2 => "weighted_lambda2",
        }
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "scrambling" => PersistenceMode::Scrambling,
            "lambda2_of_average" => PersistenceMode::Lambda2OfAverage,
            "average_of_lambda2" => PersistenceMode::AverageOfLambda2,
            "in_degree" => PersistenceMode::InDegree,
            "weighted_lambda2" => PersistenceMode::WeightedLambda2,
            other => {
                return Err(Error::InvalidParam(format!(
                    "unknown persistence mode `{other}`"
                )))
            }
        })
    }
}

/// Estimated persistence level: the minimum over sampled window start times
/// of the window functional. A grid minimum, not a true infimum.
#[derive(Clone, Debug)]
pub struct PersistenceEstimate {
    pub mode: PersistenceMode,
    pub tau: f64,
    pub mu_estimate: f64,
}

impl PersistenceEstimate {
    pub fn satisfied_at_level(&self, mu: f64) -> bool {
        self.mu_estimate >= mu
    }
}

fn merged_time_grid(kernel: &TimeKernel, horizon: f64, grid_step: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let steps = (horizon / grid_step).ceil() as usize;
    for k in 0..=steps {
        grid.push((k as f64 * grid_step).min(horizon));
    }
    grid.extend(kernel.switch_instants(horizon));
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    grid
}

/// Cumulative trapezoid of samples (t_k, f_k), evaluated by linear
/// interpolation (exact for the piecewise-linear interpolant).
struct Cumulative {
    times: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Cumulative {
    fn build(times: &[f64], values: &[f64]) -> Cumulative {
        let mut cumulative = vec![0.0];
        for k in 1..times.len() {
            let add = 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
            cumulative.push(cumulative[k - 1] + add);
        }
        Cumulative {
            times: times.to_vec(),
            cumulative,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let idx = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.cumulative[i],
            Err(i) => i,
        };
        if idx == 0 {
            return self.cumulative[0];
        }
        if idx >= self.times.len() {
            return *self.cumulative.last().unwrap();
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let w = (t - t0) / (t1 - t0);
        self.cumulative[idx - 1] + w * (self.cumulative[idx] - self.cumulative[idx - 1])
    }
}

fn window_starts(kernel: &TimeKernel, tau: f64, horizon: f64, grid_step: f64) -> Vec<f64> {
    if kernel.meta.is_stationary {
        return vec![0.0];
    }
    // For periodic signals the window functional is period-invariant.
    let span = match kernel.meta.period {
        Some(p) => p.min(horizon - tau),
        None => horizon - tau,
    };
    let mut starts = Vec::new();
    let mut t = 0.0;
    while t <= span + 1e-12 {
        starts.push(t.min(horizon - tau));
        t += grid_step;
    }
    starts.push(horizon - tau);
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    starts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    starts
}

/// Estimates the persistence level μ of the selected window functional by
/// minimizing over window start times on a uniform grid.
pub fn persistence_check(
    kernel: &TimeKernel,
    n: usize,
    tau: f64,
    mode: PersistenceMode,
    horizon: f64,
    grid_step: f64,
    time_quadrature: usize,
) -> Result<PersistenceEstimate, Error> {
    if !(tau > 0.0) || tau > horizon {
        return Err(Error::InvalidParam(format!(
            "need 0 < tau <= horizon, got tau = {tau}, horizon = {horizon}"
        )));
    }
    if !(grid_step > 0.0) {
        return Err(Error::InvalidParam("grid_step must be positive".into()));
    }
    let order = crate::discretize::DEFAULT_QUADRATURE_ORDER;
    let starts = window_starts(kernel, tau, horizon, grid_step);

    let mu_estimate = match mode {
        PersistenceMode::Scrambling
        | PersistenceMode::AverageOfLambda2
        | PersistenceMode::WeightedLambda2 => {
            let scalar_at = |t: f64| -> Result<f64, Error> {
                let a = sample_adjacency(kernel, t, n, order);
                match mode {
                    PersistenceMode::Scrambling => Ok(scrambling(&a)),
                    PersistenceMode::AverageOfLambda2 => lambda2(&graph_laplacian(&a)),
                    PersistenceMode::WeightedLambda2 => {
                        let dec = scc_decompose(&a, DEFAULT_SCC_THRESHOLD);
                        if !dec.is_disjoint_union {
                            return Err(Error::NotDisjointUnion);
                        }
                        if dec.delta <= 0.0 {
                            // Connectivity has a component with vanishing
                            // in-degree; no weighted dissipation.
                            return Ok(0.0);
                        }
                        let v = perron_vector(&a, &dec)?;
                        lambda2_weighted(&graph_laplacian(&a), &v)
                    }
                    _ => unreachable!(),
                }
            };
            if kernel.meta.is_stationary {
                scalar_at(0.0)?
            } else {
                let sample_horizon = starts.last().unwrap() + tau;
                let grid = merged_time_grid(kernel, sample_horizon, grid_step);
                let values: Result<Vec<f64>, Error> = grid.iter().map(|&t| scalar_at(t)).collect();
                let cum = Cumulative::build(&grid, &values?);
                starts
                    .iter()
                    .map(|&t| (cum.eval(t + tau) - cum.eval(t)) / tau)
                    .fold(f64::INFINITY, f64::min)
            }
        }
        PersistenceMode::InDegree => {
            if kernel.meta.is_stationary {
                let a = sample_adjacency(kernel, 0.0, n, order);
                in_degree(&a).into_iter().fold(f64::INFINITY, f64::min)
            } else {
                let sample_horizon = starts.last().unwrap() + tau;
                let grid = merged_time_grid(kernel, sample_horizon, grid_step);
                let samples: Vec<Vec<f64>> = grid
                    .iter()
                    .map(|&t| in_degree(&sample_adjacency(kernel, t, n, order)))
                    .collect();
                let mut mu = f64::INFINITY;
                for agent in 0..n {
                    let values: Vec<f64> = samples.iter().map(|v| v[agent]).collect();
                    let cum = Cumulative::build(&grid, &values);
                    for &t in &starts {
                        mu = mu.min((cum.eval(t + tau) - cum.eval(t)) / tau);
                    }
                }
                mu
            }
        }
        PersistenceMode::Lambda2OfAverage => {
            let mut mu = f64::INFINITY;
            for &t in &starts {
                let l = window_average_laplacian(kernel, t, tau, n, time_quadrature)?;
                mu = mu.min(lambda2(&l)?);
            }
            mu
        }
    };
    Ok(PersistenceEstimate {
        mode,
        tau,
        mu_estimate,
    })
}

/// Dwell-time condition of the switched-topology consensus theorem:
/// (2/μν²)·log(1/ν) < τ_d.
pub fn dwell_check(mu: f64, nu: f64, tau_d: f64) -> bool {
    2.0 / (mu * nu * nu) * (1.0 / nu).ln() < tau_d
}

// ---------------------------------------------------------------------------
// Ψ_τ operator bounds
// ---------------------------------------------------------------------------

/// Outcome of the Ψ_τ quadratic-form bound check.
#[derive(Clone, Debug)]
pub struct PsiTauReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pass: bool,
    pub tolerance: f64,
}

/// Variance bilinear form 𝔹(x,y) = (1/N)Σ⟨x_i,y_i⟩ − ⟨x̄,ȳ⟩ for scalar
/// vectors.
pub fn variance_form(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let mx: f64 = x.iter().sum::<f64>() / n;
    let my: f64 = y.iter().sum::<f64>() / n;
    dot / n - mx * my
}

fn assemble_weighted_double_integral(
    kernel: &TimeKernel,
    phi: &NonlinKernel,
    traj: &Trajectory,
    idx: &[usize],
    t: f64,
    tau: f64,
) -> Result<Vec<f64>, Error> {
    // ∫_t^{t+τ} ∫_t^s L(σ,x(σ)) dσ ds = ∫_t^{t+τ} (t+τ−σ) L(σ,x(σ)) dσ,
    // by exchanging the order of integration.
    let n = traj.states[idx[0]].n();
    let order = crate::discretize::DEFAULT_QUADRATURE_ORDER;
    let mut acc = vec![0.0f64; n * n];
    for w in idx.windows(2) {
        let (k0, k1) = (w[0], w[1]);
        let (t0, t1) = (traj.times[k0], traj.times[k1]);
        let h = t1 - t0;
        for (k, tk) in [(k0, t0), (k1, t1)] {
            let a = sample_adjacency(kernel, tk, n, order);
            let l = nonlinear_laplacian(&a, phi, &traj.states[k])?;
            let weight = 0.5 * h * (t + tau - tk);
            for (dst, src) in acc.iter_mut().zip(l.entries()) {
                *dst += weight * src;
            }
        }
    }
    Ok(acc)
}

/// Checks the two-sided quadratic-form bounds of the persistence operator
/// Ψ_τ(t) = (1+c_φ)τ·Id − (1/τ)∫∫L(σ,x(σ)) on `samples` random mean-zero
/// probes. Requires a symmetric kernel and a trajectory covering [t, t+τ].
pub fn psi_tau_bounds_check(
    kernel: &TimeKernel,
    phi: &NonlinKernel,
    traj: &Trajectory,
    t: f64,
    tau: f64,
    samples: usize,
) -> Result<PsiTauReport, Error> {
    if !kernel.meta.is_symmetric {
        return Err(Error::AsymmetricKernel);
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParam("tau must be positive".into()));
    }
    let idx: Vec<usize> = (0..traj.len())
        .filter(|&k| traj.times[k] >= t - 1e-9 && traj.times[k] <= t + tau + 1e-9)
        .collect();
    if idx.len() < 3
        || traj.times[idx[0]] > t + 1e-6
        || traj.times[*idx.last().unwrap()] < t + tau - 1e-6
    {
        return Err(Error::InvalidParam(format!(
            "trajectory must cover [{t}, {}] with at least 3 records",
            t + tau
        )));
    }
    let n = traj.states[idx[0]].n();

    let full = assemble_weighted_double_integral(kernel, phi, traj, &idx, t, tau)?;
    // Half-resolution assembly drives the quadrature error estimate.
    let half_idx: Vec<usize> = idx
        .iter()
        .step_by(2)
        .copied()
        .chain(std::iter::once(*idx.last().unwrap()))
        .collect::<Vec<_>>();
    let mut half_idx_dedup = half_idx;
    half_idx_dedup.dedup();
    let half = assemble_weighted_double_integral(kernel, phi, traj, &half_idx_dedup, t, tau)?;

    let apply_psi = |m: &[f64], y: &[f64]| -> Vec<f64> {
        let scale = (1.0 + phi.c_phi) * tau;
        (0..n)
            .map(|i| {
                let my: f64 = (0..n).map(|j| m[i * n + j] * y[j]).sum();
                scale * y[i] - my / tau
            })
            .collect()
    };

    let mut rng = SplitMix64::new(0x5151_7AB0);
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut quad_err = 0.0f64;
    for _ in 0..samples.max(1) {
        let mut y: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let mean = y.iter().sum::<f64>() / n as f64;
        for v in &mut y {
            *v -= mean;
        }
        let denom = variance_form(&y, &y);
        if denom <= 1e-15 {
            continue;
        }
        let ratio = variance_form(&apply_psi(&full, &y), &y) / denom;
        let ratio_half = variance_form(&apply_psi(&half, &y), &y) / denom;
        quad_err = quad_err.max((ratio - ratio_half).abs());
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
    }
    let tolerance = 1e-6 + quad_err;
    let pass = min_ratio >= tau - tolerance && max_ratio <= (1.0 + phi.c_phi) * tau + tolerance;
    Ok(PsiTauReport {
        min_ratio,
        max_ratio,
        pass,
        tolerance,
    })
}

// ---------------------------------------------------------------------------
// Spectral report
// ---------------------------------------------------------------------------

/// Flat summary of the connectivity functionals of one sampled topology.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub eta: f64,
    pub lambda2: f64,
    pub lambda2_weighted: Option<f64>,
    pub delta: f64,
    pub n_components: usize,
    pub perron: Option<Vec<f64>>,
    pub residual: Option<f64>,
    pub persistence: Option<PersistenceEstimate>,
}

/// Computes every functional of the report on one sampled matrix; the Perron
/// block is filled only when the topology is a disjoint union of strongly
/// connected components with positive in-degrees.
pub fn spectral_report(
    a: &AdjacencyMatrix,
    persistence: Option<PersistenceEstimate>,
) -> Result<SpectralReport, Error> {
    let dec = scc_decompose(a, DEFAULT_SCC_THRESHOLD);
    let l = graph_laplacian(a);
    let lam2 = lambda2(&l)?;
    let (perron, residual, lambda2_w) = if dec.is_disjoint_union && dec.delta > 0.0 {
        match perron_vector(a, &dec) {
            Ok(v) => {
                let lw = lambda2_weighted(&l, &v)?;
                (Some(v.values.clone()), Some(v.residual), Some(lw))
            }
            Err(_) => (None, None, None),
        }
    } else {
        (None, None, None)
    };
    Ok(SpectralReport {
        eta: scrambling(a),
        lambda2: lam2,
        lambda2_weighted: lambda2_w,
        delta: dec.delta,
        n_components: dec.components.len(),
        perron,
        residual,
        persistence,
    })
}

impl SpectralReport {
    /// Flat JSON document; floats carry 17 significant digits.
    pub fn to_json(&self) -> String {
        let f = crate::fmt_f64;
        let mut out = String::from("{");
        out.push_str(&format!("\"eta\": {}", f(self.eta)));
        out.push_str(&format!(", \"lambda2\": {}", f(self.lambda2)));
        match self.lambda2_weighted {
            Some(v) => out.push_str(&format!(", \"lambda2_weighted\": {}", f(v))),
            None => out.push_str(", \"lambda2_weighted\": null"),
        }
        out.push_str(&format!(", \"delta\": {}", f(self.delta)));
        out.push_str(&format!(", \"n_components\": {}", self.n_components));
        match &self.perron {
            Some(v) => {
                let items: Vec<String> = v.iter().map(|&x| f(x)).collect();
                out.push_str(&format!(", \"perron\": [{}]", items.join(", ")));
            }
            None => out.push_str(", \"perron\": null"),
        }
        match self.residual {
            Some(v) => out.push_str(&format!(", \"residual\": {}", f(v))),
            None => out.push_str(", \"residual\": null"),
        }
        match &self.persistence {
            Some(p) => out.push_str(&format!(
                ", \"persistence\": {{\"mode\": \"{}\", \"tau\": {}, \"mu_estimate\": {}}}",
                p.mode.as_str(),
                f(p.tau),
                f(p.mu_estimate)
            )),
            None => out.push_str(", \"persistence\": null"),
        }
        out.push('}');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{builtin_kernel, KernelParams, TimeKernel};
    use crate::rng::SplitMix64;

    fn random_adjacency(n: usize, seed: u64) -> AdjacencyMatrix {
        let mut rng = SplitMix64::new(seed);
        AdjacencyMatrix::new(n, (0..n * n).map(|_| rng.next_f64()).collect(), 0.0).unwrap()
    }

    #[test]
    fn scrambling_of_ones_and_identity() {
        let ones = AdjacencyMatrix::new(3, vec![1.0; 9], 0.0).unwrap();
        assert_eq!(scrambling(&ones), 1.0);
        let eye = AdjacencyMatrix::new(3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 0.0)
            .unwrap();
        assert_eq!(scrambling(&eye), 0.0);
    }

    #[test]
    fn scrambling_matches_triple_loop_oracle() {
        for seed in 0..20u64 {
            let a = random_adjacency(5, 0x100 + seed);
            // Independent oracle: all ordered pairs, k-sum in reverse order.
            let mut oracle = f64::INFINITY;
            for i in 0..5 {
                for j in 0..5 {
                    let mut acc = 0.0;
                    for k in (0..5).rev() {
                        acc += a.get(i, k).min(a.get(j, k));
                    }
                    oracle = oracle.min(acc / 5.0);
                }
            }
            assert!((scrambling(&a) - oracle).abs() < 1e-15);
        }
    }

    #[test]
    fn reparam_examples() {
        let ones = AdjacencyMatrix::new(3, vec![1.0; 9], 0.0).unwrap();
        let r = stochastic_reparam(&ones);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(r.get(i, j), 1.0);
            }
            assert_eq!(r.row_sum(i), 3.0);
        }
        let zero = AdjacencyMatrix::new(2, vec![0.0; 4], 0.0).unwrap();
        let r = stochastic_reparam(&zero);
        assert_eq!(r.get(0, 0), 2.0);
        assert_eq!(r.get(1, 1), 2.0);
    }

    #[test]
    fn reparam_preserves_scrambling_bitwise() {
        // Unit diagonal per the digraph adjacency convention; the identity
        // η(Ã) = η(A) rests on a_ii ≥ every competing weight.
        for seed in 0..100u64 {
            let mut rng = SplitMix64::new(0x200 + seed);
            let n = 4;
            let mut w: Vec<f64> = (0..n * n).map(|_| rng.next_f64()).collect();
            for i in 0..n {
                w[i * n + i] = 1.0;
            }
            let a = AdjacencyMatrix::new(n, w, 0.0).unwrap();
            let r = stochastic_reparam(&a);
            assert_eq!(
                scrambling(&a).to_bits(),
                r.scrambling().to_bits(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn unit_diagonal_form_agrees_on_unit_diagonal_matrices() {
        let mut rng = SplitMix64::new(0x321);
        for _ in 0..50 {
            let n = 6;
            let raw =
                AdjacencyMatrix::new(n, (0..n * n).map(|_| rng.next_f64()).collect(), 0.0).unwrap();
            let a = raw.with_unit_diagonal();
            for i in 0..n {
                assert_eq!(a.get(i, i), 1.0);
            }
            assert!((scrambling(&a) - scrambling_unit_diagonal_form(&a)).abs() < 1e-15);
        }
    }

    #[test]
    fn scrambling_zero_for_disjoint_supports() {
        let a = AdjacencyMatrix::new(
            4,
            vec![
                1.0, 1.0, 0.0, 0.0, //
                1.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 1.0, //
                0.0, 0.0, 1.0, 1.0,
            ],
            0.0,
        )
        .unwrap();
        assert_eq!(scrambling(&a), 0.0);
    }

    #[test]
    fn laplacian_of_all_ones_two_agents() {
        let a = AdjacencyMatrix::new(2, vec![1.0; 4], 0.0).unwrap();
        let l = graph_laplacian(&a);
        assert_eq!(l.get(0, 0), 0.5);
        assert_eq!(l.get(0, 1), -0.5);
        assert_eq!(l.get(1, 0), -0.5);
        assert_eq!(l.get(1, 1), 0.5);
    }

    #[test]
    fn nonlinear_laplacian_with_unit_phi_reduces_to_linear() {
        let a = random_adjacency(6, 0x400);
        let x = State::new(6, 2, (0..12).map(|k| k as f64 * 0.1).collect()).unwrap();
        let linear = graph_laplacian(&a);
        let nonlinear = nonlinear_laplacian(&a, &NonlinKernel::constant_one(), &x).unwrap();
        assert_eq!(linear.entries(), nonlinear.entries());
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        for seed in 0..20u64 {
            let a = random_adjacency(40, 0x500 + seed);
            let l = graph_laplacian(&a);
            for i in 0..40 {
                assert!(l.row_sum(i).abs() <= 1e-14, "row {i}: {}", l.row_sum(i));
            }
        }
    }

    #[test]
    fn lambda2_golden_values() {
        // Complete graph: identity on the mean-zero subspace.
        let complete = AdjacencyMatrix::new(8, vec![1.0; 64], 0.0).unwrap();
        let lam = lambda2(&graph_laplacian(&complete)).unwrap();
        assert!((lam - 1.0).abs() <= 1e-10, "complete λ₂ = {lam}");

        // Two disconnected blocks: indicator-difference vector in the kernel.
        let mut w = vec![0.0; 36];
        for i in 0..6 {
            for j in 0..6 {
                if (i < 3) == (j < 3) {
                    w[i * 6 + j] = 1.0;
                }
            }
        }
        let blocks = AdjacencyMatrix::new(6, w, 0.0).unwrap();
        let lam = lambda2(&graph_laplacian(&blocks)).unwrap();
        assert!(lam.abs() <= 1e-12, "two-block λ₂ = {lam}");

        // Path graph on 3 vertices: unscaled spectrum {0,1,3}, so λ₂ = 1/3.
        let path = AdjacencyMatrix::new(3, vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0], 0.0)
            .unwrap();
        let lam = lambda2(&graph_laplacian(&path)).unwrap();
        assert!((lam - 1.0 / 3.0).abs() <= 1e-9, "path λ₂ = {lam}");
    }

    #[test]
    fn lambda2_is_nonnegative_for_symmetric_matrices() {
        let mut rng = SplitMix64::new(0x600);
        for _ in 0..30 {
            let n = 10;
            let mut w = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = rng.next_f64();
                    w[i * n + j] = v;
                    w[j * n + i] = v;
                }
            }
            let a = AdjacencyMatrix::new(n, w, 0.0).unwrap();
            assert!(lambda2(&graph_laplacian(&a)).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn scc_examples() {
        let ones = AdjacencyMatrix::new(3, vec![1.0; 9], 0.0).unwrap();
        let dec = scc_decompose(&ones, DEFAULT_SCC_THRESHOLD);
        assert_eq!(dec.components.len(), 1);
        assert!(dec.is_disjoint_union);
        assert_eq!(dec.delta, 1.0);

        let mut w = vec![0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                if (i < 2) == (j < 2) {
                    w[i * 4 + j] = 1.0;
                }
            }
        }
        let blocks = AdjacencyMatrix::new(4, w, 0.0).unwrap();
        let dec = scc_decompose(&blocks, DEFAULT_SCC_THRESHOLD);
        assert_eq!(dec.components.len(), 2);
        assert!(dec.is_disjoint_union);
        assert_eq!(dec.components[0], vec![0, 1]);
        assert_eq!(dec.components[1], vec![2, 3]);
    }

    fn reachability_closure(a: &AdjacencyMatrix, threshold: f64) -> Vec<Vec<bool>> {
        let n = a.n();
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            reach[i][i] = true;
            for j in 0..n {
                if a.get(i, j) > threshold {
                    reach[i][j] = true;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        reach
    }

    #[test]
    fn directed_cycle_scc_vs_reachability_oracle() {
        let mut w = vec![0.0; 9];
        for i in 0..3 {
            w[i * 3 + (i + 1) % 3] = 1.0;
        }
        let cycle = AdjacencyMatrix::new(3, w.clone(), 0.0).unwrap();
        let dec = scc_decompose(&cycle, DEFAULT_SCC_THRESHOLD);
        assert_eq!(dec.components.len(), 1);

        // Deleting one edge breaks the cycle into three components.
        w[2 * 3] = 0.0;
        let broken = AdjacencyMatrix::new(3, w, 0.0).unwrap();
        let dec = scc_decompose(&broken, DEFAULT_SCC_THRESHOLD);
        assert_eq!(dec.components.len(), 3);
        assert!(!dec.is_disjoint_union);

        // Oracle: mutual reachability classes.
        for a in [&cycle, &broken] {
            let dec = scc_decompose(a, DEFAULT_SCC_THRESHOLD);
            let reach = reachability_closure(a, DEFAULT_SCC_THRESHOLD);
            for i in 0..3 {
                for j in 0..3 {
                    let together = reach[i][j] && reach[j][i];
                    assert_eq!(
                        dec.component_of[i] == dec.component_of[j],
                        together,
                        "pair ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn perron_of_balanced_matrix_is_uniform() {
        let mut rng = SplitMix64::new(0x700);
        for _ in 0..20 {
            let n = 8;
            // Symmetric core plus a circulant antisymmetric part keeps the
            // row and column sums equal while breaking symmetry.
            let mut w = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = rng.next_range(0.2, 0.8);
                    w[i * n + j] = v;
                    w[j * n + i] = v;
                }
            }
            for i in 0..n {
                w[i * n + (i + 1) % n] += 0.1;
                w[((i + 1) % n) * n + i] -= 0.1;
            }
            let a = AdjacencyMatrix::new(n, w, 0.0).unwrap();
            let dec = scc_decompose(&a, DEFAULT_SCC_THRESHOLD);
            let v = perron_vector(&a, &dec).unwrap();
            for &vi in &v.values {
                assert!((vi - 1.0).abs() <= 1e-10);
            }
            assert!(v.residual <= 1e-12);
        }
    }

    #[test]
    fn perron_strongly_connected_cross_checked_against_dense_solver() {
        let mut rng = SplitMix64::new(0x800);
        for trial in 0..20 {
            let n = 6;
            let mut w: Vec<f64> = (0..n * n).map(|_| rng.next_f64() * 0.8).collect();
            for i in 0..n {
                w[i * n + (i + 1) % n] = 0.5 + 0.5 * rng.next_f64();
            }
            let a = AdjacencyMatrix::new(n, w, 0.0).unwrap();
            let dec = scc_decompose(&a, DEFAULT_SCC_THRESHOLD);
            assert_eq!(dec.components.len(), 1, "trial {trial}");
            let v = perron_vector(&a, &dec).unwrap();
            assert!(v.residual <= 1e-8, "residual {}", v.residual);
            assert!(v.values.iter().all(|&x| x > 0.0));
            assert!((v.values.iter().sum::<f64>() / n as f64 - 1.0).abs() <= 1e-10);

            let comp: Vec<usize> = (0..n).collect();
            let mut dense = perron_dense_component(&a, &comp).unwrap();
            let mean = dense.iter().sum::<f64>() / n as f64;
            for d in &mut dense {
                *d /= mean;
            }
            for (x, y) in v.values.iter().zip(&dense) {
                assert!((x - y).abs() <= 1e-8, "fixed point {x} vs dense {y}");
            }
        }
    }

    #[test]
    fn perron_normalizes_per_component() {
        // Block diagonal with two asymmetric strongly connected blocks of
        // different sizes; each component's weights must average to 1.
        let mut rng = SplitMix64::new(0xA11);
        let sizes = [3usize, 5usize];
        let n = 8;
        let mut w = vec![0.0; n * n];
        let mut offset = 0;
        for &k in &sizes {
            for i in 0..k {
                for j in 0..k {
                    w[(offset + i) * n + (offset + j)] = 0.1 + 0.9 * rng.next_f64();
                }
            }
            offset += k;
        }
        let a = AdjacencyMatrix::new(n, w, 0.0).unwrap();
        let dec = scc_decompose(&a, DEFAULT_SCC_THRESHOLD);
        assert_eq!(dec.components.len(), 2);
        assert!(dec.is_disjoint_union);
        let v = perron_vector(&a, &dec).unwrap();
        for comp in &dec.components {
            let mean: f64 = comp.iter().map(|&i| v.values[i]).sum::<f64>() / comp.len() as f64;
            assert!((mean - 1.0).abs() <= 1e-12, "component mean {mean}");
        }
        assert!(v.residual <= 1e-10);
        // Not uniform across components in general.
        assert!((v.values.iter().sum::<f64>() / n as f64 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn perron_errors() {
        // Two blocks joined by a one-way edge: not a disjoint union.
        let mut w = vec![0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                if (i < 2) == (j < 2) {
                    w[i * 4 + j] = 1.0;
                }
            }
        }
        // One-way edge from agent 0 into the second block.
        w[3] = 0.5;
        let a = AdjacencyMatrix::new(4, w, 0.0).unwrap();
        let dec = scc_decompose(&a, DEFAULT_SCC_THRESHOLD);
        assert!(!dec.is_disjoint_union);
        assert!(matches!(
            perron_vector(&a, &dec),
            Err(Error::NotDisjointUnion)
        ));

        // Zero matrix: singleton components without in-degree.
        let zero = AdjacencyMatrix::new(2, vec![0.0; 4], 0.0).unwrap();
        let dec = scc_decompose(&zero, DEFAULT_SCC_THRESHOLD);
        assert!(dec.is_disjoint_union);
        assert!(matches!(
            perron_vector(&zero, &dec),
            Err(Error::ZeroInDegree { .. })
        ));
    }

    #[test]
    fn weighted_lambda2_reduces_to_plain_for_uniform_weights() {
        let a = random_adjacency(7, 0x900);
        let l = graph_laplacian(&a);
        let v = PerronVector::uniform(7);
        assert_eq!(lambda2(&l).unwrap(), lambda2_weighted(&l, &v).unwrap());
        let complete = AdjacencyMatrix::new(5, vec![1.0; 25], 0.0).unwrap();
        let lc = graph_laplacian(&complete);
        assert!((lambda2_weighted(&lc, &PerronVector::uniform(5)).unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn directed_cycle_with_self_loops_has_positive_weighted_connectivity() {
        let mut w = vec![0.0; 9];
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
            w[i * 3 + (i + 1) % 3] = 1.0;
        }
        let a = AdjacencyMatrix::new(3, w, 0.0).unwrap();
        let dec = scc_decompose(&a, DEFAULT_SCC_THRESHOLD);
        let v = perron_vector(&a, &dec).unwrap();
        let lam = lambda2_weighted(&graph_laplacian(&a), &v).unwrap();
        // Circulant: λ₂(L^sym) = 1/3 − (1/3)cos(2π/3) = 1/2.
        assert!((lam - 0.5).abs() <= 1e-9, "λ₂(L_v) = {lam}");
        assert!(lam > 0.0);
    }

    #[test]
    fn in_degree_examples() {
        let ones = AdjacencyMatrix::new(4, vec![1.0; 16], 0.0).unwrap();
        assert!(in_degree(&ones).iter().all(|&d| d == 1.0));
        let zero = AdjacencyMatrix::new(3, vec![0.0; 9], 0.0).unwrap();
        assert!(in_degree(&zero).iter().all(|&d| d == 0.0));
        let cycle = builtin_kernel("balanced_cycle", KernelParams::default()).unwrap();
        let a = sample_adjacency(&cycle, 0.0, 64, 4);
        for d in in_degree(&a) {
            assert!((d - 0.125).abs() <= 2e-2, "in-degree {d}");
        }
    }

    #[test]
    fn window_average_of_stationary_kernel_is_its_own_laplacian() {
        let k = builtin_kernel("half_connected", KernelParams::default()).unwrap();
        let l = window_average_laplacian(&k, 0.0, 5.0, 16, 8).unwrap();
        let direct = graph_laplacian(&sample_adjacency(&k, 0.0, 16, 4));
        assert_eq!(l.entries(), direct.entries());
    }

    #[test]
    fn window_average_of_switch_kernel_covers_the_band() {
        let params = KernelParams {
            period: 40.0,
            bands: 4,
        };
        let k = builtin_kernel("symmetric_switch", params).unwrap();
        let n = 16;
        let avg = window_average_adjacency(&k, 0.0, 40.0, n, 400).unwrap();
        // Averaged over a period the sliding block becomes a circulant band
        // with entries (1/n − |i−j|)₊ in label distance; on the band
        // |i−j| ≤ 1/(2n) entries stay ≥ 1/n².
        for i in 0..n {
            for j in 0..n {
                let dist = ((i as f64 - j as f64).abs() / n as f64)
                    .min(1.0 - (i as f64 - j as f64).abs() / n as f64);
                if dist <= 1.0 / 8.0 {
                    assert!(
                        avg.get(i, j) >= 1.0 / 16.0 - 2e-2,
                        "entry ({i},{j}) = {}",
                        avg.get(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn window_average_of_two_phase_signal_is_exact_convex_combination() {
        let text = "N 2 T_SAMPLES 2\n1 0 0 1\n0 1 1 0\n";
        let k = TimeKernel::from_grid_str(text, "mem").unwrap();
        // Window [0.5, 1.5]: half of block 0 and half of block 1.
        let avg = window_average_adjacency(&k, 0.5, 1.0, 2, 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(avg.get(i, j), 0.5, "({i},{j})");
            }
        }
    }

    #[test]
    fn persistence_of_complete_kernel_is_one_in_scrambling_mode() {
        let k = builtin_kernel("complete", KernelParams::default()).unwrap();
        let p = persistence_check(&k, 10, 1.0, PersistenceMode::Scrambling, 10.0, 0.5, 4).unwrap();
        assert_eq!(p.mu_estimate, 1.0);
        assert!(p.satisfied_at_level(1.0));
    }

    #[test]
    fn persistence_of_zero_kernel_vanishes_in_every_mode() {
        let zero = TimeKernel::from_grid_str("N 2 T_SAMPLES 1\n0 0 0 0\n", "mem").unwrap();
        for mode in [
            PersistenceMode::Scrambling,
            PersistenceMode::Lambda2OfAverage,
            PersistenceMode::AverageOfLambda2,
            PersistenceMode::InDegree,
            PersistenceMode::WeightedLambda2,
        ] {
            let p = persistence_check(&zero, 4, 1.0, mode, 5.0, 0.5, 4).unwrap();
            assert!(
                p.mu_estimate.abs() <= 1e-12,
                "{mode:?} gave {}",
                p.mu_estimate
            );
        }
    }

    #[test]
    fn leader_scrambling_persistence_is_positive_for_wide_windows() {
        let k = builtin_kernel(
            "leader",
            KernelParams {
                period: 10.0,
                bands: 10,
            },
        )
        .unwrap();
        let p = persistence_check(&k, 40, 2.0, PersistenceMode::Scrambling, 40.0, 0.1, 4).unwrap();
        assert!(p.mu_estimate > 0.0, "mu = {}", p.mu_estimate);
        // The window min is the dead-zone window: (τ − T/n)·(1/2n)/τ = 0.025.
        assert!(
            (p.mu_estimate - 0.025).abs() <= 5e-3,
            "mu = {}",
            p.mu_estimate
        );
    }

    #[test]
    fn persistence_rejects_bad_windows() {
        let k = builtin_kernel("complete", KernelParams::default()).unwrap();
        assert!(persistence_check(&k, 4, 2.0, PersistenceMode::Scrambling, 1.0, 0.1, 4).is_err());
        assert!(persistence_check(&k, 4, 0.0, PersistenceMode::Scrambling, 1.0, 0.1, 4).is_err());
    }

    #[test]
    fn dwell_check_examples() {
        assert!(dwell_check(0.3, 1.0, 0.1));
        // μ = 0.5, ν = 0.5: (2/0.125)·log 2 ≈ 11.09 > 1.
        assert!(!dwell_check(0.5, 0.5, 1.0));
        // μ = 1, ν = 0.9: (2/0.81)·0.1054 ≈ 0.260 < 1.
        assert!(dwell_check(1.0, 0.9, 1.0));
    }

    #[test]
    fn spectral_report_json_shape() {
        let a = AdjacencyMatrix::new(2, vec![1.0; 4], 0.0).unwrap();
        let report = spectral_report(&a, None).unwrap();
        let json = report.to_json();
        assert!(json.starts_with('{') && json.ends_with('}'));
        for key in [
            "eta",
            "lambda2",
            "lambda2_weighted",
            "delta",
            "n_components",
            "perron",
            "residual",
            "persistence",
        ] {
            assert!(
                json.contains(&format!("\"{key}\"")),
                "missing {key} in {json}"
            );
        }
    }
}
