//! Fixed-step RK4 integration of the semi-discretized dynamics
//! ẋ = −L(t,x)x with per-step diagnostics.
//!
//! The interaction matrix is resampled from the kernel at every stage time.
//! When the kernel carries a switching schedule (or a period), step
//! boundaries snap to the switch instants so no step straddles a jump of
//! the signal; within a panel steps are uniform and land exactly on the
//! panel ends. Stationary kernels are sampled once.

use crate::discretize::{sample_adjacency, AdjacencyMatrix, State};
use crate::kernel::{NonlinKernel, TimeKernel};
use crate::spectral::scrambling;
use crate::Error;

/// Integration parameters.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Diagnostics are recorded every this many steps (panel boundaries and
    /// the final time are always recorded).
    pub record_stride: usize,
    /// Snap step boundaries to the kernel's switch instants.
    pub align_to_switches: bool,
    /// Midpoint order used when resampling the kernel at stage times.
    pub quadrature_order: usize,
    /// Accumulate ∫₀ᵗ η(A(s)) ds alongside the trajectory with per-step
    /// Simpson increments on the stage matrices.
    pub track_scrambling: bool,
    /// Strictly positive weights with mean 1; enables the weighted
    /// diagnostics columns.
    pub weights: Option<Vec<f64>>,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<SolverConfig, Error> {
        if !(dt > 0.0) || !(t_end > 0.0) {
            return Err(Error::InvalidParam(format!(
                "dt = {dt}, t_end = {t_end} must be positive"
            )));
        }
        if dt > t_end {
            return Err(Error::InvalidParam(format!(
                "dt = {dt} exceeds t_end = {t_end}"
            )));
        }
        Ok(SolverConfig {
            dt,
            t_end,
            record_stride: 1,
            align_to_switches: true,
            quadrature_order: crate::discretize::DEFAULT_QUADRATURE_ORDER,
            track_scrambling: false,
            weights: None,
        })
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn with_track_scrambling(mut self, on: bool) -> Self {
        self.track_scrambling = on;
        self
    }

    pub fn with_weights(mut self, weights: Option<Vec<f64>>) -> Self {
        self.weights = weights;
        self
    }

    /// RK4 global-error heuristic used by the invariant checks: 10·dt⁴·t.
    pub fn integrator_tolerance(&self, t: f64) -> f64 {
        10.0 * self.dt.powi(4) * t
    }
}

/// Per-record-time diagnostics.
#[derive(Clone, Debug)]
pub struct DiagnosticsRow {
    pub diameter: f64,
    pub std_dev: f64,
    pub weighted_std_dev: Option<f64>,
    pub barycenter: Vec<f64>,
    pub weighted_barycenter: Option<Vec<f64>>,
    pub linf_norm: f64,
}

/// Time grid, recorded states and diagnostics of one integrated run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub diagnostics: Vec<DiagnosticsRow>,
    /// Cumulative ∫₀ᵗ η(A(s)) ds at the record times, when tracked.
    pub scrambling_integral: Option<Vec<f64>>,
    /// Nominal step used by the run (tolerance heuristics).
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }

    /// 10·dt⁴·t, the RK4 global-error heuristic at time t.
    pub fn integrator_tolerance(&self, t: f64) -> f64 {
        10.0 * self.dt.powi(4) * t
    }
}

/// Right-hand side of the discrete dynamics:
/// velocity_i = (1/N) Σ_j a_ij φ(|x_i − x_j|)(x_j − x_i).
pub fn drift(a: &AdjacencyMatrix, phi: &NonlinKernel, x: &State) -> Result<State, Error> {
    if a.n() != x.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("state with {} agents", a.n()),
            got: format!("{}", x.n()),
        });
    }
    let n = x.n();
    let d = x.dim();
    let inv_n = 1.0 / n as f64;
    let mut velocity = vec![0.0; n * d];
    for i in 0..n {
        let xi = x.agent(i);
        let row = a.row(i);
        let vi = &mut velocity[i * d..(i + 1) * d];
        for j in 0..n {
            let w = row[j];
            if w == 0.0 {
                continue;
            }
            let xj = x.agent(j);
            let mut dist2 = 0.0;
            for c in 0..d {
                let diff = xi[c] - xj[c];
                dist2 += diff * diff;
            }
            let coeff = w * phi.eval(dist2.sqrt());
            for c in 0..d {
                vi[c] += coeff * (xj[c] - xi[c]);
            }
        }
        for c in 0..d {
            vi[c] *= inv_n;
        }
    }
    State::new(n, d, velocity)
}

/// Maximum pairwise Euclidean distance (O(N²)).
pub fn diameter(x: &State) -> f64 {
    let n = x.n();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.max(x.distance(i, j));
        }
    }
    best
}

/// The pair realizing the diameter (first found).
pub fn diameter_pair(x: &State) -> (usize, usize) {
    let n = x.n();
    let (mut bi, mut bj, mut best) = (0, 0, -1.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = x.distance(i, j);
            if d > best {
                best = d;
                bi = i;
                bj = j;
            }
        }
    }
    (bi, bj)
}

fn validate_weights(x: &State, v: &[f64]) -> Result<(), Error> {
    if v.len() != x.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} weights", x.n()),
            got: format!("{}", v.len()),
        });
    }
    if v.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidParam(
            "weights must be strictly positive".into(),
        ));
    }
    let mean: f64 = v.iter().sum::<f64>() / v.len() as f64;
    if (mean - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParam(format!(
            "weights must average to 1, got mean {mean}"
        )));
    }
    Ok(())
}

fn moments(x: &State, v: Option<&[f64]>) -> (Vec<f64>, f64) {
    let n = x.n();
    let d = x.dim();
    let inv_n = 1.0 / n as f64;
    let mut mean = vec![0.0; d];
    let mut second = 0.0;
    for i in 0..n {
        let w = v.map_or(1.0, |v| v[i]);
        let xi = x.agent(i);
        let mut norm2 = 0.0;
        for c in 0..d {
            mean[c] += w * xi[c];
            norm2 += xi[c] * xi[c];
        }
        second += w * norm2;
    }
    for c in 0..d {
        mean[c] *= inv_n;
    }
    second *= inv_n;
    (mean, second)
}

/// Standard deviation X = √((1/(2N²)) Σ_{ij} |x_i − x_j|²), the L² distance
/// to the consensus manifold under the (1/N)-weighted inner product.
pub fn std_dev(x: &State) -> f64 {
    let (mean, second) = moments(x, None);
    let mean2: f64 = mean.iter().map(|m| m * m).sum();
    (second - mean2).max(0.0).sqrt()
}

/// Weighted standard deviation X_v = √((1/(2N²)) Σ_{ij} v_i v_j |x_i − x_j|²)
/// for strictly positive weights with (1/N)Σv = 1.
pub fn weighted_std_dev(x: &State, v: &[f64]) -> Result<f64, Error> {
    validate_weights(x, v)?;
    let (mean, second) = moments(x, Some(v));
    let mean2: f64 = mean.iter().map(|m| m * m).sum();
    Ok((second - mean2).max(0.0).sqrt())
}

/// Barycenter x̄ = (1/N) Σ x_i.
pub fn barycenter(x: &State) -> Vec<f64> {
    moments(x, None).0
}

/// Weighted barycenter (1/N) Σ v_i x_i.
pub fn weighted_barycenter(x: &State, v: &[f64]) -> Result<Vec<f64>, Error> {
    validate_weights(x, v)?;
    Ok(moments(x, Some(v)).0)
}

/// max_i |x_i| with the per-agent Euclidean norm.
pub fn linf_norm(x: &State) -> f64 {
    (0..x.n())
        .map(|i| x.agent(i).iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max)
}

/// L² distance (1/N-weighted) between the state and a constant point.
pub fn l2_distance_to_point(x: &State, point: &[f64]) -> f64 {
    let n = x.n();
    let mut acc = 0.0;
    for i in 0..n {
        let xi = x.agent(i);
        acc += xi
            .iter()
            .zip(point)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    (acc / n as f64).sqrt()
}

/// L∞ distance between the state and a constant point.
pub fn linf_distance_to_point(x: &State, point: &[f64]) -> f64 {
    (0..x.n())
        .map(|i| {
            x.agent(i)
                .iter()
                .zip(point)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0f64, f64::max)
}

fn diagnostics_row(x: &State, weights: Option<&[f64]>) -> Result<DiagnosticsRow, Error> {
    let (weighted_std_dev_v, weighted_barycenter_v) = match weights {
        Some(v) => (
            Some(weighted_std_dev(x, v)?),
            Some(weighted_barycenter(x, v)?),
        ),
        None => (None, None),
    };
    Ok(DiagnosticsRow {
        diameter: diameter(x),
        std_dev: std_dev(x),
        weighted_std_dev: weighted_std_dev_v,
        barycenter: barycenter(x),
        weighted_barycenter: weighted_barycenter_v,
        linf_norm: linf_norm(x),
    })
}

struct StageSample {
    matrix: AdjacencyMatrix,
    eta: Option<f64>,
}

struct Sampler<'a> {
    kernel: &'a TimeKernel,
    n: usize,
    order: usize,
    track_eta: bool,
    stationary: Option<StageSample>,
}

impl<'a> Sampler<'a> {
    fn new(kernel: &'a TimeKernel, n: usize, order: usize, track_eta: bool) -> Self {
        let stationary = kernel.meta.is_stationary.then(|| {
            let matrix = sample_adjacency(kernel, 0.0, n, order);
            let eta = track_eta.then(|| scrambling(&matrix));
            StageSample { matrix, eta }
        });
        Sampler {
            kernel,
            n,
            order,
            track_eta,
            stationary,
        }
    }

    fn sample(&self, t: f64) -> StageSample {
        if let Some(s) = &self.stationary {
            return StageSample {
                matrix: s.matrix.clone(),
                eta: s.eta,
            };
        }
        let matrix = sample_adjacency(self.kernel, t, self.n, self.order);
        let eta = self.track_eta.then(|| scrambling(&matrix));
        StageSample { matrix, eta }
    }
}

fn axpy_state(x: &State, k: &State, h: f64) -> State {
    let mut out = x.clone();
    for (o, v) in out.positions_mut().iter_mut().zip(k.positions()) {
        *o += h * v;
    }
    out
}

/// Integrates the dynamics from `x0` over [0, cfg.t_end].
pub fn integrate(
    kernel: &TimeKernel,
    phi: &NonlinKernel,
    x0: &State,
    cfg: &SolverConfig,
) -> Result<Trajectory, Error> {
    if let Some(v) = &cfg.weights {
        validate_weights(x0, v)?;
    }

    // Panel boundaries: switch instants snapped into the grid.
    let mut breakpoints = vec![0.0];
    if cfg.align_to_switches {
        for s in kernel.switch_instants(cfg.t_end) {
            if s > 1e-12 && s < cfg.t_end - 1e-12 {
                breakpoints.push(s);
            }
        }
    }
    breakpoints.push(cfg.t_end);
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let sampler = Sampler::new(kernel, x0.n(), cfg.quadrature_order, cfg.track_scrambling);
    let weights = cfg.weights.as_deref();

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        diagnostics: Vec::new(),
        scrambling_integral: cfg.track_scrambling.then(Vec::new),
        dt: cfg.dt,
    };
    let record =
        |t: f64, x: &State, eta_integral: f64, traj: &mut Trajectory| -> Result<(), Error> {
            if let Some(last) = traj.times.last() {
                if (t - last).abs() < 1e-15 {
                    return Ok(());
                }
            }
            traj.times.push(t);
            traj.states.push(x.clone());
            traj.diagnostics.push(diagnostics_row(x, weights)?);
            if let Some(acc) = traj.scrambling_integral.as_mut() {
                acc.push(eta_integral);
            }
            Ok(())
        };

    let mut x = x0.clone();
    let mut eta_integral = 0.0;
    let mut start_sample = sampler.sample(0.0);
    let mut global_step = 0usize;
    record(0.0, &x, eta_integral, &mut traj)?;

    let panel_count = breakpoints.len() - 1;
    for (panel_idx, panel) in breakpoints.windows(2).enumerate() {
        let (b0, b1) = (panel[0], panel[1]);
        let steps = ((b1 - b0) / cfg.dt - 1e-9).ceil().max(1.0) as usize;
        let h = (b1 - b0) / steps as f64;
        // Interior panel ends are switch instants: the end stage of the
        // last step must stay on its own piece, so it samples the left
        // limit; the next panel then restarts from the right limit.
        let ends_at_switch = panel_idx + 1 < panel_count && !kernel.meta.is_stationary;
        for k in 0..steps {
            let t = b0 + k as f64 * h;
            let t_mid = t + 0.5 * h;
            let t_next = if k + 1 == steps {
                b1
            } else {
                b0 + (k + 1) as f64 * h
            };
            let last_step = k + 1 == steps;

            let mid_sample = sampler.sample(t_mid);
            let end_sample = if last_step && ends_at_switch {
                sampler.sample(t_next - 1e-9)
            } else {
                sampler.sample(t_next)
            };

            let k1 = drift(&start_sample.matrix, phi, &x)?;
            let k2 = drift(&mid_sample.matrix, phi, &axpy_state(&x, &k1, 0.5 * h))?;
            let k3 = drift(&mid_sample.matrix, phi, &axpy_state(&x, &k2, 0.5 * h))?;
            let k4 = drift(&end_sample.matrix, phi, &axpy_state(&x, &k3, h))?;

            {
                let xs = x.positions_mut();
                let sixth = h / 6.0;
                for idx in 0..xs.len() {
                    xs[idx] += sixth
                        * (k1.positions()[idx]
                            + 2.0 * k2.positions()[idx]
                            + 2.0 * k3.positions()[idx]
                            + k4.positions()[idx]);
                }
            }
            if x.positions().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState { time: t_next });
            }
            if let (Some(e0), Some(em), Some(e1)) =
                (start_sample.eta, mid_sample.eta, end_sample.eta)
            {
                // Simpson on the stage values matches the accuracy of the
                // RK4 stage sampling.
                eta_integral += h / 6.0 * (e0 + 4.0 * em + e1);
            }

            global_step += 1;
            if global_step.is_multiple_of(cfg.record_stride) || last_step {
                record(t_next, &x, eta_integral, &mut traj)?;
            }
            start_sample = if last_step && ends_at_switch {
                sampler.sample(t_next)
            } else {
                end_sample
            };
        }
    }
    Ok(traj)
}
