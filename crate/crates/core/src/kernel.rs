//! Time-varying interaction kernels a(t,i,j) ∈ [0,1] and nonlinear
//! communication kernels φ(r) > 0.
//!
//! Six builtin interaction topologies are provided:
//!
//! - `leader` — a T-periodic moving band of leaders followed by every agent;
//!   the band is a tent of height 1 that sweeps across [0,1] and vanishes on
//!   the trailing (1/n)-fraction of each period,
//! - `balanced_cycle` — the stationary directed-cycle kernel ξ(i−j) with
//!   ξ the 1-periodized tent (1−4s)·𝟙[0,1/4](s),
//! - `symmetric_switch` — a T-periodic sliding block of side 1/n that wraps
//!   around the torus; disconnected at every instant but connected on
//!   average,
//! - `half_connected` — stationary: agents below 1/2 talk to labels within a
//!   factor of two of their own, agents above 1/2 form a clique; the
//!   in-degree vanishes at label 0,
//! - `complete` — a ≡ 1,
//! - `two_block` — two disconnected all-ones blocks split at 1/2.

use crate::rng::SplitMix64;
use crate::Error;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

type Evaluator = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Structural metadata carried by a [`TimeKernel`].
#[derive(Clone, Debug)]
pub struct KernelMeta {
    pub is_symmetric: bool,
    pub is_balanced: bool,
    pub is_stationary: bool,
    /// Period of t ↦ a(t,·,·) when the signal is periodic.
    pub period: Option<f64>,
    /// Jump instants of the signal: offsets within one period when `period`
    /// is set, absolute times otherwise. Starts at 0 when present.
    pub switch_times: Option<Vec<f64>>,
    /// True when t ↦ a(t,·,·) is piecewise constant between switch times,
    /// which makes time quadratures exact with one evaluation per piece.
    pub piecewise_constant_in_time: bool,
}

impl KernelMeta {
    fn stationary(is_symmetric: bool, is_balanced: bool) -> Self {
        KernelMeta {
            is_symmetric,
            is_balanced,
            is_stationary: true,
            period: None,
            switch_times: None,
            piecewise_constant_in_time: true,
        }
    }

    /// Minimum gap between consecutive switch instants (the dwell time),
    /// when a switching schedule is present.
    pub fn dwell_time(&self) -> Option<f64> {
        let times = self.switch_times.as_ref()?;
        let mut instants = times.clone();
        if let Some(period) = self.period {
            // One full period plus the wrap-around gap.
            instants.push(period + times[0]);
        }
        instants
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(None, |acc: Option<f64>, gap| {
                Some(acc.map_or(gap, |m| m.min(gap)))
            })
    }
}

/// Evaluator for a time-dependent interaction kernel a(t,i,j) ∈ [0,1] with
/// structural metadata. Immutable after construction and safe to share
/// across threads.
#[derive(Clone)]
pub struct TimeKernel {
    eval: Evaluator,
    pub meta: KernelMeta,
}

impl fmt::Debug for TimeKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeKernel")
            .field("meta", &self.meta)
            .finish()
    }
}

impl TimeKernel {
    pub fn new(
        meta: KernelMeta,
        eval: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TimeKernel {
            eval: Arc::new(eval),
            meta,
        }
    }

    /// Kernel value a(t,i,j).
    pub fn eval(&self, t: f64, i: f64, j: f64) -> f64 {
        (self.eval)(t, i, j)
    }

    /// All switch instants in [0, t_end], expanded across periods and
    /// deduplicated. Empty for kernels without a switching schedule.
    pub fn switch_instants(&self, t_end: f64) -> Vec<f64> {
        let offsets = match &self.meta.switch_times {
            None => return Vec::new(),
            Some(v) => v,
        };
        let mut out = Vec::new();
        match self.meta.period {
            Some(period) => {
                let mut base = 0.0;
                while base <= t_end + 1e-12 {
                    for &off in offsets {
                        let s = base + off;
                        if s <= t_end + 1e-12 {
                            out.push(s);
                        }
                    }
                    base += period;
                }
            }
            None => out.extend(offsets.iter().copied().filter(|&s| s <= t_end + 1e-12)),
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    }

    /// Loads a custom kernel from a plain-text grid file.
    ///
    /// Format: a header line `N <int> T_SAMPLES <int>`, then T_SAMPLES blocks
    /// of N×N whitespace-separated weights in [0,1]. Block k is active on the
    /// time interval [k, k+1); the last block persists afterwards. Labels map
    /// to cells through the usual piecewise-constant embedding.
    pub fn from_grid_file(path: &Path) -> Result<TimeKernel, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_grid_str(&text, &path.display().to_string())
    }

    /// Same as [`TimeKernel::from_grid_file`] for in-memory text.
    pub fn from_grid_str(text: &str, origin: &str) -> Result<TimeKernel, Error> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty file".into()))?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 4 || tokens[0] != "N" || tokens[2] != "T_SAMPLES" {
            return Err(parse_err(
                1,
                "expected header `N <int> T_SAMPLES <int>`".into(),
            ));
        }
        let n: usize = tokens[1]
            .parse()
            .map_err(|_| parse_err(1, format!("bad N `{}`", tokens[1])))?;
        let t_samples: usize = tokens[3]
            .parse()
            .map_err(|_| parse_err(1, format!("bad T_SAMPLES `{}`", tokens[3])))?;
        if n == 0 || t_samples == 0 {
            return Err(parse_err(1, "N and T_SAMPLES must be positive".into()));
        }

        let mut values = Vec::with_capacity(n * n * t_samples);
        for (lineno, line) in lines.enumerate() {
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| parse_err(lineno + 2, format!("bad weight `{tok}`")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(parse_err(lineno + 2, format!("weight {v} outside [0,1]")));
                }
                values.push(v);
            }
        }
        if values.len() != n * n * t_samples {
            return Err(parse_err(
                1,
                format!(
                    "expected {} weights, found {}",
                    n * n * t_samples,
                    values.len()
                ),
            ));
        }

        let blocks: Arc<Vec<f64>> = Arc::new(values);
        let is_symmetric = (0..t_samples).all(|k| {
            let b = &blocks[k * n * n..(k + 1) * n * n];
            (0..n).all(|i| (0..n).all(|j| b[i * n + j] == b[j * n + i]))
        });
        let is_balanced = (0..t_samples).all(|k| {
            let b = &blocks[k * n * n..(k + 1) * n * n];
            (0..n).all(|i| {
                let row: f64 = (0..n).map(|j| b[i * n + j]).sum();
                let col: f64 = (0..n).map(|j| b[j * n + i]).sum();
                (row - col).abs() <= 1e-12
            })
        });
        let meta = KernelMeta {
            is_symmetric,
            is_balanced,
            is_stationary: t_samples == 1,
            period: None,
            switch_times: if t_samples > 1 {
                Some((0..t_samples).map(|k| k as f64).collect())
            } else {
                None
            },
            piecewise_constant_in_time: true,
        };
        let nn = n;
        Ok(TimeKernel::new(meta, move |t, i, j| {
            let block = (t.max(0.0).floor() as usize).min(t_samples - 1);
            let ci = cell_index(i, nn);
            let cj = cell_index(j, nn);
            blocks[block * nn * nn + ci * nn + cj]
        }))
    }
}

/// Maps a label in [0,1] to its cell index ⌈i·n⌉ (1-based in the math,
/// 0-based here), clamping at the ends.
pub(crate) fn cell_index(label: f64, n: usize) -> usize {
    let k = (label * n as f64).ceil() as isize;
    (k.max(1) as usize).min(n) - 1
}

/// Builtin kernel names accepted by [`builtin_kernel`].
pub const BUILTIN_KERNELS: [&str; 6] = [
    "leader",
    "balanced_cycle",
    "symmetric_switch",
    "half_connected",
    "complete",
    "two_block",
];

/// Parameters for the builtin kernels that need them (`leader`,
/// `symmetric_switch`); ignored by the stationary kernels.
#[derive(Clone, Copy, Debug)]
pub struct KernelParams {
    /// Period T of the switching signal.
    pub period: f64,
    /// Band count n: the moving support has width 1/n.
    pub bands: u32,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            period: 10.0,
            bands: 10,
        }
    }
}

/// Constructs one of the six builtin interaction kernels.
pub fn builtin_kernel(name: &str, params: KernelParams) -> Result<TimeKernel, Error> {
    match name {
        "leader" | "symmetric_switch" => {
            if !(params.period > 0.0) {
                return Err(Error::InvalidParam(format!(
                    "T must be positive, got {}",
                    params.period
                )));
            }
            if params.bands == 0 {
                return Err(Error::InvalidParam("n must be positive".into()));
            }
        }
        _ => {}
    }
    match name {
        "leader" => Ok(leader_kernel(params.period, params.bands)),
        "balanced_cycle" => Ok(balanced_cycle_kernel()),
        "symmetric_switch" => Ok(symmetric_switch_kernel(params.period, params.bands)),
        "half_connected" => Ok(half_connected_kernel()),
        "complete" => Ok(TimeKernel::new(
            KernelMeta::stationary(true, true),
            |_, _, _| 1.0,
        )),
        "two_block" => Ok(TimeKernel::new(
            KernelMeta::stationary(true, true),
            |_, i, j| {
                if (i < 0.5) == (j < 0.5) {
                    1.0
                } else {
                    0.0
                }
            },
        )),
        other => Err(Error::UnknownKernel(other.to_string())),
    }
}

fn leader_kernel(period: f64, bands: u32) -> TimeKernel {
    let n = bands as f64;
    let t_cap = period;
    let active_end = (n - 1.0) / n * period;
    let meta = KernelMeta {
        is_symmetric: false,
        is_balanced: false,
        is_stationary: false,
        period: Some(period),
        switch_times: Some(vec![0.0, active_end]),
        piecewise_constant_in_time: false,
    };
    TimeKernel::new(meta, move |t, _i, j| {
        // Exact fmod keeps the signal bit-exactly periodic.
        let tt = t.max(0.0) % t_cap;
        if tt < active_end && (0.0..=1.0).contains(&j) {
            let lo = tt / t_cap;
            let hi = (tt + 1.0) / t_cap;
            if j < lo || j > hi {
                return 0.0;
            }
            let center = (2.0 * n * tt + t_cap) / (2.0 * n * t_cap);
            let tent = 1.0 - 2.0 * n * (j - center).abs();
            tent.clamp(0.0, 1.0)
        } else {
            0.0
        }
    })
}

fn balanced_cycle_kernel() -> TimeKernel {
    TimeKernel::new(KernelMeta::stationary(false, true), |_, i, j| {
        let s = i - j;
        let u = s - s.floor();
        if u <= 0.25 {
            1.0 - 4.0 * u
        } else {
            0.0
        }
    })
}

fn symmetric_switch_kernel(period: f64, bands: u32) -> TimeKernel {
    let n = bands as f64;
    let active_end = (n - 1.0) / n * period;
    let meta = KernelMeta {
        is_symmetric: true,
        is_balanced: true,
        is_stationary: false,
        period: Some(period),
        switch_times: Some(vec![0.0, active_end]),
        piecewise_constant_in_time: false,
    };
    TimeKernel::new(meta, move |t, i, j| {
        let tt = t.max(0.0) % period;
        let lo = tt / period;
        if tt < active_end {
            let hi = lo + 1.0 / n;
            if i >= lo && i <= hi && j >= lo && j <= hi {
                1.0
            } else {
                0.0
            }
        } else {
            // Wrap-around block [lo, 1] ∪ [0, lo + 1/n − 1].
            let hi = lo + 1.0 / n - 1.0;
            let inside = |x: f64| x >= lo || x <= hi;
            if inside(i) && inside(j) {
                1.0
            } else {
                0.0
            }
        }
    })
}

fn half_connected_kernel() -> TimeKernel {
    // The ratio band i/2 ≤ j ≤ 2i is symmetric in (i,j); gating it on
    // min(i,j) ≤ 1/2 (rather than i ≤ 1/2) keeps the kernel symmetric
    // pointwise, as the construction intends.
    TimeKernel::new(KernelMeta::stationary(true, true), |_, i, j| {
        let in_band = 2.0 * j >= i && j <= 2.0 * i;
        if (i.min(j) <= 0.5 && in_band) || (i >= 0.5 && j >= 0.5) {
            1.0
        } else {
            0.0
        }
    })
}

/// Evaluator for a nonlinear communication kernel φ(r) > 0 together with its
/// supremum c_φ. Immutable after construction.
#[derive(Clone)]
pub struct NonlinKernel {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub c_phi: f64,
    pub description: String,
}

impl fmt::Debug for NonlinKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinKernel")
            .field("c_phi", &self.c_phi)
            .field("description", &self.description)
            .finish()
    }
}

impl NonlinKernel {
    pub fn new(
        description: &str,
        c_phi: f64,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<NonlinKernel, Error> {
        if !(c_phi > 0.0) {
            return Err(Error::InvalidParam(format!(
                "c_phi must be positive, got {c_phi}"
            )));
        }
        Ok(NonlinKernel {
            eval: Arc::new(eval),
            c_phi,
            description: description.to_string(),
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    /// The linear case φ ≡ 1.
    pub fn constant_one() -> NonlinKernel {
        NonlinKernel::new("one", 1.0, |_| 1.0).unwrap()
    }
}

/// The Cucker-Smale kernel φ(r) = 1/(1+r)², with c_φ = 1.
pub fn cucker_smale_phi() -> NonlinKernel {
    NonlinKernel::new("cucker_smale", 1.0, |r| 1.0 / ((1.0 + r) * (1.0 + r))).unwrap()
}

/// γ_R = min of φ over [0, 2R], computed on a uniform grid followed by
/// golden-section refinement around the grid minimum.
pub fn gamma_r(phi: &NonlinKernel, r: f64) -> Result<f64, Error> {
    gamma_r_with_resolution(phi, r, 10_000)
}

pub fn gamma_r_with_resolution(phi: &NonlinKernel, r: f64, points: usize) -> Result<f64, Error> {
    if !(r > 0.0) {
        return Err(Error::InvalidParam(format!("R must be positive, got {r}")));
    }
    let points = points.max(2);
    let hi = 2.0 * r;
    let h = hi / (points - 1) as f64;
    let mut best = f64::INFINITY;
    let mut best_idx = 0usize;
    for k in 0..points {
        let v = phi.eval(k as f64 * h);
        if v < best {
            best = v;
            best_idx = k;
        }
    }
    // Golden-section refinement on the bracket around the grid minimum.
    let mut a = (best_idx.saturating_sub(1)) as f64 * h;
    let mut b = ((best_idx + 1).min(points - 1)) as f64 * h;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = phi.eval(c);
    let mut fd = phi.eval(d);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = phi.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = phi.eval(d);
        }
        if b - a < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(best.min(fc).min(fd))
}

/// Deterministic sample points for the kernel-invariant test suites.
pub fn sample_arguments(count: usize, t_max: f64, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| (rng.next_range(0.0, t_max), rng.next_f64(), rng.next_f64()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_builtins() -> Vec<(&'static str, TimeKernel)> {
        BUILTIN_KERNELS
            .iter()
            .map(|&name| (name, builtin_kernel(name, KernelParams::default()).unwrap()))
            .collect()
    }

    #[test]
    fn builtin_values_stay_in_unit_interval() {
        for (name, kernel) in all_builtins() {
            for &(t, i, j) in &sample_arguments(20_000, 50.0, 0xA1) {
                let v = kernel.eval(t, i, j);
                assert!(
                    (0.0..=1.0).contains(&v),
                    "{name} produced {v} at ({t},{i},{j})"
                );
            }
        }
    }

    #[test]
    fn symmetry_metadata_is_honest() {
        for (name, kernel) in all_builtins() {
            if !kernel.meta.is_symmetric {
                continue;
            }
            for &(t, i, j) in &sample_arguments(10_000, 50.0, 0xB2) {
                let d = (kernel.eval(t, i, j) - kernel.eval(t, j, i)).abs();
                assert_eq!(d, 0.0, "{name} asymmetric at ({t},{i},{j})");
            }
        }
    }

    #[test]
    fn periodicity_metadata_is_honest() {
        for (name, kernel) in all_builtins() {
            let period = match kernel.meta.period {
                Some(p) => p,
                None => continue,
            };
            // Dyadic times keep t + period exactly representable, so the
            // check is a true bit-equality.
            let mut rng = crate::rng::SplitMix64::new(0xC3);
            for _ in 0..10_000 {
                let t = (rng.next_range(0.0, 3.0 * period) * 1048576.0).round() / 1048576.0;
                let (i, j) = (rng.next_f64(), rng.next_f64());
                let d = (kernel.eval(t, i, j) - kernel.eval(t + period, i, j)).abs();
                assert_eq!(d, 0.0, "{name} not {period}-periodic at ({t},{i},{j})");
            }
        }
    }

    #[test]
    fn stationary_metadata_is_honest() {
        for (name, kernel) in all_builtins() {
            if !kernel.meta.is_stationary {
                continue;
            }
            for &(t, i, j) in &sample_arguments(2_000, 80.0, 0xD4) {
                assert_eq!(kernel.eval(t, i, j), kernel.eval(0.0, i, j), "{name}");
            }
        }
    }

    #[test]
    fn balanced_cycle_diagonal_is_one() {
        let k = builtin_kernel("balanced_cycle", KernelParams::default()).unwrap();
        for &(t, i, _) in &sample_arguments(100, 10.0, 0xE5) {
            assert_eq!(k.eval(t, i, i), 1.0);
        }
    }

    #[test]
    fn complete_kernel_is_constant_one() {
        let k = builtin_kernel("complete", KernelParams::default()).unwrap();
        assert_eq!(k.eval(5.0, 0.3, 0.7), 1.0);
    }

    #[test]
    fn leader_vanishes_on_the_rest_phase() {
        let k = builtin_kernel(
            "leader",
            KernelParams {
                period: 10.0,
                bands: 10,
            },
        )
        .unwrap();
        // t = 9.5 lies in [(n−1)T/n, T) = [9, 10).
        for &(_, i, j) in &sample_arguments(100, 1.0, 0xF6) {
            assert_eq!(k.eval(9.5, i, j), 0.0);
        }
        // Mid-phase the tent peaks at 1 at its center.
        let tt: f64 = 4.0;
        let center = tt / 10.0 + 1.0 / 20.0;
        assert!((k.eval(tt, 0.2, center) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_connected_examples() {
        let k = builtin_kernel("half_connected", KernelParams::default()).unwrap();
        // 0.6 ∉ [0.125, 0.5] for i = 0.25.
        assert_eq!(k.eval(0.0, 0.25, 0.6), 0.0);
        assert_eq!(k.eval(0.0, 0.25, 0.4), 1.0);
        assert_eq!(k.eval(0.0, 0.0, 0.0), 1.0);
        assert_eq!(k.eval(0.0, 0.7, 0.9), 1.0);
        // The ratio band extends across 1/2 symmetrically.
        assert_eq!(k.eval(0.0, 0.3, 0.55), k.eval(0.0, 0.55, 0.3));
    }

    #[test]
    fn two_block_splits_at_half() {
        let k = builtin_kernel("two_block", KernelParams::default()).unwrap();
        assert_eq!(k.eval(0.0, 0.2, 0.4), 1.0);
        assert_eq!(k.eval(0.0, 0.2, 0.7), 0.0);
        assert_eq!(k.eval(0.0, 0.8, 0.6), 1.0);
    }

    #[test]
    fn balanced_cycle_row_and_column_integrals_are_one_eighth() {
        let k = builtin_kernel("balanced_cycle", KernelParams::default()).unwrap();
        let m = 200_000;
        for &i in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            let mut row = 0.0;
            let mut col = 0.0;
            for q in 0..m {
                let j = (q as f64 + 0.5) / m as f64;
                row += k.eval(0.0, i, j);
                col += k.eval(0.0, j, i);
            }
            row /= m as f64;
            col /= m as f64;
            assert!(
                (row - col).abs() <= 1e-5,
                "balance at i={i}: {row} vs {col}"
            );
            assert!((row - 0.125).abs() <= 1e-5, "row integral at i={i}: {row}");
        }
    }

    #[test]
    fn unknown_kernel_and_bad_params_error() {
        assert!(matches!(
            builtin_kernel("nope", KernelParams::default()),
            Err(Error::UnknownKernel(_))
        ));
        assert!(builtin_kernel(
            "leader",
            KernelParams {
                period: 0.0,
                bands: 10
            }
        )
        .is_err());
        assert!(builtin_kernel(
            "leader",
            KernelParams {
                period: 1.0,
                bands: 0
            }
        )
        .is_err());
    }

    #[test]
    fn cucker_smale_values() {
        let phi = cucker_smale_phi();
        assert_eq!(phi.eval(0.0), 1.0);
        assert_eq!(phi.eval(1.0), 0.25);
        assert_eq!(phi.c_phi, 1.0);
    }

    #[test]
    fn gamma_r_constant_kernel() {
        let one = NonlinKernel::constant_one();
        assert_eq!(gamma_r(&one, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn gamma_r_matches_brute_force_for_decreasing_phi() {
        let phi = cucker_smale_phi();
        for &(r, expected) in &[(1.0, 1.0 / 9.0), (0.5, 0.25)] {
            // Brute-force oracle: fine grid minimum over [0, 2R].
            let m = 300_000;
            let mut oracle = f64::INFINITY;
            for k in 0..=m {
                oracle = oracle.min(phi.eval(2.0 * r * k as f64 / m as f64));
            }
            assert!((oracle - expected).abs() < 1e-9, "oracle sanity at R={r}");
            let got = gamma_r(&phi, r).unwrap();
            assert!((got - expected).abs() < 1e-9, "gamma_R({r}) = {got}");
            assert!(got <= oracle + 1e-12);
        }
    }

    #[test]
    fn gamma_r_rejects_nonpositive_radius() {
        let one = NonlinKernel::constant_one();
        assert!(gamma_r(&one, 0.0).is_err());
        assert!(gamma_r(&one, -1.0).is_err());
    }

    #[test]
    fn grid_file_round_trip() {
        let text = "N 2 T_SAMPLES 2\n0.0 0.5\n1.0 0.25\n0.1 0.2\n0.3 0.4\n";
        let k = TimeKernel::from_grid_str(text, "test").unwrap();
        assert!(!k.meta.is_stationary);
        assert!(k.meta.piecewise_constant_in_time);
        // Block 0 on [0,1): labels ≤ 0.5 map to cell 0.
        assert_eq!(k.eval(0.2, 0.3, 0.3), 0.0);
        assert_eq!(k.eval(0.2, 0.3, 0.9), 0.5);
        assert_eq!(k.eval(0.2, 0.9, 0.3), 1.0);
        // Block 1 persists for t ≥ 1.
        assert_eq!(k.eval(1.5, 0.3, 0.3), 0.1);
        assert_eq!(k.eval(7.0, 0.9, 0.9), 0.4);
        assert_eq!(k.switch_instants(5.0), vec![0.0, 1.0]);
    }

    #[test]
    fn grid_file_rejects_malformed_input() {
        assert!(TimeKernel::from_grid_str("", "t").is_err());
        assert!(TimeKernel::from_grid_str("N 2 T_SAMPLES 1\n0 0 0\n", "t").is_err());
        assert!(TimeKernel::from_grid_str("N 2 T_SAMPLES 1\n0 0 0 1.5\n", "t").is_err());
        assert!(TimeKernel::from_grid_str("M 2 T 1\n0 0 0 0\n", "t").is_err());
    }

    #[test]
    fn switch_instants_expand_across_periods() {
        let k = builtin_kernel(
            "leader",
            KernelParams {
                period: 10.0,
                bands: 10,
            },
        )
        .unwrap();
        let instants = k.switch_instants(25.0);
        assert_eq!(instants, vec![0.0, 9.0, 10.0, 19.0, 20.0]);
        assert_eq!(k.meta.dwell_time(), Some(1.0));
    }
}
