//! Pass/fail trajectory checks derived from the consensus theorems: decay
//! envelopes, consensus-point estimation, empirical decay-rate fitting and
//! the L²/L∞ equivalence observation.

use crate::dynamics::{
    barycenter, l2_distance_to_point, linf_distance_to_point, weighted_barycenter, Trajectory,
};
use crate::rng::SplitMix64;
use crate::Error;

/// The decay theorems that can be checked as runtime envelopes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theorem {
    /// 𝒟(t) ≤ 𝒟(0)·exp(−γ_R ∫₀ᵗ η(A(s)) ds).
    DiameterContraction,
    /// ‖x(t) − x∞‖∞ ≤ exp(γ_R μτ)·𝒟(0)·exp(−γ_R μ t).
    LinfPersistentScrambling,
    /// ‖x(t) − x̄⁰‖ ≤ α·‖x(0) − x̄⁰‖·exp(−γμt) with α, γ assembled from
    /// (γ_R, c_φ, τ, μ).
    L2Symmetric,
    /// ‖x(t) − x̄⁰‖ ≤ exp(μτ)·‖x(0) − x̄⁰‖·exp(−μt).
    L2Balanced,
    /// ‖x(t) − x∞‖ ≤ (exp(μν²τ)/ν²)·‖x(0) − x̄⁰‖·exp(−(μν² − (2/τ_d)log(1/ν))t).
    L2Strong,
}

impl Theorem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Theorem::DiameterContraction => "diameter_contraction",
            Theorem::LinfPersistentScrambling => "linf_persistent_scrambling",
            Theorem::L2Symmetric => "l2_symmetric",
            Theorem::L2Balanced => "l2_balanced",
            Theorem::L2Strong => "l2_strong",
        }
    }
}

/// Constants feeding [`envelope_check`]; each theorem reads the subset it
/// needs.
#[derive(Clone, Debug, Default)]
pub struct EnvelopeParams {
    pub gamma_r: Option<f64>,
    pub c_phi: Option<f64>,
    pub mu: Option<f64>,
    pub tau: Option<f64>,
    pub nu: Option<f64>,
    pub tau_d: Option<f64>,
    /// Consensus point for the theorems phrased as distance to x∞.
    pub x_inf: Option<Vec<f64>>,
    /// Set when the integrated kernel lacks the structural flag the theorem
    /// assumes; reported as a warning, not a failure.
    pub topology_warning: Option<String>,
}

/// Result of one envelope check.
#[derive(Clone, Debug)]
pub struct EnvelopeReport {
    pub theorem: Theorem,
    /// min over recorded times of (envelope − observed).
    pub margin: f64,
    pub pass: bool,
    /// Decay prefactor α of the envelope (1 for the diameter contraction).
    pub alpha: f64,
    /// Constants the theorem used, echoed for the summary.
    pub gamma_r: Option<f64>,
    pub mu: Option<f64>,
    pub tau: Option<f64>,
    pub nu: Option<f64>,
    pub tau_d: Option<f64>,
    /// Theorem-side tolerance (exact constants).
    pub base_tolerance: f64,
    /// Integrator-side tolerance heuristic at the final time.
    pub integrator_tolerance: f64,
    pub warning: Option<String>,
    /// (t, observed, envelope) triples for export.
    pub series: Vec<(f64, f64, f64)>,
}

const ENVELOPE_BASE_TOL: f64 = 1e-9;

fn require(v: Option<f64>, name: &'static str) -> Result<f64, Error> {
    v.ok_or(Error::MissingConstant(name))
}

/// Compares the observed decay quantity of the selected theorem against its
/// envelope at every recorded time. The check passes when
/// envelope(t) − observed(t) ≥ −(1e-9 + 10·dt⁴·t) pathwise.
pub fn envelope_check(
    traj: &Trajectory,
    theorem: Theorem,
    params: &EnvelopeParams,
) -> Result<EnvelopeReport, Error> {
    if traj.is_empty() {
        return Err(Error::InvalidParam("empty trajectory".into()));
    }
    let times = &traj.times;
    let initial_barycenter = barycenter(&traj.states[0]);

    let (observed, alpha, decay_rate, gamma_r): (Vec<f64>, f64, f64, Option<f64>) = match theorem {
        Theorem::DiameterContraction => {
            let gamma_r = require(params.gamma_r, "gamma_r")?;
            let obs: Vec<f64> = traj.diagnostics.iter().map(|d| d.diameter).collect();
            let integral = traj
                .scrambling_integral
                .as_ref()
                .ok_or(Error::MissingConstant("scrambling_integral"))?;
            let d0 = obs[0];
            let series: Vec<(f64, f64, f64)> = times
                .iter()
                .zip(&obs)
                .zip(integral)
                .map(|((&t, &o), &s)| (t, o, d0 * (-gamma_r * s).exp()))
                .collect();
            return finalize(traj, theorem, params, series, 1.0, Some(gamma_r));
        }
        Theorem::LinfPersistentScrambling => {
            let gamma_r = require(params.gamma_r, "gamma_r")?;
            let mu = require(params.mu, "mu")?;
            let tau = require(params.tau, "tau")?;
            let x_inf = params
                .x_inf
                .as_ref()
                .ok_or(Error::MissingConstant("x_inf"))?;
            let d0 = crate::dynamics::diameter(&traj.states[0]);
            let obs: Vec<f64> = traj
                .states
                .iter()
                .map(|s| linf_distance_to_point(s, x_inf))
                .collect();
            let alpha = (gamma_r * mu * tau).exp();
            let series: Vec<(f64, f64, f64)> = times
                .iter()
                .zip(&obs)
                .map(|(&t, &o)| (t, o, alpha * d0 * (-gamma_r * mu * t).exp()))
                .collect();
            return finalize(traj, theorem, params, series, alpha, Some(gamma_r));
        }
        Theorem::L2Balanced => {
            let mu = require(params.mu, "mu")?;
            let tau = require(params.tau, "tau")?;
            let obs: Vec<f64> = traj
                .states
                .iter()
                .map(|s| l2_distance_to_point(s, &initial_barycenter))
                .collect();
            (obs, (mu * tau).exp(), mu, None)
        }
        Theorem::L2Symmetric => {
            let gamma_r = require(params.gamma_r, "gamma_r")?;
            let c_phi = require(params.c_phi, "c_phi")?;
            let mu = require(params.mu, "mu")?;
            let tau = require(params.tau, "tau")?;
            let eps = gamma_r * mu / (2.0 * (1.0 + c_phi).sqrt());
            let lambda =
                1.0 / tau.sqrt() + 1.0 / (2.0 * tau.sqrt() * eps) - ((1.0 + c_phi) * tau).sqrt();
            let alpha = lambda + ((1.0 + c_phi) * tau).sqrt();
            let gamma = 1.0 / (4.0 * ((1.0 + c_phi) * tau).sqrt() * alpha);
            let obs: Vec<f64> = traj
                .states
                .iter()
                .map(|s| l2_distance_to_point(s, &initial_barycenter))
                .collect();
            (obs, alpha, gamma * mu, Some(gamma_r))
        }
        Theorem::L2Strong => {
            let mu = require(params.mu, "mu")?;
            let tau = require(params.tau, "tau")?;
            let nu = require(params.nu, "nu")?;
            let tau_d = require(params.tau_d, "tau_d")?;
            let x_inf = params
                .x_inf
                .as_ref()
                .ok_or(Error::MissingConstant("x_inf"))?;
            let rate = mu * nu * nu - 2.0 / tau_d * (1.0 / nu).ln();
            let alpha = (mu * nu * nu * tau).exp() / (nu * nu);
            let baseline = l2_distance_to_point(&traj.states[0], &initial_barycenter);
            let obs: Vec<f64> = traj
                .states
                .iter()
                .map(|s| l2_distance_to_point(s, x_inf))
                .collect();
            let series: Vec<(f64, f64, f64)> = times
                .iter()
                .zip(&obs)
                .map(|(&t, &o)| (t, o, alpha * baseline * (-rate * t).exp()))
                .collect();
            return finalize(traj, theorem, params, series, alpha, None);
        }
    };

    let baseline = observed[0];
    let series: Vec<(f64, f64, f64)> = times
        .iter()
        .zip(&observed)
        .map(|(&t, &o)| (t, o, alpha * baseline * (-decay_rate * t).exp()))
        .collect();
    finalize(traj, theorem, params, series, alpha, gamma_r)
}

fn finalize(
    traj: &Trajectory,
    theorem: Theorem,
    params: &EnvelopeParams,
    series: Vec<(f64, f64, f64)>,
    alpha: f64,
    gamma_r: Option<f64>,
) -> Result<EnvelopeReport, Error> {
    let mut margin = f64::INFINITY;
    let mut pass = true;
    for &(t, observed, envelope) in &series {
        let gap = envelope - observed;
        margin = margin.min(gap);
        if gap < -(ENVELOPE_BASE_TOL + traj.integrator_tolerance(t)) {
            pass = false;
        }
    }
    let t_end = *traj.times.last().unwrap();
    Ok(EnvelopeReport {
        theorem,
        margin,
        pass,
        alpha,
        gamma_r,
        mu: params.mu,
        tau: params.tau,
        nu: params.nu,
        tau_d: params.tau_d,
        base_tolerance: ENVELOPE_BASE_TOL,
        integrator_tolerance: traj.integrator_tolerance(t_end),
        warning: params.topology_warning.clone(),
        series,
    })
}

/// Strategies for locating the asymptotic consensus point.
#[derive(Clone, Debug)]
pub enum ConsensusStrategy {
    FinalStateMean,
    /// v-weighted barycenter of the final state.
    WeightedBarycenter(Vec<f64>),
    /// Aitken extrapolation of the barycenter sequence over the trailing
    /// tenth of the samples.
    TailExtrapolation,
}

/// Estimates x∞ from a trajectory; the estimate is validated against the
/// convex hull of the initial positions with a 20-direction support test.
pub fn consensus_estimate(
    traj: &Trajectory,
    strategy: &ConsensusStrategy,
) -> Result<Vec<f64>, Error> {
    if traj.is_empty() {
        return Err(Error::InvalidParam("empty trajectory".into()));
    }
    let last = traj.final_state();
    let estimate = match strategy {
        ConsensusStrategy::FinalStateMean => barycenter(last),
        ConsensusStrategy::WeightedBarycenter(v) => weighted_barycenter(last, v)?,
        ConsensusStrategy::TailExtrapolation => {
            let len = traj.len();
            let lag = (len / 20).max(1);
            if len < 2 * lag + 1 {
                barycenter(last)
            } else {
                let b1 = barycenter(&traj.states[len - 1 - 2 * lag]);
                let b2 = barycenter(&traj.states[len - 1 - lag]);
                let b3 = barycenter(last);
                b1.iter()
                    .zip(&b2)
                    .zip(&b3)
                    .map(|((&a, &b), &c)| {
                        let denom = c - 2.0 * b + a;
                        let scale = a.abs().max(b.abs()).max(c.abs()).max(1.0);
                        if denom.abs() <= 1e-12 * scale {
                            c
                        } else {
                            c - (c - b) * (c - b) / denom
                        }
                    })
                    .collect()
            }
        }
    };

    validate_in_initial_hull(traj, &estimate)?;
    Ok(estimate)
}

fn validate_in_initial_hull(traj: &Trajectory, point: &[f64]) -> Result<(), Error> {
    let x0 = &traj.states[0];
    let dim = x0.dim();
    let t_end = *traj.times.last().unwrap();
    let tol = 1e-9 + traj.integrator_tolerance(t_end);
    let mut rng = SplitMix64::new(0x48A1_1F00);
    for _ in 0..20 {
        let p: Vec<f64> = (0..dim).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let support = (0..x0.n())
            .map(|i| x0.agent(i).iter().zip(&p).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let value: f64 = point.iter().zip(&p).map(|(a, b)| a * b).sum();
        if value > support + tol {
            return Err(Error::InvalidParam(format!(
                "consensus estimate left the initial convex hull (support gap {})",
                value - support
            )));
        }
    }
    Ok(())
}

/// Least-squares exponential decay fit over the trailing fraction of a
/// positive series.
#[derive(Clone, Debug)]
pub struct DecayFit {
    /// Negated slope of the log-linear fit.
    pub rate: f64,
    /// Fitted log-value at t = 0.
    pub intercept: f64,
    pub r_squared: f64,
    /// False when the tail contained non-positive values (rate forced to 0).
    pub all_positive: bool,
}

pub fn decay_rate_fit(series: &[(f64, f64)], tail_fraction: f64) -> Result<DecayFit, Error> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "tail_fraction {tail_fraction} outside (0,1]"
        )));
    }
    let len = series.len();
    let tail_len = ((len as f64 * tail_fraction).ceil() as usize).min(len);
    if tail_len < 3 {
        return Err(Error::TooFewTailPoints { got: tail_len });
    }
    let tail = &series[len - tail_len..];
    if tail.iter().any(|&(_, v)| !(v > 0.0)) {
        return Ok(DecayFit {
            rate: 0.0,
            intercept: 0.0,
            r_squared: 0.0,
            all_positive: false,
        });
    }
    let m = tail_len as f64;
    let mean_t = tail.iter().map(|&(t, _)| t).sum::<f64>() / m;
    let mean_y = tail.iter().map(|&(_, v)| v.ln()).sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(t, v) in tail {
        let dx = t - mean_t;
        let dy = v.ln() - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParam("tail has no time spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(DecayFit {
        rate: -slope,
        intercept,
        r_squared,
        all_positive: true,
    })
}

/// Joint observation of L² and L∞ convergence toward a candidate consensus
/// point.
#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub l2_decayed: bool,
    pub linf_decayed: bool,
    /// True unless exactly one of the two norms decayed.
    pub consistent_with_equivalence: bool,
    pub relative_threshold: f64,
}

pub fn equivalence_observation(traj: &Trajectory, x_inf: &[f64]) -> EquivalenceReport {
    equivalence_observation_with_threshold(traj, x_inf, 1e-3)
}

pub fn equivalence_observation_with_threshold(
    traj: &Trajectory,
    x_inf: &[f64],
    rel_threshold: f64,
) -> EquivalenceReport {
    let first = &traj.states[0];
    let last = traj.final_state();
    // Zero initial distance counts as decayed (already at consensus).
    let decayed = |d0: f64, dt: f64| d0 == 0.0 || dt < rel_threshold * d0;
    let l2_decayed = decayed(
        l2_distance_to_point(first, x_inf),
        l2_distance_to_point(last, x_inf),
    );
    let linf_decayed = decayed(
        linf_distance_to_point(first, x_inf),
        linf_distance_to_point(last, x_inf),
    );
    EquivalenceReport {
        l2_decayed,
        linf_decayed,
        consistent_with_equivalence: l2_decayed == linf_decayed,
        relative_threshold: rel_threshold,
    }
}
