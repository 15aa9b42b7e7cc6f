//! Bloch-vector estimators constrained to the closed unit ball.
//!
//! Both estimators consume the empirical `+u` frequencies `p_u`:
//!
//! * maximum likelihood, maximizing
//!   `sum_u w_u [p_u ln(1 + a.u) + (1 - p_u) ln(1 - a.u)]`, solved by
//!   projected gradient ascent with an Armijo backtracking line search;
//! * linear regression, minimizing `sum_u w_u (1 + u.a - 2 p_u)^2`, solved
//!   exactly from the 3x3 normal equations plus a secular-equation root find
//!   when the unconstrained solution leaves the ball.
//!
//! The weight of a basis is `w_u = N_u / mean(N)`, which is 1 for every basis
//! when all shot counts are equal.

use serde::{Deserialize, Serialize};

use crate::bloch::BlochVector;
use crate::error::{Error, Result};
use crate::linalg::Sym3;
use crate::measurement::{MeasurementRecord, PvmCatalog, MIN_GRAM_DETERMINANT};

/// Lower clip for the arguments of `ln(1 +- a.u)`.
pub const LOG_ARG_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Mle,
    Lr,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Mle => "mle",
            Estimator::Lr => "lr",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputEntry {
    pub axis: BlochVector,
    pub probability: f64,
    pub shots: u64,
}

/// Validated estimator input: at least three entries with spanning axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionInput {
    entries: Vec<InputEntry>,
    weights: Vec<f64>,
}

impl ReconstructionInput {
    pub fn new(entries: Vec<InputEntry>) -> Result<Self> {
        if entries.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "need at least 3 measurement bases, got {}",
                entries.len()
            )));
        }
        for (i, e) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(&e.probability) {
                return Err(Error::InvalidInput(format!(
                    "entry {i}: probability {} outside [0, 1]",
                    e.probability
                )));
            }
            if e.shots == 0 {
                return Err(Error::InvalidInput(format!("entry {i}: zero shots")));
            }
            if (e.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "entry {i}: axis is not a unit vector"
                )));
            }
        }
        let mut gram = Sym3::zero();
        for e in &entries {
            gram.add_outer(e.axis, 1.0);
        }
        if gram.determinant() <= MIN_GRAM_DETERMINANT {
            return Err(Error::NonSpanningBases);
        }
        let mean_shots = entries.iter().map(|e| e.shots as f64).sum::<f64>() / entries.len() as f64;
        let weights = entries
            .iter()
            .map(|e| e.shots as f64 / mean_shots)
            .collect();
        Ok(Self { entries, weights })
    }

    /// Equal-shot input from axes and exact (or empirical) probabilities.
    pub fn from_probabilities(
        pairs: impl IntoIterator<Item = (BlochVector, f64)>,
        shots: u64,
    ) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(axis, probability)| InputEntry {
                    axis,
                    probability,
                    shots,
                })
                .collect(),
        )
    }

    /// Builds the input for one prepared state from its records.
    pub fn from_records<'a>(
        records: impl IntoIterator<Item = &'a MeasurementRecord>,
        catalog: &PvmCatalog,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for r in records {
            let (_, basis) = catalog
                .basis(&r.basis_id)
                .ok_or_else(|| Error::InvalidInput(format!("unknown basis id '{}'", r.basis_id)))?;
            if r.count > r.shots {
                return Err(Error::InvalidInput(format!(
                    "count {} exceeds shots {}",
                    r.count, r.shots
                )));
            }
            entries.push(InputEntry {
                axis: basis.axis,
                probability: r.empirical_probability(),
                shots: r.shots,
            });
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[InputEntry] {
        &self.entries
    }

    fn terms(&self) -> impl Iterator<Item = (&InputEntry, f64)> {
        self.entries.iter().zip(self.weights.iter().copied())
    }

    fn gram(&self) -> Sym3 {
        let mut g = Sym3::zero();
        for (e, w) in self.terms() {
            g.add_outer(e.axis, w);
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Convergence threshold on the projected-gradient norm.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Relative objective change that counts as stagnation...
    pub relative_tolerance: f64,
    /// ...when sustained over this many iterations.
    pub stagnation_window: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iter: 10_000,
            relative_tolerance: 1e-14,
            stagnation_window: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub estimate: BlochVector,
    pub estimator: Estimator,
    /// MLE: attained log-likelihood divided by the mean shots per basis.
    /// LR: attained weighted sum of squared residuals.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// MLE: projected-gradient norm at the estimate. LR: KKT residual.
    pub gradient_norm_final: f64,
    /// Lagrange multiplier of the ball constraint (0 for interior solutions).
    pub constraint_multiplier: f64,
}

pub fn reconstruct(
    estimator: Estimator,
    input: &ReconstructionInput,
    opts: &SolverOptions,
) -> Result<ReconstructionResult> {
    match estimator {
        Estimator::Mle => mle_reconstruct(input, opts),
        Estimator::Lr => lr_reconstruct(input),
    }
}

/// Per-shot log-likelihood of `a`, with log arguments clipped at
/// [`LOG_ARG_FLOOR`]. Terms with a zero coefficient are skipped so that
/// `p_u in {0, 1}` never produces `0 * ln 0`.
pub fn mle_objective(a: BlochVector, input: &ReconstructionInput) -> f64 {
    input
        .terms()
        .map(|(e, w)| {
            let d = a.dot(e.axis);
            let mut t = 0.0;
            if e.probability > 0.0 {
                t += e.probability * (1.0 + d).max(LOG_ARG_FLOOR).ln();
            }
            if e.probability < 1.0 {
                t += (1.0 - e.probability) * (1.0 - d).max(LOG_ARG_FLOOR).ln();
            }
            w * t
        })
        .sum()
}

/// Analytic gradient `sum_u w_u [p_u/(1 + a.u) - (1 - p_u)/(1 - a.u)] u`.
pub fn mle_gradient(a: BlochVector, input: &ReconstructionInput) -> BlochVector {
    input.terms().fold(BlochVector::ZERO, |acc, (e, w)| {
        let d = a.dot(e.axis);
        let mut c = 0.0;
        if e.probability > 0.0 {
            c += e.probability / (1.0 + d).max(LOG_ARG_FLOOR);
        }
        if e.probability < 1.0 {
            c -= (1.0 - e.probability) / (1.0 - d).max(LOG_ARG_FLOOR);
        }
        acc + e.axis * (w * c)
    })
}

fn projected_gradient(a: BlochVector, g: BlochVector) -> BlochVector {
    (a + g).project_to_ball() - a
}

const ARMIJO_SIGMA: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
const MAX_STEP: f64 = 1e20;

/// Maximum-likelihood estimate by projected gradient ascent from `a = 0`.
///
/// Each iteration tries a Barzilai-Borwein step length and backtracks by
/// halving until the Armijo condition holds along the projection arc.
/// Converges when the projected-gradient norm drops below
/// `opts.tolerance`, or when the objective stagnates to a relative change of
/// `opts.relative_tolerance` over `opts.stagnation_window` iterations.
pub fn mle_reconstruct(
    input: &ReconstructionInput,
    opts: &SolverOptions,
) -> Result<ReconstructionResult> {
    let mut a = BlochVector::ZERO;
    let mut f = mle_objective(a, input);
    let mut g = mle_gradient(a, input);
    let mut step = 1.0;
    let mut history = vec![f];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        if projected_gradient(a, g).norm() <= opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut t = step;
        let mut accepted = None;
        while t >= MIN_STEP {
            let trial = (a + g * t).project_to_ball();
            let f_trial = mle_objective(trial, input);
            if f_trial.is_finite() && f_trial >= f + ARMIJO_SIGMA * g.dot(trial - a) {
                accepted = Some((trial, f_trial));
                break;
            }
            t *= 0.5;
        }
        let Some((next, f_next)) = accepted else {
            // No ascent possible at working precision.
            converged = true;
            break;
        };

        let g_next = mle_gradient(next, input);
        let s = next - a;
        let y = g_next - g;
        let curvature = -s.dot(y);
        step = if curvature > 0.0 {
            (s.norm_squared() / curvature).clamp(MIN_STEP, MAX_STEP)
        } else {
            (t * 2.0).min(MAX_STEP)
        };

        a = next;
        f = f_next;
        g = g_next;
        history.push(f);

        let w = opts.stagnation_window;
        if history.len() > w {
            let old = history[history.len() - 1 - w];
            if (f - old).abs() <= opts.relative_tolerance * f.abs().max(1.0) {
                converged = true;
                break;
            }
        }
    }

    let pg = projected_gradient(a, g).norm();
    let multiplier = if a.norm() >= 1.0 - 1e-12 {
        g.dot(a).max(0.0)
    } else {
        0.0
    };
    let result = ReconstructionResult {
        estimate: a,
        estimator: Estimator::Mle,
        objective: f,
        iterations,
        converged,
        gradient_norm_final: pg,
        constraint_multiplier: multiplier,
    };
    if converged {
        Ok(result)
    } else {
        Err(Error::MaxIterationsExceeded {
            best: Box::new(result),
        })
    }
}

/// Weighted sum of squared residuals `sum_u w_u (1 + u.a - 2 p_u)^2`.
pub fn lr_objective(a: BlochVector, input: &ReconstructionInput) -> f64 {
    input
        .terms()
        .map(|(e, w)| {
            let r = 1.0 + e.axis.dot(a) - 2.0 * e.probability;
            w * r * r
        })
        .sum()
}

const SECULAR_TOLERANCE: f64 = 1e-13;
const SECULAR_MAX_ITER: usize = 200;

/// Exact linear-regression estimate on the unit ball.
///
/// Solves `G a = b` with `G = sum w u u^T` and `b = sum w (2p - 1) u`. When
/// that point lies outside the ball, finds `lambda > 0` with
/// `|(G + lambda I)^{-1} b| = 1` by a Newton iteration on
/// `1/|a(lambda)| - 1` safeguarded by bisection on `[0, |b|]`.
pub fn lr_reconstruct(input: &ReconstructionInput) -> Result<ReconstructionResult> {
    let gram = input.gram();
    let rhs = input.terms().fold(BlochVector::ZERO, |acc, (e, w)| {
        acc + e.axis * (w * (2.0 * e.probability - 1.0))
    });
    let interior = gram.solve_spd(rhs).ok_or(Error::NonSpanningBases)?;

    let (estimate, lambda, iterations) = if interior.norm() <= 1.0 {
        (interior, 0.0, 0)
    } else {
        solve_secular(&gram, rhs)?
    };

    let residual = (gram.mul(estimate) - rhs + estimate * lambda).norm();
    Ok(ReconstructionResult {
        estimate,
        estimator: Estimator::Lr,
        objective: lr_objective(estimate, input),
        iterations,
        converged: true,
        gradient_norm_final: residual,
        constraint_multiplier: lambda,
    })
}

fn solve_secular(gram: &Sym3, rhs: BlochVector) -> Result<(BlochVector, f64, usize)> {
    // |a(lambda)| <= |b| / lambda, so lambda = |b| is always feasible.
    let mut lo = 0.0;
    let mut hi = rhs.norm();
    let mut lambda = 0.5 * hi;
    let mut best = None;
    for iter in 1..=SECULAR_MAX_ITER {
        let shifted = gram.shifted(lambda);
        let a = shifted.solve_spd(rhs).ok_or(Error::NonSpanningBases)?;
        let norm = a.norm();
        best = Some((a, lambda, iter));
        if (norm - 1.0).abs() <= SECULAR_TOLERANCE {
            break;
        }
        if norm > 1.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
        // Newton step on phi(lambda) = 1/|a| - 1, phi' = a^T (G + lambda I)^{-1} a / |a|^3.
        let q = shifted.solve_spd(a).ok_or(Error::NonSpanningBases)?;
        let phi = 1.0 / norm - 1.0;
        let dphi = a.dot(q) / (norm * norm * norm);
        let newton = lambda - phi / dphi;
        lambda = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let (a, lambda, iter) = best.expect("at least one secular iteration");
    // Remove the last few ulps of radial error.
    let n = a.norm();
    let a = if n > 1.0 { a * (1.0 / n) } else { a };
    Ok((a, lambda, iter))
}
