//! Maximum-likelihood EPP scores.
//!
//! The model is Bradley–Terry on aggregated counts: model `i` beats model `j`
//! with probability `inv_logit(β_i − β_j)`. The log-likelihood is the
//! binomial likelihood of `w` given `n`, optionally ridge-penalised by
//! `(λ/2)‖β‖²`:
//!
//! ```text
//! ℓ(β) = Σ_{i<j} [ w_ij ln σ(β_i − β_j) + w_ji ln σ(β_j − β_i) ] − (λ/2) ‖β‖²
//! ```
//!
//! Fractional wins from half-ties enter this expression directly, which makes
//! it a quasi-likelihood when ties are present. Scores are identified by
//! centring them to mean zero, so `inv_logit(β_i)` is the probability of beating
//! an average model.
//!
//! Two solvers are provided. [`Algorithm::Mm`] is the minorization–maximization
//! scheme: each sweep maximises Hunter's separable surrogate, which has the
//! closed form `β_i += ln(W_i / E_i)` (observed over expected wins) when
//! `λ = 0` and a one-dimensional root otherwise. It never decreases the
//! penalised likelihood. [`Algorithm::Newton`] takes damped Newton steps on
//! the same objective.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Cholesky, SquareMatrix};
use crate::match_engine::{lowercase_enum_text, PairwiseCounts};
use crate::report::{csv_num, csv_string};
use crate::scalar::{inv_logit, ln_inv_logit, logit, Scalar};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid fit configuration: {0}")]
    Config(String),
    #[error("separation: w = {w}, n = {n} gives an infinite maximum-likelihood estimate")]
    Separation { w: f64, n: f64 },
    #[error("beta has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Mm,
    Newton,
}

lowercase_enum_text!(Algorithm { Mm => "mm", Newton => "newton" });

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitConfig<T> {
    pub algorithm: Algorithm,
    pub ridge_lambda: T,
    /// Stop once `max |Δβ| ≤ tol` and the penalised gradient has max-norm `≤ 10·tol`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for FitConfig<T> {
    /// MM, `λ = 1e-6`, `tol = 1e-9` (raised to `1000·ε` for `f32`),
    /// `max_iter = 10 000`.
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Mm,
            ridge_lambda: T::lit(1e-6),
            tol: T::lit(1e-9).max(T::epsilon() * T::lit(1000.0)),
            max_iter: 10_000,
        }
    }
}

impl<T: Scalar> FitConfig<T> {
    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.ridge_lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.ridge_lambda >= T::zero()) || !self.ridge_lambda.is_finite() {
            return Err(FitError::Config(
                "ridge_lambda must be a finite value >= 0".into(),
            ));
        }
        if !(self.tol > T::zero()) {
            return Err(FitError::Config("tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(FitError::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Whether a model won, or lost, every match it played.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Separation {
    #[default]
    None,
    AllWins,
    AllLosses,
}

impl fmt::Display for Separation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "NONE",
            Self::AllWins => "ALL_WINS",
            Self::AllLosses => "ALL_LOSSES",
        })
    }
}

impl FromStr for Separation {
    type Err = FitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NONE" => Ok(Self::None),
            "ALL_WINS" => Ok(Self::AllWins),
            "ALL_LOSSES" => Ok(Self::AllLosses),
            _ => Err(FitError::Config(format!("unknown separation flag `{s}`"))),
        }
    }
}

/// Fitted scores for one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EppScores<T> {
    pub dataset_id: String,
    pub models: Vec<String>,
    /// Mean-zero within each connected component.
    pub beta: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
    /// Penalised log-likelihood at `beta`.
    pub log_likelihood: T,
    /// Pseudo-inverse of the observed information on the mean-zero subspace.
    pub covariance: Vec<Vec<T>>,
    pub separation: Vec<Separation>,
    /// Connected-component label per model.
    #[serde(default)]
    pub components: Vec<usize>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub ridge_lambda: T,
}

pub const SCORES_CSV_HEADER: [&str; 5] = ["model", "beta", "se", "separation", "converged"];

impl<T: Scalar> EppScores<T> {
    pub fn m(&self) -> usize {
        self.models.len()
    }

    pub fn index_of(&self, model: &str) -> Option<usize> {
        self.models.iter().position(|m| m == model)
    }

    pub fn beta_of(&self, model: &str) -> Option<T> {
        self.index_of(model).map(|i| self.beta[i])
    }

    /// Standard error of `β_i`.
    pub fn se(&self, i: usize) -> T {
        self.covariance[i][i].max(T::zero()).sqrt()
    }

    pub fn to_csv_string(&self) -> String {
        csv_string(
            &SCORES_CSV_HEADER,
            (0..self.m()).map(|i| {
                [
                    self.models[i].clone(),
                    csv_num(self.beta[i]),
                    csv_num(self.se(i)),
                    self.separation[i].to_string(),
                    self.converged.to_string(),
                ]
            }),
        )
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scores serialize")
    }

    pub fn from_json_str(text: &str) -> Result<Self, FitError> {
        let s: Self = serde_json::from_str(text)?;
        let m = s.models.len();
        if s.beta.len() != m
            || s.separation.len() != m
            || s.covariance.len() != m
            || s.covariance.iter().any(|r| r.len() != m)
        {
            return Err(FitError::Dimension {
                expected: m,
                got: s.beta.len(),
            });
        }
        Ok(s)
    }
}

fn check_len<T: Scalar>(counts: &PairwiseCounts<T>, beta: &[T]) {
    assert_eq!(
        beta.len(),
        counts.m(),
        "beta length must equal the number of models"
    );
}

fn penalty<T: Scalar>(beta: &[T], lambda: T) -> T {
    if lambda > T::zero() {
        lambda * T::half() * beta.iter().map(|&b| b * b).sum::<T>()
    } else {
        T::zero()
    }
}

/// Penalised binomial log-likelihood. Each unordered pair is visited once.
///
/// # Panics
/// If `beta.len() != counts.m()`.
pub fn log_likelihood<T: Scalar>(counts: &PairwiseCounts<T>, beta: &[T], lambda: T) -> T {
    check_len(counts, beta);
    let m = counts.m();
    let mut ll = T::zero();
    for i in 0..m {
        for j in i + 1..m {
            if counts.n(i, j) == T::zero() {
                continue;
            }
            let d = beta[i] - beta[j];
            let (wij, wji) = (counts.w(i, j), counts.w(j, i));
            if wij > T::zero() {
                ll += wij * ln_inv_logit(d);
            }
            if wji > T::zero() {
                ll += wji * ln_inv_logit(-d);
            }
        }
    }
    ll - penalty(beta, lambda)
}

/// `g_i = Σ_j (w_ij − n_ij σ(β_i − β_j)) − λ β_i`.
///
/// # Panics
/// If `beta.len() != counts.m()`.
pub fn gradient<T: Scalar>(counts: &PairwiseCounts<T>, beta: &[T], lambda: T) -> Vec<T> {
    check_len(counts, beta);
    let m = counts.m();
    let mut g = vec![T::zero(); m];
    for i in 0..m {
        for j in i + 1..m {
            let n = counts.n(i, j);
            if n == T::zero() {
                continue;
            }
            let r = counts.w(i, j) - n * inv_logit(beta[i] - beta[j]);
            g[i] += r;
            g[j] -= r;
        }
    }
    if lambda > T::zero() {
        for (gi, &b) in g.iter_mut().zip(beta) {
            *gi -= lambda * b;
        }
    }
    g
}

/// Observed information of the unpenalised likelihood: the weighted graph
/// Laplacian with weights `n_ij p_ij (1 − p_ij)`.
fn information<T: Scalar>(counts: &PairwiseCounts<T>, beta: &[T]) -> SquareMatrix<T> {
    let m = counts.m();
    let mut h = SquareMatrix::zeros(m);
    for i in 0..m {
        for j in i + 1..m {
            let n = counts.n(i, j);
            if n == T::zero() {
                continue;
            }
            let p = inv_logit(beta[i] - beta[j]);
            let v = n * p * (T::one() - p);
            *h.at(i, j) -= v;
            *h.at(j, i) -= v;
            *h.at(i, i) += v;
            *h.at(j, j) += v;
        }
    }
    h
}

/// `L + λI + 11ᵀ/m`: positive definite on a connected graph, and acts as
/// `L + λI` on mean-zero vectors.
fn regularised_information<T: Scalar>(
    counts: &PairwiseCounts<T>,
    beta: &[T],
    lambda: T,
) -> SquareMatrix<T> {
    let m = counts.m();
    let mut h = information(counts, beta);
    let inv_m = T::one() / T::from_usize_lossy(m);
    for i in 0..m {
        for j in 0..m {
            *h.at(i, j) += inv_m;
        }
        *h.at(i, i) += lambda;
    }
    h
}

/// Largest step the surrogate maximiser may take when it has no finite root.
const MM_STEP_CAP: f64 = 4.0;

/// Solves `wins − expected·e^δ − λ(b + δ) = 0` for `δ`. The left side is
/// strictly decreasing in `δ`.
fn surrogate_root<T: Scalar>(wins: T, expected: T, lambda: T, b: T) -> T {
    let cap = T::lit(MM_STEP_CAP);
    if lambda == T::zero() {
        if wins == T::zero() {
            return -cap;
        }
        if expected == T::zero() {
            return cap;
        }
        return (wins / expected).ln();
    }
    let f = |d: T| wins - expected * d.exp() - lambda * (b + d);
    let (mut lo, mut hi) = (T::zero(), T::zero());
    let mut width = T::one();
    if f(T::zero()) > T::zero() {
        hi = width;
        while f(hi) > T::zero() && hi < T::lit(1e6) {
            lo = hi;
            width += width;
            hi = lo + width;
        }
    } else {
        lo = -width;
        while f(lo) < T::zero() && lo > T::lit(-1e6) {
            hi = lo;
            width += width;
            lo = hi - width;
        }
    }
    let mut d = (lo + hi) * T::half();
    for _ in 0..200 {
        let fd = f(d);
        if fd == T::zero() {
            break;
        }
        if fd > T::zero() {
            lo = d;
        } else {
            hi = d;
        }
        let slope = -(expected * d.exp()) - lambda;
        let mut next = d - fd / slope;
        if !(next > lo && next < hi) {
            next = (lo + hi) * T::half();
        }
        if (next - d).abs() <= T::epsilon() * (T::one() + d.abs()) {
            d = next;
            break;
        }
        d = next;
    }
    d
}

/// One minorization–maximization sweep. All coordinates are updated from the
/// same current point, then the result is centred. The penalised
/// log-likelihood of the returned vector is never below that of `beta`.
///
/// # Panics
/// If `beta.len() != counts.m()`.
pub fn mm_step<T: Scalar>(counts: &PairwiseCounts<T>, beta: &[T], lambda: T) -> Vec<T> {
    check_len(counts, beta);
    let m = counts.m();
    let mut expected = vec![T::zero(); m];
    for i in 0..m {
        for j in i + 1..m {
            let n = counts.n(i, j);
            if n == T::zero() {
                continue;
            }
            let p = inv_logit(beta[i] - beta[j]);
            expected[i] += n * p;
            expected[j] += n * (T::one() - p);
        }
    }
    let mut next: Vec<T> = (0..m)
        .map(|i| {
            if counts.total_matches(i) == T::zero() {
                return beta[i];
            }
            beta[i] + surrogate_root(counts.total_wins(i), expected[i], lambda, beta[i])
        })
        .collect();
    center(&mut next);
    next
}

fn center<T: Scalar>(beta: &mut [T]) {
    let mu = crate::scalar::mean(beta);
    beta.iter_mut().for_each(|b| *b -= mu);
}

fn max_abs<T: Scalar>(v: impl IntoIterator<Item = T>) -> T {
    v.into_iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

struct ComponentFit<T> {
    beta: Vec<T>,
    converged: bool,
    iterations: usize,
    covariance: SquareMatrix<T>,
    covariance_ok: bool,
}

fn converged_at<T: Scalar>(
    counts: &PairwiseCounts<T>,
    beta: &[T],
    step: T,
    cfg: &FitConfig<T>,
) -> bool {
    step <= cfg.tol && max_abs(gradient(counts, beta, cfg.ridge_lambda)) <= cfg.tol * T::lit(10.0)
}

/// MM with SQUAREM extrapolation. Each iteration takes two MM steps, jumps
/// along the fitted secant, and finishes with one MM step from the jump. The
/// jump is kept only if it does at least as well as the plain double step, so
/// the objective never decreases. Plain MM crawls when a model wins or loses
/// everything, since its score then grows roughly like the log of the
/// iteration count.
fn fit_mm<T: Scalar>(counts: &PairwiseCounts<T>, cfg: &FitConfig<T>) -> (Vec<T>, bool, usize) {
    let lambda = cfg.ridge_lambda;
    let mut beta = vec![T::zero(); counts.m()];
    let norm = |v: &[T]| v.iter().map(|&x| x * x).sum::<T>().sqrt();
    for it in 1..=cfg.max_iter {
        let b1 = mm_step(counts, &beta, lambda);
        let b2 = mm_step(counts, &b1, lambda);
        let r: Vec<T> = b1.iter().zip(&beta).map(|(&a, &b)| a - b).collect();
        let v: Vec<T> = (0..beta.len()).map(|i| b2[i] - b1[i] - r[i]).collect();
        let (rn, vn) = (norm(&r), norm(&v));
        let mut next = b2;
        if vn > T::zero() && rn > T::zero() {
            let alpha = (rn / vn).max(T::one());
            let jump: Vec<T> = (0..beta.len())
                .map(|i| beta[i] + T::lit(2.0) * alpha * r[i] + alpha * alpha * v[i])
                .collect();
            let cand = mm_step(counts, &jump, lambda);
            let f_cand = log_likelihood(counts, &cand, lambda);
            if f_cand.is_finite() && f_cand >= log_likelihood(counts, &next, lambda) {
                next = cand;
            }
        }
        let step = max_abs(next.iter().zip(&beta).map(|(&a, &b)| a - b));
        beta = next;
        if converged_at(counts, &beta, step, cfg) {
            return (beta, true, it);
        }
    }
    (beta, false, cfg.max_iter)
}

fn fit_newton<T: Scalar>(counts: &PairwiseCounts<T>, cfg: &FitConfig<T>) -> (Vec<T>, bool, usize) {
    let lambda = cfg.ridge_lambda;
    let m = counts.m();
    let mut beta = vec![T::zero(); m];
    let mut f = log_likelihood(counts, &beta, lambda);
    for it in 1..=cfg.max_iter {
        let g = gradient(counts, &beta, lambda);
        let Some(chol) = Cholesky::factor(&regularised_information(counts, &beta, lambda)) else {
            return (beta, false, it);
        };
        let dir = chol.solve(&g);
        let slope: T = g.iter().zip(&dir).map(|(&a, &b)| a * b).sum();
        let slack = T::lit(100.0) * T::epsilon() * (T::one() + f.abs());
        let mut t = T::one();
        let (cand, f_new) = loop {
            let mut cand: Vec<T> = beta.iter().zip(&dir).map(|(&b, &d)| b + t * d).collect();
            center(&mut cand);
            let f_new = log_likelihood(counts, &cand, lambda);
            if f_new >= f + T::lit(1e-4) * t * slope - slack || t < T::lit(1e-12) {
                break (cand, f_new);
            }
            t *= T::half();
        };
        let step = max_abs(cand.iter().zip(&beta).map(|(&a, &b)| a - b));
        beta = cand;
        f = f_new;
        if converged_at(counts, &beta, step, cfg) {
            return (beta, true, it);
        }
    }
    (beta, false, cfg.max_iter)
}

/// Fits one connected component.
fn fit_connected<T: Scalar>(counts: &PairwiseCounts<T>, cfg: &FitConfig<T>) -> ComponentFit<T> {
    let (beta, converged, iterations) = match cfg.algorithm {
        Algorithm::Mm => fit_mm(counts, cfg),
        Algorithm::Newton => fit_newton(counts, cfg),
    };
    let (covariance, covariance_ok) = centred_covariance(counts, &beta, cfg.ridge_lambda);
    ComponentFit {
        beta,
        converged,
        iterations,
        covariance,
        covariance_ok,
    }
}

/// `P (L + λI + 11ᵀ/m)⁻¹ P` with `P = I − 11ᵀ/m`.
fn centred_covariance<T: Scalar>(
    counts: &PairwiseCounts<T>,
    beta: &[T],
    lambda: T,
) -> (SquareMatrix<T>, bool) {
    let m = counts.m();
    let Some(chol) = Cholesky::factor(&regularised_information(counts, beta, lambda)) else {
        let mut nan = SquareMatrix::zeros(m);
        nan.data.iter_mut().for_each(|x| *x = T::nan());
        return (nan, false);
    };
    let mut c = chol.inverse();
    let mf = T::from_usize_lossy(m);
    let row_means: Vec<T> = (0..m)
        .map(|i| (0..m).map(|j| c.get(i, j)).sum::<T>() / mf)
        .collect();
    let grand = row_means.iter().copied().sum::<T>() / mf;
    for i in 0..m {
        for j in 0..m {
            *c.at(i, j) = c.get(i, j) - row_means[i] - row_means[j] + grand;
        }
    }
    (c, true)
}

/// Flags models that won, or lost, every match they played. Models without
/// matches are `None`.
pub fn detect_separation<T: Scalar>(counts: &PairwiseCounts<T>) -> Vec<Separation> {
    (0..counts.m())
        .map(|i| {
            let played: Vec<usize> = (0..counts.m())
                .filter(|&j| counts.n(i, j) > T::zero())
                .collect();
            if played.is_empty() {
                Separation::None
            } else if played.iter().all(|&j| counts.w(i, j) == counts.n(i, j)) {
                Separation::AllWins
            } else if played.iter().all(|&j| counts.w(i, j) == T::zero()) {
                Separation::AllLosses
            } else {
                Separation::None
            }
        })
        .collect()
}

/// Maximum-likelihood scores for two models: `±½ logit(w / n)`.
pub fn two_model_closed_form<T: Scalar>(w: T, n: T) -> Result<(T, T), FitError> {
    if !(w > T::zero() && w < n) {
        return Err(FitError::Separation {
            w: w.to_f64_lossy(),
            n: n.to_f64_lossy(),
        });
    }
    let b = logit(w / n) * T::half();
    Ok((b, -b))
}

/// Fits EPP scores by penalised maximum likelihood.
///
/// Each connected component of the comparison graph is fitted on its own and
/// centred to mean zero; a warning is attached when there is more than one.
/// Models with no matches keep a score of zero. Non-convergence is reported
/// through `converged = false`, not as an error.
pub fn fit_epp<T: Scalar>(
    counts: &PairwiseCounts<T>,
    cfg: &FitConfig<T>,
) -> Result<EppScores<T>, FitError> {
    cfg.validate()?;
    let m = counts.m();
    let labels = counts.components();
    let n_components = labels.iter().copied().max().map_or(0, |l| l + 1);

    let mut beta = vec![T::zero(); m];
    let mut covariance = vec![vec![T::zero(); m]; m];
    let mut converged = true;
    let mut iterations = 0;
    let mut warnings = Vec::new();

    for comp in 0..n_components {
        let members: Vec<usize> = (0..m).filter(|&i| labels[i] == comp).collect();
        if members.len() < 2 {
            warnings.push(format!(
                "model `{}` has no matches; score fixed at 0",
                counts.models()[members[0]]
            ));
            continue;
        }
        let sub = counts.restricted(&members);
        let fit = fit_connected(&sub, cfg);
        converged &= fit.converged;
        iterations = iterations.max(fit.iterations);
        if !fit.covariance_ok {
            warnings.push(format!(
                "information matrix not positive definite for component {comp}; covariance unavailable"
            ));
        }
        for (a, &i) in members.iter().enumerate() {
            beta[i] = fit.beta[a];
            for (b, &j) in members.iter().enumerate() {
                covariance[i][j] = fit.covariance.get(a, b);
            }
        }
    }
    if n_components > 1 {
        warnings.push(format!(
            "comparison graph has {n_components} connected components; scores are comparable only within a component"
        ));
    }
    if !converged {
        warnings.push(format!(
            "did not converge within {} iterations",
            cfg.max_iter
        ));
    }
    let separation = detect_separation(counts);
    if separation.iter().any(|s| *s != Separation::None) {
        warnings.push(
            "some models won or lost every match; their magnitudes depend on ridge_lambda".into(),
        );
    }

    Ok(EppScores {
        dataset_id: counts.dataset_id().to_string(),
        models: counts.models().to_vec(),
        log_likelihood: log_likelihood(counts, &beta, cfg.ridge_lambda),
        beta,
        converged,
        iterations,
        covariance,
        separation,
        components: labels,
        warnings,
        algorithm: cfg.algorithm,
        ridge_lambda: cfg.ridge_lambda,
    })
}
