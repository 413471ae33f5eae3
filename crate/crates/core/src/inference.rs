//! Win probabilities and significance tests.
//!
//! p-values assume independent matches. Matches built from overlapping
//! train/test splits violate that, so treat the p-values as approximate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt_solver::{fit_epp, log_likelihood, EppScores, FitConfig, FitError};
use crate::distributions::{chi2_1_sf, normal_two_sided_p, student_t_two_sided_p};
use crate::match_engine::PairwiseCounts;
use crate::scalar::{inv_logit, Scalar};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("correlation undefined for a constant sample")]
    Constant,
    #[error("standard error of the difference between `{0}` and `{1}` is zero")]
    DegenerateVariance(String, String),
    #[error("model index {0} out of range")]
    Index(usize),
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TestMethod {
    Wald,
    Lrt,
    Spearman,
    MannWhitney,
}

/// Significance marker: `***` for p ≤ 0.001, `**` for p ≤ 0.01, `*` for p ≤ 0.05.
pub fn stars<T: Scalar>(p: T) -> &'static str {
    let p = p.to_f64_lossy();
    if p <= 0.001 {
        "***"
    } else if p <= 0.01 {
        "**"
    } else if p <= 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TestResult<T> {
    pub statistic: T,
    pub p_value: T,
    pub method: TestMethod,
    pub stars: String,
}

impl<T: Scalar> TestResult<T> {
    pub fn new(statistic: T, p_value: T, method: TestMethod) -> Self {
        let p_value = p_value.max(T::zero()).min(T::one());
        Self {
            statistic,
            p_value,
            method,
            stars: stars(p_value).to_string(),
        }
    }
}

/// `P(model i beats model j) = inv_logit(β_i − β_j)`.
///
/// Evaluated so that `win_probability(a, b) + win_probability(b, a)` is
/// exactly one.
pub fn win_probability<T: Scalar>(beta_i: T, beta_j: T) -> T {
    // the smaller side is computed directly to keep tail precision, and the
    // larger side as its complement, which rounds back to exactly one
    let d = beta_i - beta_j;
    let low = inv_logit(-d.abs());
    if d >= T::zero() {
        T::one() - low
    } else {
        low
    }
}

/// Probability of beating an average model (`β = 0`).
pub fn prob_vs_average<T: Scalar>(beta_i: T) -> T {
    win_probability(beta_i, T::zero())
}

fn check_index<T: Scalar>(scores: &EppScores<T>, i: usize) -> Result<(), InferenceError> {
    if i >= scores.m() {
        Err(InferenceError::Index(i))
    } else {
        Ok(())
    }
}

/// Wald test of `β_i = β_j` using the fitted covariance.
pub fn wald_test_difference<T: Scalar>(
    scores: &EppScores<T>,
    i: usize,
    j: usize,
) -> Result<TestResult<T>, InferenceError> {
    check_index(scores, i)?;
    check_index(scores, j)?;
    let diff = scores.beta[i] - scores.beta[j];
    if diff == T::zero() {
        return Ok(TestResult::new(T::zero(), T::one(), TestMethod::Wald));
    }
    let c = &scores.covariance;
    let var = c[i][i] + c[j][j] - T::lit(2.0) * c[i][j];
    if !(var > T::zero()) {
        return Err(InferenceError::DegenerateVariance(
            scores.models[i].clone(),
            scores.models[j].clone(),
        ));
    }
    let z = diff / var.sqrt();
    Ok(TestResult::new(z, normal_two_sided_p(z), TestMethod::Wald))
}

/// Wald test of `β_i = 0`, i.e. against the average model.
pub fn wald_test_vs_average<T: Scalar>(
    scores: &EppScores<T>,
    i: usize,
) -> Result<TestResult<T>, InferenceError> {
    check_index(scores, i)?;
    let b = scores.beta[i];
    if b == T::zero() {
        return Ok(TestResult::new(T::zero(), T::one(), TestMethod::Wald));
    }
    let var = scores.covariance[i][i];
    if !(var > T::zero()) {
        return Err(InferenceError::DegenerateVariance(
            scores.models[i].clone(),
            "average".into(),
        ));
    }
    let z = b / var.sqrt();
    Ok(TestResult::new(z, normal_two_sided_p(z), TestMethod::Wald))
}

/// Likelihood-ratio test of `β_i = β_j`. The restricted fit pools models
/// `i` and `j` into one; both fits use `cfg`, and the statistic compares the
/// unpenalised log-likelihoods.
pub fn lr_test_difference<T: Scalar>(
    counts: &PairwiseCounts<T>,
    i: usize,
    j: usize,
    cfg: &FitConfig<T>,
) -> Result<TestResult<T>, InferenceError> {
    let m = counts.m();
    if i >= m || j >= m {
        return Err(InferenceError::Index(i.max(j)));
    }
    if i == j {
        return Ok(TestResult::new(T::zero(), T::one(), TestMethod::Lrt));
    }
    let full = fit_epp(counts, cfg)?;
    let restricted = fit_epp(&counts.merged(i, j), cfg)?;
    let (keep, drop) = (i.min(j), i.max(j));
    let mut expanded = Vec::with_capacity(m);
    let mut it = restricted.beta.iter();
    for k in 0..m {
        if k == drop {
            expanded.push(restricted.beta[keep]);
        } else {
            expanded.push(*it.next().expect("one fewer model"));
        }
    }
    let stat = T::lit(2.0)
        * (log_likelihood(counts, &full.beta, T::zero())
            - log_likelihood(counts, &expanded, T::zero()));
    let stat = stat.max(T::zero());
    Ok(TestResult::new(stat, chi2_1_sf(stat), TestMethod::Lrt))
}

/// Ranks from 1, ties sharing their average rank.
pub fn midranks<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("NaN-free sample"));
    let mut ranks = vec![T::zero(); xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = T::from_usize_lossy(start + 1 + end) * T::half();
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Option<T> {
    let (mx, my) = (crate::scalar::mean(x), crate::scalar::mean(y));
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == T::zero() || syy == T::zero() {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one()))
}

/// Spearman's rank correlation with a two-sided t-approximation p-value.
pub fn spearman<T: Scalar>(x: &[T], y: &[T]) -> Result<TestResult<T>, InferenceError> {
    if x.len() != y.len() {
        return Err(InferenceError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(InferenceError::TooFew { needed: 3, got: n });
    }
    let rho = pearson(&midranks(x), &midranks(y)).ok_or(InferenceError::Constant)?;
    let df = T::from_usize_lossy(n - 2);
    let p = if rho.abs() >= T::one() {
        T::zero()
    } else {
        let t = rho * (df / (T::one() - rho * rho)).sqrt();
        student_t_two_sided_p(t, df)
    };
    Ok(TestResult::new(rho, p, TestMethod::Spearman))
}

/// Mann–Whitney test. The statistic is `U` of sample `a`; the p-value uses
/// the normal approximation with tie and continuity corrections.
pub fn mann_whitney<T: Scalar>(a: &[T], b: &[T]) -> Result<TestResult<T>, InferenceError> {
    if a.is_empty() || b.is_empty() {
        return Err(InferenceError::TooFew {
            needed: 1,
            got: a.len().min(b.len()),
        });
    }
    let pooled: Vec<T> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let (na, nb) = (T::from_usize_lossy(a.len()), T::from_usize_lossy(b.len()));
    let rank_sum: T = ranks[..a.len()].iter().copied().sum();
    let u = rank_sum - na * (na + T::one()) * T::half();

    let n = na + nb;
    let mut sorted = pooled;
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("NaN-free sample"));
    let mut tie_term = T::zero();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = T::from_usize_lossy(end - start);
        tie_term += t * t * t - t;
        start = end;
    }
    let mean = na * nb * T::half();
    let var = if n > T::one() {
        na * nb / T::lit(12.0) * ((n + T::one()) - tie_term / (n * (n - T::one())))
    } else {
        T::zero()
    };
    let p = if var > T::zero() {
        let z = ((u - mean).abs() - T::half()).max(T::zero()) / var.sqrt();
        normal_two_sided_p(z)
    } else {
        T::one()
    };
    Ok(TestResult::new(u, p, TestMethod::MannWhitney))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt_solver::Algorithm;
    use proptest::prelude::*;

    fn two(w: f64, l: f64) -> PairwiseCounts<f64> {
        PairwiseCounts::from_wins(
            "d",
            vec!["a".into(), "b".into()],
            vec![vec![0.0, w], vec![l, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn reported_probabilities() {
        assert!((win_probability(1.27_f64, 1.08) - 0.547).abs() < 5e-4);
        assert!((win_probability(-5.91_f64, -7.52) - 0.833).abs() < 5e-4);
        assert!((win_probability(7.49_f64, 6.25) - 0.776).abs() < 5e-4);
        assert!((win_probability(1.29_f64, 1.16) - 0.532).abs() < 5e-4);
        assert_eq!(win_probability(0.4, 0.4), 0.5);
    }

    #[test]
    fn probability_against_average() {
        assert_eq!(prob_vs_average(0.0), 0.5);
        assert!((prob_vs_average(1.29_f64) - 1.0 / (1.0 + (-1.29_f64).exp())).abs() < 1e-15);
        assert!((prob_vs_average(1.29_f64) - 0.784).abs() < 5e-4);
        // e^-11.24 / (1 + e^-11.24) = 1.31379e-5
        let p = prob_vs_average(-11.24_f64);
        assert!((p / 1.313_785_056e-5 - 1.0).abs() < 1e-8, "{p}");
    }

    #[test]
    fn star_thresholds_are_inclusive() {
        assert_eq!(stars(0.05), "*");
        assert_eq!(stars(0.0500001), "");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.001), "***");
        assert_eq!(stars(0.2), "");
        assert_eq!(stars(0.0), "***");
    }

    fn scores_with(beta: Vec<f64>, cov: Vec<Vec<f64>>) -> EppScores<f64> {
        let m = beta.len();
        EppScores {
            dataset_id: "d".into(),
            models: (0..m).map(|i| format!("m{i}")).collect(),
            beta,
            converged: true,
            iterations: 1,
            log_likelihood: 0.0,
            covariance: cov,
            separation: vec![Default::default(); m],
            components: vec![0; m],
            warnings: vec![],
            algorithm: Algorithm::Mm,
            ridge_lambda: 0.0,
        }
    }

    #[test]
    fn wald_equal_scores() {
        let s = scores_with(vec![0.3, 0.3], vec![vec![0.0; 2]; 2]);
        let r = wald_test_difference(&s, 0, 1).unwrap();
        assert_eq!((r.statistic, r.p_value, r.stars.as_str()), (0.0, 1.0, ""));
    }

    #[test]
    fn wald_at_critical_z() {
        // var of the difference is 1, so z = β_i − β_j
        let s = scores_with(
            vec![1.959964 / 2.0, -1.959964 / 2.0],
            vec![vec![0.25, -0.25], vec![-0.25, 0.25]],
        );
        let r = wald_test_difference(&s, 0, 1).unwrap();
        assert!((r.statistic - 1.959964).abs() < 1e-12);
        assert!((r.p_value - 0.05).abs() < 1e-4);
    }

    #[test]
    fn wald_degenerate_variance() {
        let s = scores_with(vec![0.5, -0.5], vec![vec![0.0; 2]; 2]);
        assert!(matches!(
            wald_test_difference(&s, 0, 1),
            Err(InferenceError::DegenerateVariance(..))
        ));
    }

    /// Exact two-sided binomial test (sum of point probabilities no larger
    /// than the observed one), in log space.
    fn exact_binomial_p(k: u64, n: u64) -> f64 {
        let ln_choose = |k: u64| -> f64 {
            (1..=n).map(|x| (x as f64).ln()).sum::<f64>()
                - (1..=k).map(|x| (x as f64).ln()).sum::<f64>()
                - (1..=n - k).map(|x| (x as f64).ln()).sum::<f64>()
        };
        let ln_pmf = |k: u64| ln_choose(k) - n as f64 * std::f64::consts::LN_2;
        let obs = ln_pmf(k);
        (0..=n)
            .map(ln_pmf)
            .filter(|&lp| lp <= obs + 1e-7)
            .map(f64::exp)
            .sum()
    }

    #[test]
    fn wald_and_exact_binomial_agree_in_magnitude() {
        let s = fit_epp(&two(264.0, 136.0), &FitConfig::default().with_lambda(0.0)).unwrap();
        let wald = wald_test_difference(&s, 0, 1).unwrap();
        let exact = exact_binomial_p(264, 400);
        // z = 0.6633 / sqrt(1/89.76) = 6.284, p ≈ 3.3e-10; exact ≈ 1.7e-10
        assert!((wald.statistic - 6.2843).abs() < 1e-3, "{}", wald.statistic);
        assert!(wald.p_value < 1e-9 && exact < 1e-9);
        assert!(
            (wald.p_value.log10() - exact.log10()).abs() < 0.5,
            "{} vs {exact}",
            wald.p_value
        );
        // closer to the null both are normal-approximation accurate
        let s = fit_epp(&two(220.0, 180.0), &FitConfig::default().with_lambda(0.0)).unwrap();
        let wald = wald_test_difference(&s, 0, 1).unwrap();
        let exact = exact_binomial_p(220, 400);
        assert!(
            (wald.p_value / exact - 1.0).abs() < 0.15,
            "{} vs {exact}",
            wald.p_value
        );
    }

    #[test]
    fn lrt_two_model_statistic() {
        let r = lr_test_difference(
            &two(264.0, 136.0),
            0,
            1,
            &FitConfig::default().with_lambda(0.0),
        )
        .unwrap();
        let want = 2.0 * (264.0 * 0.66_f64.ln() + 136.0 * 0.34_f64.ln() + 400.0 * 2f64.ln());
        assert!(
            (r.statistic - want).abs() < 1e-6,
            "{} vs {want}",
            r.statistic
        );
        assert!((r.statistic - 41.69).abs() < 0.01);
        assert_eq!(r.stars, "***");
    }

    #[test]
    fn lrt_lossless_merge() {
        // models 0 and 1 have identical records against model 2 and split 5/5
        let c = PairwiseCounts::from_wins(
            "d",
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 5.0, 7.0],
                vec![5.0, 0.0, 7.0],
                vec![3.0, 3.0, 0.0],
            ],
        )
        .unwrap();
        let r = lr_test_difference(&c, 0, 1, &FitConfig::default()).unwrap();
        assert!(r.statistic < 1e-8);
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0])
                .unwrap()
                .statistic,
            1.0
        );
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0])
                .unwrap()
                .statistic,
            -1.0
        );
        // 1 − 6Σd²/(n(n²−1)) with d = (−2, 1, 1): 1 − 36/24
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0])
                .unwrap()
                .statistic,
            -0.5
        );
    }

    #[test]
    fn spearman_errors() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(InferenceError::Constant)
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0, 2.0]),
            Err(InferenceError::TooFew { .. })
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(InferenceError::LengthMismatch(..))
        ));
    }

    #[test]
    fn spearman_p_value_against_exact_t() {
        // n = 10, rho = 0.6 → t = 0.6·sqrt(8/0.64) = 2.1213, df = 8, two-sided p = 0.06666
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let y = [2.0, 1.0, 4.0, 3.0, 9.0, 10.0, 5.0, 8.0, 6.0, 7.0];
        let r = spearman(&x, &y).unwrap();
        let rho_oracle = {
            let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            1.0 - 6.0 * d2 / (10.0 * 99.0)
        };
        assert!((r.statistic - rho_oracle).abs() < 1e-12);
        let t = rho_oracle * (8.0 / (1.0 - rho_oracle * rho_oracle)).sqrt();
        let p = student_t_two_sided_p(t, 8.0);
        assert!((r.p_value - p).abs() < 1e-12);
    }

    /// Counts pairs (x, y) with x > y, ties counted as one half.
    fn brute_force_u(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .flat_map(|x| {
                b.iter().map(move |y| {
                    if x > y {
                        1.0
                    } else if x == y {
                        0.5
                    } else {
                        0.0
                    }
                })
            })
            .sum()
    }

    #[test]
    fn mann_whitney_examples() {
        let r = mann_whitney(&[5.0, 6.0, 7.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 9.0);
        let a = [0.2, 0.4, 0.4, 0.9];
        let r = mann_whitney(&a, &a).unwrap();
        assert_eq!(r.statistic, 8.0);
        assert!(r.p_value > 0.9);
        let r = mann_whitney(&[1.0, 3.0], &[2.0, 4.0]).unwrap();
        assert_eq!(r.statistic, brute_force_u(&[1.0, 3.0], &[2.0, 4.0]));
        assert_eq!(r.statistic, 1.0);
        assert!(mann_whitney::<f64>(&[], &[1.0]).is_err());
    }

    #[test]
    fn mann_whitney_normal_approximation() {
        // n1 = n2 = 10 complete separation: U = 100, μ = 50, σ² = 100·21/12 = 175
        let a: Vec<f64> = (11..=20).map(f64::from).collect();
        let b: Vec<f64> = (1..=10).map(f64::from).collect();
        let r = mann_whitney(&a, &b).unwrap();
        let z = (50.0 - 0.5) / 175f64.sqrt();
        assert!((r.p_value - normal_two_sided_p(z)).abs() < 1e-15);
        assert_eq!(r.stars, "***");
    }

    proptest! {
        #[test]
        fn win_probability_antisymmetric(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            prop_assert_eq!(win_probability(a, b) + win_probability(b, a), 1.0);
            prop_assert_eq!(prob_vs_average(a).to_bits(), win_probability(a, 0.0).to_bits());
        }

        #[test]
        fn win_probability_monotone(a in -8.0f64..8.0, b in -8.0f64..8.0, step in 0.01f64..3.0) {
            prop_assert!(win_probability(a + step, b) > win_probability(a, b));
            prop_assert!(win_probability(a, b + step) < win_probability(a, b));
        }

        #[test]
        fn spearman_invariant_under_monotone_map(
            pairs in prop::collection::vec((0i32..20, 0i32..20), 3..15)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
            let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
            let fy: Vec<f64> = y.iter().map(|v| (v / 4.0).exp() - 100.0).collect();
            match (spearman(&x, &y), spearman(&x, &fy)) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.statistic, b.statistic);
                    prop_assert_eq!(a.p_value, b.p_value);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn mann_whitney_matches_brute_force_and_is_invariant(
            a in prop::collection::vec(0i32..10, 1..10),
            b in prop::collection::vec(0i32..10, 1..10),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let r = mann_whitney(&a, &b).unwrap();
            prop_assert_eq!(r.statistic, brute_force_u(&a, &b));
            let f = |v: &f64| v * v * v + 2.0 * v;
            let ta: Vec<f64> = a.iter().map(f).collect();
            let tb: Vec<f64> = b.iter().map(f).collect();
            prop_assert_eq!(mann_whitney(&ta, &tb).unwrap(), r);
        }
    }

    #[test]
    fn lrt_close_to_wald_on_balanced_design() {
        for (w, l) in [(220.0, 180.0), (240.0, 160.0), (264.0, 136.0)] {
            let c = two(w, l);
            let cfg = FitConfig::default().with_lambda(0.0);
            let lrt = lr_test_difference(&c, 0, 1, &cfg).unwrap();
            let wald = wald_test_difference(&fit_epp(&c, &cfg).unwrap(), 0, 1).unwrap();
            let z2 = wald.statistic * wald.statistic;
            assert!(
                (lrt.statistic / z2 - 1.0).abs() < 0.15,
                "{w}: {} vs {z2}",
                lrt.statistic
            );
        }
    }
}
