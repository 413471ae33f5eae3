//! Sequential Elo ratings and a seeded generator of synthetic scores with
//! known skills.
//!
//! The generator draws from ChaCha8 (`rand_chacha`) seeded through
//! `SeedableRng::seed_from_u64`, so tables are reproducible across platforms.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bt_solver::EppScores;
use crate::inference::{spearman, InferenceError};
use crate::match_engine::PairwiseCounts;
use crate::perf_table::{PerformanceTable, ScoreRecord};
use crate::scalar::{mean, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EloConfig<T> {
    pub initial_rating: T,
    pub k_factor: T,
    /// Rating difference at which the expected score is 10:1.
    pub scale: T,
}

impl<T: Scalar> Default for EloConfig<T> {
    fn default() -> Self {
        Self {
            initial_rating: T::lit(1000.0),
            k_factor: T::lit(32.0),
            scale: T::lit(400.0),
        }
    }
}

/// Plays `(winner, loser)` matches in order. Players start at the initial
/// rating when first seen.
pub fn sequential_elo<T: Scalar>(
    matches: &[(String, String)],
    cfg: &EloConfig<T>,
) -> BTreeMap<String, T> {
    sequential_elo_from(BTreeMap::new(), matches, cfg)
}

/// As [`sequential_elo`], continuing from existing ratings.
pub fn sequential_elo_from<T: Scalar>(
    mut ratings: BTreeMap<String, T>,
    matches: &[(String, String)],
    cfg: &EloConfig<T>,
) -> BTreeMap<String, T> {
    assert!(cfg.k_factor > T::zero() && cfg.scale > T::zero());
    let ten = T::lit(10.0);
    for (winner, loser) in matches {
        let rw = *ratings.entry(winner.clone()).or_insert(cfg.initial_rating);
        let rl = *ratings.entry(loser.clone()).or_insert(cfg.initial_rating);
        let expected = T::one() / (T::one() + ten.powf((rl - rw) / cfg.scale));
        let delta = cfg.k_factor * (T::one() - expected);
        ratings.insert(winner.clone(), rw + delta);
        ratings.insert(loser.clone(), rl - delta);
    }
    ratings
}

/// Aggregates `(winner, loser)` matches into counts over the sorted set of
/// players. Order of the list does not matter.
pub fn counts_from_matches<T: Scalar>(
    dataset_id: &str,
    matches: &[(String, String)],
) -> PairwiseCounts<T> {
    let players: Vec<String> = matches
        .iter()
        .flat_map(|(w, l)| [w.clone(), l.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = players
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let m = players.len();
    let mut w = vec![vec![T::zero(); m]; m];
    for (winner, loser) in matches {
        w[index[winner.as_str()]][index[loser.as_str()]] += T::one();
    }
    PairwiseCounts::from_wins(dataset_id, players, w).expect("square non-negative counts")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE", bound = "T: Scalar")]
pub enum Noise<T> {
    /// Standard Gumbel; score differences are then logistic, so the model is
    /// correctly specified and true EPP differences equal skill differences.
    Gumbel,
    /// Normal with standard deviation `sigma`; win probabilities are
    /// `Φ(Δ / (σ√2))`.
    Gaussian { sigma: T },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SyntheticSpec<T> {
    pub skills: Vec<T>,
    pub n_splits: usize,
    pub noise: Noise<T>,
    pub seed: u64,
}

impl<T: Scalar> SyntheticSpec<T> {
    /// Skills evenly spaced over `[lo, hi]`.
    pub fn linspace(m: usize, lo: T, hi: T, n_splits: usize, noise: Noise<T>, seed: u64) -> Self {
        let skills = if m == 1 {
            vec![(lo + hi) * T::half()]
        } else {
            (0..m)
                .map(|i| lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(m - 1))
                .collect()
        };
        Self {
            skills,
            n_splits,
            noise,
            seed,
        }
    }

    pub fn m(&self) -> usize {
        self.skills.len()
    }

    /// Zero-padded ids so lexicographic order is index order.
    pub fn model_ids(&self) -> Vec<String> {
        let width = self.m().saturating_sub(1).to_string().len();
        (0..self.m()).map(|i| format!("m{i:0width$}")).collect()
    }

    pub fn split_ids(&self) -> Vec<String> {
        let width = self.n_splits.saturating_sub(1).to_string().len();
        (0..self.n_splits)
            .map(|s| format!("s{s:0width$}"))
            .collect()
    }
}

pub const SYNTHETIC_DATASET: &str = "synthetic";
pub const SYNTHETIC_ALGORITHM: &str = "sim";

fn gumbel(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = Open01.sample(rng);
    -(-u.ln()).ln()
}

/// `score(i, s) = skills[i] + ε(i, s)` with independent noise, drawn model by
/// model and split by split.
pub fn simulate_scores<T: Scalar>(spec: &SyntheticSpec<T>) -> PerformanceTable<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let splits = spec.split_ids();
    let mut records = Vec::with_capacity(spec.m() * spec.n_splits);
    for (model, &skill) in spec.model_ids().into_iter().zip(&spec.skills) {
        for split in &splits {
            let eps = match spec.noise {
                Noise::Gumbel => T::lit(gumbel(&mut rng)),
                Noise::Gaussian { sigma } => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sigma * T::lit(z)
                }
            };
            records.push(ScoreRecord {
                dataset_id: SYNTHETIC_DATASET.into(),
                model_id: model.clone(),
                algorithm: SYNTHETIC_ALGORITHM.into(),
                split_id: split.clone(),
                score: skill + eps,
            });
        }
    }
    PerformanceTable::from_records(records).expect("generated keys are unique")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Recovery<T> {
    /// Largest absolute gap between centred fitted and centred true skills.
    pub max_abs_error: T,
    pub rank_correlation: T,
}

/// Compares a fit on simulated data with the generating skills. Models are
/// matched by id; a model missing from the fit is an error.
pub fn recovery_error<T: Scalar>(
    fitted: &EppScores<T>,
    spec: &SyntheticSpec<T>,
) -> Result<Recovery<T>, InferenceError> {
    let ids = spec.model_ids();
    let beta: Vec<T> = ids
        .iter()
        .map(|id| fitted.beta_of(id))
        .collect::<Option<_>>()
        .ok_or(InferenceError::TooFew {
            needed: ids.len(),
            got: fitted.m(),
        })?;
    let (bm, sm) = (mean(&beta), mean(&spec.skills));
    let max_abs_error = beta
        .iter()
        .zip(&spec.skills)
        .map(|(&b, &s)| ((b - bm) - (s - sm)).abs())
        .fold(T::zero(), T::max);
    let rank_correlation = spearman(&beta, &spec.skills)?.statistic;
    Ok(Recovery {
        max_abs_error,
        rank_correlation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt_solver::{fit_epp, Algorithm, FitConfig, Separation};
    use crate::distributions::normal_cdf;
    use crate::match_engine::{build_matches, empirical_win_rate, PairingMode, TiePolicy};
    use crate::scalar::inv_logit;

    fn m(w: &str, l: &str) -> (String, String) {
        (w.into(), l.into())
    }

    #[test]
    fn elo_equal_ratings() {
        let r = sequential_elo(&[m("A", "B")], &EloConfig::<f64>::default());
        assert_eq!(r["A"], 1016.0);
        assert_eq!(r["B"], 984.0);
    }

    #[test]
    fn elo_favourite_gains_less() {
        let start: BTreeMap<String, f64> =
            [("A".to_string(), 1200.0), ("B".to_string(), 1000.0)].into();
        let r = sequential_elo_from(start, &[m("A", "B")], &EloConfig::default());
        // E_A = 1 / (1 + 10^-0.5) = 0.7597
        let e = 1.0 / (1.0 + 10f64.powf(-0.5));
        assert!((r["A"] - (1200.0 + 32.0 * (1.0 - e))).abs() < 1e-12);
        assert!((r["A"] - 1207.69).abs() < 0.005);
        assert!((r["B"] - 992.31).abs() < 0.005);
    }

    #[test]
    fn elo_conserves_points_and_depends_on_order() {
        let cycle = vec![m("A", "B"), m("B", "C"), m("C", "A"), m("A", "B")];
        let cfg = EloConfig::<f64>::default();
        let fwd = sequential_elo(&cycle, &cfg);
        let rev: Vec<_> = cycle.iter().rev().cloned().collect();
        let bwd = sequential_elo(&rev, &cfg);
        let total: f64 = fwd.values().sum();
        assert!((total - 3000.0).abs() < 1e-9);
        assert!(fwd.iter().any(|(k, v)| (v - bwd[k]).abs() > 1e-6));
    }

    #[test]
    fn counts_ignore_match_order() {
        let cycle = vec![m("A", "B"), m("B", "C"), m("C", "A"), m("A", "B")];
        let rev: Vec<_> = cycle.iter().rev().cloned().collect();
        let a: PairwiseCounts<f64> = counts_from_matches("d", &cycle);
        assert_eq!(a, counts_from_matches("d", &rev));
        assert_eq!(a.models(), ["A", "B", "C"]);
        assert_eq!((a.w(0, 1), a.n(0, 1), a.w(2, 0)), (2.0, 2.0, 1.0));
    }

    #[test]
    fn gumbel_noise_gives_logistic_win_rate() {
        let spec = SyntheticSpec {
            skills: vec![1.0, 0.0],
            n_splits: 500,
            noise: Noise::Gumbel,
            seed: 11,
        };
        let table = simulate_scores(&spec);
        assert_eq!(table.len(), 1000);
        let c = build_matches(
            &table,
            SYNTHETIC_DATASET,
            PairingMode::Cross,
            TiePolicy::Half,
        )
        .unwrap();
        let rate = empirical_win_rate(&c, 0, 1).unwrap();
        let p = inv_logit(1.0_f64);
        // CROSS matches are correlated; the bound uses the 500 independent
        // splits per model, which is conservative
        let se = (p * (1.0 - p) / 500.0).sqrt();
        assert!((rate - p).abs() < 3.0 * se, "{rate} vs {p}");
    }

    #[test]
    fn gaussian_noise_gives_probit_win_rate() {
        let sigma = 1.5;
        let spec = SyntheticSpec {
            skills: vec![1.0, 0.0],
            n_splits: 2000,
            noise: Noise::Gaussian { sigma },
            seed: 3,
        };
        let c = build_matches(
            &simulate_scores(&spec),
            SYNTHETIC_DATASET,
            PairingMode::Paired,
            TiePolicy::Half,
        )
        .unwrap();
        let rate = empirical_win_rate(&c, 0, 1).unwrap();
        let p = normal_cdf(1.0 / (sigma * 2f64.sqrt()));
        let se = (p * (1.0 - p) / 2000.0).sqrt();
        assert!((rate - p).abs() < 3.0 * se, "{rate} vs {p}");
    }

    #[test]
    fn equal_skills_give_even_win_rates() {
        let spec = SyntheticSpec::linspace(4, 0.5_f64, 0.5, 200, Noise::Gumbel, 5);
        let c = build_matches(
            &simulate_scores(&spec),
            SYNTHETIC_DATASET,
            PairingMode::Cross,
            TiePolicy::Half,
        )
        .unwrap();
        let se = (0.25_f64 / 200.0).sqrt();
        for i in 0..4 {
            for j in i + 1..4 {
                assert!((empirical_win_rate(&c, i, j).unwrap() - 0.5).abs() < 3.0 * se);
            }
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let spec = SyntheticSpec::linspace(5, -1.0, 1.0, 30, Noise::Gaussian { sigma: 0.3 }, 42);
        let a = simulate_scores(&spec);
        let b = simulate_scores(&spec);
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        let other = simulate_scores(&SyntheticSpec {
            seed: 43,
            ..spec.clone()
        });
        assert_ne!(a.to_csv_string(), other.to_csv_string());
        assert_eq!(spec.model_ids(), ["m0", "m1", "m2", "m3", "m4"]);
        let spec = SyntheticSpec::linspace(12, -1.0, 1.0, 3, Noise::Gumbel, 1);
        assert_eq!(spec.model_ids()[3], "m03");
        assert_eq!(spec.split_ids(), ["s0", "s1", "s2"]);
    }

    fn scores_from(beta: Vec<f64>, models: Vec<String>) -> EppScores<f64> {
        let m = beta.len();
        EppScores {
            dataset_id: SYNTHETIC_DATASET.into(),
            models,
            beta,
            converged: true,
            iterations: 0,
            log_likelihood: 0.0,
            covariance: vec![vec![0.0; m]; m],
            separation: vec![Separation::None; m],
            components: vec![0; m],
            warnings: vec![],
            algorithm: Algorithm::Mm,
            ridge_lambda: 0.0,
        }
    }

    #[test]
    fn recovery_of_truth_and_reversal() {
        let spec = SyntheticSpec::linspace(5, -2.0, 2.0, 1, Noise::Gumbel, 0);
        let truth = scores_from(spec.skills.clone(), spec.model_ids());
        let r = recovery_error(&truth, &spec).unwrap();
        assert_eq!((r.max_abs_error, r.rank_correlation), (0.0, 1.0));
        let neg = scores_from(spec.skills.iter().map(|s| -s).collect(), spec.model_ids());
        assert_eq!(recovery_error(&neg, &spec).unwrap().rank_correlation, -1.0);
        let shifted = scores_from(
            spec.skills.iter().map(|s| s + 3.0).collect(),
            spec.model_ids(),
        );
        assert!(recovery_error(&shifted, &spec).unwrap().max_abs_error < 1e-15);
    }

    #[test]
    fn epp_recovers_skills_on_gumbel_data() {
        let spec = SyntheticSpec::linspace(6, -1.0, 1.0, 100, Noise::Gumbel, 9);
        let c: PairwiseCounts<f64> = build_matches(
            &simulate_scores(&spec),
            SYNTHETIC_DATASET,
            PairingMode::Cross,
            TiePolicy::Half,
        )
        .unwrap();
        let fit = fit_epp(&c, &FitConfig::default()).unwrap();
        let r = recovery_error(&fit, &spec).unwrap();
        assert!(r.rank_correlation >= 0.9, "{r:?}");
        assert!(r.max_abs_error < 0.3, "{r:?}");
    }
}
