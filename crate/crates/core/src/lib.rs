//! Elo-based Predictive Power (EPP) for comparing machine-learning models.
//!
//! Raw per-split performance scores are turned into pairwise match outcomes,
//! and a zero-intercept logistic (Bradley–Terry) model is fitted to them. The
//! difference of two EPP scores is the log-odds that one model outperforms the
//! other on a random train/test split, and `inv_logit(β)` is the probability
//! of beating an average model, which makes scores comparable across datasets.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below cover the common case.

pub mod analysis;
pub mod baselines;
pub mod bt_solver;
pub mod distributions;
pub mod inference;
mod linalg;
pub mod match_engine;
pub mod perf_table;
pub mod report;
pub mod scalar;

pub use analysis::{
    cross_dataset_compare, embed, leaderboard, model_profiles, tunability_report, win_matrix,
    AnalysisError, CrossDatasetTable, Embedding, EmbeddingPoint, Leaderboard, LeaderboardRow,
    ModelProfile, SpreadKind, TunabilityReport, TunabilityRow, TunabilityTarget,
};
pub use baselines::{
    counts_from_matches, recovery_error, sequential_elo, sequential_elo_from, simulate_scores,
    EloConfig, Noise, Recovery, SyntheticSpec,
};
pub use bt_solver::{
    detect_separation, fit_epp, gradient, log_likelihood, mm_step, two_model_closed_form,
    Algorithm, EppScores, FitConfig, FitError, Separation,
};
pub use inference::{
    lr_test_difference, mann_whitney, prob_vs_average, spearman, stars, wald_test_difference,
    wald_test_vs_average, win_probability, InferenceError, TestMethod, TestResult,
};
pub use match_engine::{
    build_matches, empirical_win_rate, MatchError, PairingMode, PairwiseCounts, ParseEnumError,
    TiePolicy,
};
pub use perf_table::{
    parse_hyperparams_csv, parse_matches_csv, parse_scores_csv, parse_scores_json, validate,
    HyperValue, HyperparamTable, ParamKind, PerformanceTable, ScoreRecord, TableError,
    ValidationReport,
};
pub use scalar::{inv_logit, ln_inv_logit, logit, Scalar};

pub type PerformanceTable64 = PerformanceTable<f64>;
pub type HyperparamTable64 = HyperparamTable<f64>;
pub type PairwiseCounts64 = PairwiseCounts<f64>;
pub type FitConfig64 = FitConfig<f64>;
pub type EppScores64 = EppScores<f64>;
pub type PerformanceTable32 = PerformanceTable<f32>;
pub type PairwiseCounts32 = PairwiseCounts<f32>;
pub type EppScores32 = EppScores<f32>;
pub type SyntheticSpec64 = SyntheticSpec<f64>;
pub type EloConfig64 = EloConfig<f64>;
