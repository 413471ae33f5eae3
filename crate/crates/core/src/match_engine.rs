//! Turns per-split scores into aggregated pairwise match outcomes.
//!
//! A match compares two models' scores; the higher score wins. Only the
//! ordering of scores matters, so any strictly increasing transform of the
//! table produces identical counts. Counts are kept as dense `m × m`
//! matrices; individual matches are never materialised.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perf_table::PerformanceTable;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("dataset `{0}` not found")]
    UnknownDataset(String),
    #[error("dataset `{dataset}`: paired mode needs identical splits, mismatched models: {}", models.join(", "))]
    SplitMismatch {
        dataset: String,
        models: Vec<String>,
    },
    #[error("no matches recorded between `{0}` and `{1}`")]
    NoMatches(String, String),
    #[error("matrix shape does not match {0} models")]
    Shape(usize),
    #[error("invalid counts at ({i}, {j}): {reason}")]
    Invariant { i: usize, j: usize, reason: String },
}

/// Unrecognised text for one of the option enums.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown value `{0}`")]
pub struct ParseEnumError(pub String);

/// Which split pairs are compared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingMode {
    /// Every split of one model against every split of the other: `s²` matches.
    #[default]
    Cross,
    /// Only equal split ids are compared: `s` matches.
    Paired,
}

/// How exactly equal scores are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// Half a win to each side; the match still counts.
    #[default]
    Half,
    /// Tied matches are discarded.
    Drop,
}

macro_rules! lowercase_enum_text {
    ($ty:ty { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $text),+ })
            }
        }
        impl FromStr for $ty {
            type Err = $crate::match_engine::ParseEnumError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok(Self::$variant),)+
                    _ => Err($crate::match_engine::ParseEnumError(s.to_string())),
                }
            }
        }
    };
}
pub(crate) use lowercase_enum_text;

lowercase_enum_text!(PairingMode { Cross => "cross", Paired => "paired" });
lowercase_enum_text!(TiePolicy { Half => "half", Drop => "drop" });

/// Aggregated match ledger for one dataset.
///
/// `w(i, j)` is the (possibly fractional) number of wins of model `i` over
/// model `j`; `n(i, j)` the number of matches between them. The constructor
/// enforces `w(i,j) + w(j,i) = n(i,j) = n(j,i)`, `0 ≤ w ≤ n`, zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", into = "RawCounts<T>", try_from = "RawCounts<T>")]
pub struct PairwiseCounts<T> {
    dataset_id: String,
    models: Vec<String>,
    wins: Vec<T>,
    matches: Vec<T>,
}

/// JSON shape: models plus two row-major matrices.
#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawCounts<T> {
    dataset_id: String,
    models: Vec<String>,
    w: Vec<Vec<T>>,
    n: Vec<Vec<T>>,
}

impl<T: Scalar> From<PairwiseCounts<T>> for RawCounts<T> {
    fn from(c: PairwiseCounts<T>) -> Self {
        let m = c.models.len();
        let rows = |v: &[T]| (0..m).map(|i| v[i * m..(i + 1) * m].to_vec()).collect();
        RawCounts {
            w: rows(&c.wins),
            n: rows(&c.matches),
            dataset_id: c.dataset_id,
            models: c.models,
        }
    }
}

impl<T: Scalar> TryFrom<RawCounts<T>> for PairwiseCounts<T> {
    type Error = MatchError;
    fn try_from(raw: RawCounts<T>) -> Result<Self, Self::Error> {
        PairwiseCounts::from_matrices(raw.dataset_id, raw.models, raw.w, raw.n)
    }
}

impl<T: Scalar> PairwiseCounts<T> {
    /// Builds a ledger from nested row-major matrices, checking every invariant.
    pub fn from_matrices(
        dataset_id: impl Into<String>,
        models: Vec<String>,
        w: Vec<Vec<T>>,
        n: Vec<Vec<T>>,
    ) -> Result<Self, MatchError> {
        let m = models.len();
        let flat = |rows: Vec<Vec<T>>| -> Result<Vec<T>, MatchError> {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(MatchError::Shape(m));
            }
            Ok(rows.into_iter().flatten().collect())
        };
        let counts = Self {
            dataset_id: dataset_id.into(),
            models,
            wins: flat(w)?,
            matches: flat(n)?,
        };
        counts.check()?;
        Ok(counts)
    }

    /// Builds a ledger from a win matrix alone; `n = w + wᵀ`.
    pub fn from_wins(
        dataset_id: impl Into<String>,
        models: Vec<String>,
        w: Vec<Vec<T>>,
    ) -> Result<Self, MatchError> {
        let m = models.len();
        if w.len() != m || w.iter().any(|r| r.len() != m) {
            return Err(MatchError::Shape(m));
        }
        let n = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if i == j { T::zero() } else { w[i][j] + w[j][i] })
                    .collect()
            })
            .collect();
        Self::from_matrices(dataset_id, models, w, n)
    }

    fn check(&self) -> Result<(), MatchError> {
        let m = self.m();
        let bad = |i, j, reason: &str| MatchError::Invariant {
            i,
            j,
            reason: reason.to_string(),
        };
        for i in 0..m {
            if self.w(i, i) != T::zero() || self.n(i, i) != T::zero() {
                return Err(bad(i, i, "diagonal must be zero"));
            }
            for j in 0..m {
                let (w, n) = (self.w(i, j), self.n(i, j));
                if !w.is_finite() || !n.is_finite() || w < T::zero() || w > n {
                    return Err(bad(i, j, "need 0 <= w <= n"));
                }
                if n != self.n(j, i) {
                    return Err(bad(i, j, "n must be symmetric"));
                }
                let slack = T::lit(1e-9) * (T::one() + n);
                if (w + self.w(j, i) - n).abs() > slack {
                    return Err(bad(i, j, "w(i,j) + w(j,i) must equal n(i,j)"));
                }
            }
        }
        Ok(())
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    /// Number of models.
    pub fn m(&self) -> usize {
        self.models.len()
    }

    #[inline]
    pub fn w(&self, i: usize, j: usize) -> T {
        self.wins[i * self.m() + j]
    }

    #[inline]
    pub fn n(&self, i: usize, j: usize) -> T {
        self.matches[i * self.m() + j]
    }

    pub fn index_of(&self, model: &str) -> Option<usize> {
        self.models.iter().position(|m| m == model)
    }

    /// Total (fractional) wins of model `i`.
    pub fn total_wins(&self, i: usize) -> T {
        (0..self.m()).map(|j| self.w(i, j)).sum()
    }

    /// Total matches played by model `i`.
    pub fn total_matches(&self, i: usize) -> T {
        (0..self.m()).map(|j| self.n(i, j)).sum()
    }

    /// Reorders models so that new position `k` holds old model `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        self.restricted(order)
    }

    /// Ledger restricted to the given models, in the given order.
    pub fn restricted(&self, keep: &[usize]) -> Self {
        let k = keep.len();
        let mut wins = Vec::with_capacity(k * k);
        let mut matches = Vec::with_capacity(k * k);
        for &a in keep {
            for &b in keep {
                wins.push(self.w(a, b));
                matches.push(self.n(a, b));
            }
        }
        Self {
            dataset_id: self.dataset_id.clone(),
            models: keep.iter().map(|&i| self.models[i].clone()).collect(),
            wins,
            matches,
        }
    }

    /// Pools models `i` and `j` into one entry (placed at the position of
    /// `min(i, j)`); matches between the two are removed.
    pub fn merged(&self, i: usize, j: usize) -> Self {
        assert!(i != j && i < self.m() && j < self.m());
        let (keep, drop) = (i.min(j), i.max(j));
        let old: Vec<usize> = (0..self.m()).filter(|&k| k != drop).collect();
        let k = old.len();
        let pick = |a: usize| if a == keep { vec![keep, drop] } else { vec![a] };
        let mut wins = vec![T::zero(); k * k];
        let mut matches = vec![T::zero(); k * k];
        for (r, &a) in old.iter().enumerate() {
            for (c, &b) in old.iter().enumerate() {
                if r == c {
                    continue;
                }
                for &x in &pick(a) {
                    for &y in &pick(b) {
                        wins[r * k + c] += self.w(x, y);
                        matches[r * k + c] += self.n(x, y);
                    }
                }
            }
        }
        let mut models: Vec<String> = old.iter().map(|&a| self.models[a].clone()).collect();
        models[old.iter().position(|&a| a == keep).expect("kept")] =
            format!("{}+{}", self.models[keep], self.models[drop]);
        Self {
            dataset_id: self.dataset_id.clone(),
            models,
            wins,
            matches,
        }
    }

    /// Connected-component label per model in the graph with an edge wherever
    /// `n(i,j) > 0`. Labels are numbered by first appearance.
    pub fn components(&self) -> Vec<usize> {
        let m = self.m();
        let mut label = vec![usize::MAX; m];
        let mut next = 0;
        for start in 0..m {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(a) = queue.pop_front() {
                for b in 0..m {
                    if label[b] == usize::MAX && self.n(a, b) > T::zero() {
                        label[b] = next;
                        queue.push_back(b);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// Empirical probability that model `i` beats model `j`: `w(i,j) / n(i,j)`.
pub fn empirical_win_rate<T: Scalar>(
    counts: &PairwiseCounts<T>,
    i: usize,
    j: usize,
) -> Result<T, MatchError> {
    let n = counts.n(i, j);
    if n <= T::zero() {
        return Err(MatchError::NoMatches(
            counts.models[i].clone(),
            counts.models[j].clone(),
        ));
    }
    Ok(counts.w(i, j) / n)
}

/// Wins of the left side and exact ties, for one ordered pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Tally {
    wins: u64,
    ties: u64,
    total: u64,
}

/// All-pairs tally on sorted score lists, linear in their lengths.
fn cross_tally<T: Scalar>(a: &[T], b: &[T]) -> Tally {
    let (mut below, mut at_most) = (0usize, 0usize);
    let mut t = Tally {
        total: (a.len() * b.len()) as u64,
        ..Tally::default()
    };
    for &x in a {
        while below < b.len() && b[below] < x {
            below += 1;
        }
        if at_most < below {
            at_most = below;
        }
        while at_most < b.len() && b[at_most] <= x {
            at_most += 1;
        }
        t.wins += below as u64;
        t.ties += (at_most - below) as u64;
    }
    t
}

fn paired_tally<T: Scalar>(a: &[T], b: &[T]) -> Tally {
    let mut t = Tally {
        total: a.len() as u64,
        ..Tally::default()
    };
    for (&x, &y) in a.iter().zip(b) {
        if x > y {
            t.wins += 1;
        } else if x == y {
            t.ties += 1;
        }
    }
    t
}

/// Builds the match ledger for one dataset. Models appear in lexicographic
/// order of their ids.
pub fn build_matches<T: Scalar>(
    table: &PerformanceTable<T>,
    dataset: &str,
    mode: PairingMode,
    ties: TiePolicy,
) -> Result<PairwiseCounts<T>, MatchError> {
    if !table.contains_dataset(dataset) {
        return Err(MatchError::UnknownDataset(dataset.to_string()));
    }
    let models: Vec<String> = table
        .models(dataset)
        .into_iter()
        .map(String::from)
        .collect();
    let per_model: Vec<&BTreeMap<String, T>> = models
        .iter()
        .map(|m| table.split_scores(dataset, m).expect("indexed model"))
        .collect();

    // Cross: sorted scores. Paired: scores in split-id order.
    let series: Vec<Vec<T>> = match mode {
        PairingMode::Cross => per_model
            .iter()
            .map(|s| {
                let mut v: Vec<T> = s.values().copied().collect();
                v.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
                v
            })
            .collect(),
        PairingMode::Paired => {
            let all: BTreeSet<&String> = per_model.iter().flat_map(|s| s.keys()).collect();
            let offending: Vec<String> = models
                .iter()
                .zip(&per_model)
                .filter(|(_, s)| s.len() != all.len())
                .map(|(m, _)| m.clone())
                .collect();
            if !offending.is_empty() {
                return Err(MatchError::SplitMismatch {
                    dataset: dataset.to_string(),
                    models: offending,
                });
            }
            per_model
                .iter()
                .map(|s| s.values().copied().collect())
                .collect()
        }
    };

    let m = models.len();
    let mut wins = vec![T::zero(); m * m];
    let mut matches = vec![T::zero(); m * m];
    for i in 0..m {
        for j in i + 1..m {
            let t = match mode {
                PairingMode::Cross => cross_tally(&series[i], &series[j]),
                PairingMode::Paired => paired_tally(&series[i], &series[j]),
            };
            let losses = t.total - t.wins - t.ties;
            let (wi, wj, n) = match ties {
                TiePolicy::Half => {
                    let half = T::from_u64(t.ties).expect("count") * T::half();
                    (
                        T::from_u64(t.wins).expect("count") + half,
                        T::from_u64(losses).expect("count") + half,
                        T::from_u64(t.total).expect("count"),
                    )
                }
                TiePolicy::Drop => (
                    T::from_u64(t.wins).expect("count"),
                    T::from_u64(losses).expect("count"),
                    T::from_u64(t.total - t.ties).expect("count"),
                ),
            };
            wins[i * m + j] = wi;
            wins[j * m + i] = wj;
            matches[i * m + j] = n;
            matches[j * m + i] = n;
        }
    }
    Ok(PairwiseCounts {
        dataset_id: dataset.to_string(),
        models,
        wins,
        matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perf_table::ScoreRecord;
    use proptest::prelude::*;

    fn table(rows: &[(&str, usize, f64)]) -> PerformanceTable<f64> {
        PerformanceTable::from_records(
            rows.iter()
                .map(|&(m, s, v)| ScoreRecord {
                    dataset_id: "d".into(),
                    model_id: m.into(),
                    algorithm: m.into(),
                    split_id: format!("{s:02}"),
                    score: v,
                })
                .collect(),
        )
        .unwrap()
    }

    fn naive_cross(a: &[f64], b: &[f64]) -> Tally {
        let mut t = Tally::default();
        for &x in a {
            for &y in b {
                t.total += 1;
                if x > y {
                    t.wins += 1;
                } else if x == y {
                    t.ties += 1;
                }
            }
        }
        t
    }

    #[test]
    fn cross_gives_s_squared_matches() {
        let rows: Vec<_> = (0..20)
            .flat_map(|s| [("a", s, s as f64), ("b", s, s as f64 + 0.5)])
            .collect();
        let c = build_matches(&table(&rows), "d", PairingMode::Cross, TiePolicy::Half).unwrap();
        assert_eq!(c.n(0, 1), 400.0);
        assert_eq!(c.w(0, 1) + c.w(1, 0), 400.0);
        let p = build_matches(&table(&rows), "d", PairingMode::Paired, TiePolicy::Half).unwrap();
        assert_eq!(p.n(0, 1), 20.0);
        assert_eq!(p.w(1, 0), 20.0);
    }

    #[test]
    fn paired_fourteen_of_twenty() {
        let rows: Vec<_> = (0..20)
            .flat_map(|s| {
                let glm = if s < 14 { 0.9 } else { 0.7 };
                [("glmnet", s, glm), ("kknn", s, 0.8)]
            })
            .collect();
        let c = build_matches(&table(&rows), "d", PairingMode::Paired, TiePolicy::Half).unwrap();
        assert_eq!((c.w(0, 1), c.n(0, 1)), (14.0, 20.0));
    }

    #[test]
    fn total_tie_half_policy() {
        let rows: Vec<_> = (0..3)
            .flat_map(|s| [("a", s, 0.7), ("b", s, 0.7)])
            .collect();
        let c = build_matches(&table(&rows), "d", PairingMode::Paired, TiePolicy::Half).unwrap();
        assert_eq!((c.w(0, 1), c.w(1, 0), c.n(0, 1)), (1.5, 1.5, 3.0));
        let d = build_matches(&table(&rows), "d", PairingMode::Paired, TiePolicy::Drop).unwrap();
        assert_eq!((d.w(0, 1), d.n(0, 1)), (0.0, 0.0));
    }

    #[test]
    fn paired_mismatch_lists_models() {
        let rows = [
            ("a", 0, 0.1),
            ("a", 1, 0.2),
            ("b", 0, 0.3),
            ("c", 0, 0.5),
            ("c", 1, 0.1),
        ];
        let err =
            build_matches(&table(&rows), "d", PairingMode::Paired, TiePolicy::Half).unwrap_err();
        match err {
            MatchError::SplitMismatch { models, .. } => assert_eq!(models, vec!["b".to_string()]),
            e => panic!("{e}"),
        }
        // cross mode tolerates the gap
        let c = build_matches(&table(&rows), "d", PairingMode::Cross, TiePolicy::Half).unwrap();
        assert_eq!(c.n(0, 1), 2.0);
    }

    #[test]
    fn unknown_dataset() {
        let err = build_matches(
            &table(&[("a", 0, 0.1)]),
            "zzz",
            PairingMode::Cross,
            TiePolicy::Half,
        )
        .unwrap_err();
        assert!(matches!(err, MatchError::UnknownDataset(_)));
    }

    #[test]
    fn win_rates_from_reported_counts() {
        let c = PairwiseCounts::from_wins(
            "d",
            vec!["glm".into(), "kknn".into()],
            vec![vec![0.0, 264.0], vec![136.0, 0.0]],
        )
        .unwrap();
        assert_eq!(empirical_win_rate(&c, 0, 1).unwrap(), 0.66);
        let c = PairwiseCounts::from_wins(
            "d",
            vec!["gbm".into(), "ranger".into()],
            vec![vec![0.0, 199.0], vec![201.0, 0.0]],
        )
        .unwrap();
        assert_eq!(empirical_win_rate(&c, 1, 0).unwrap(), 0.5025);
        let c = PairwiseCounts::from_wins(
            "d",
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 0.0], vec![5.0, 0.0]],
        )
        .unwrap();
        assert_eq!(empirical_win_rate(&c, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn win_rate_undefined_without_matches() {
        let c = PairwiseCounts::<f64>::from_wins(
            "d",
            vec!["a".into(), "b".into()],
            vec![vec![0.0; 2]; 2],
        )
        .unwrap();
        assert!(matches!(
            empirical_win_rate(&c, 0, 1),
            Err(MatchError::NoMatches(..))
        ));
    }

    #[test]
    fn from_matrices_rejects_broken_invariants() {
        let models = vec!["a".to_string(), "b".to_string()];
        let bad = PairwiseCounts::from_matrices(
            "d",
            models.clone(),
            vec![vec![0.0, 3.0], vec![1.0, 0.0]],
            vec![vec![0.0, 5.0], vec![5.0, 0.0]],
        );
        assert!(bad.is_err());
        let bad = PairwiseCounts::from_matrices(
            "d",
            models,
            vec![vec![0.0, 6.0], vec![-1.0, 0.0]],
            vec![vec![0.0, 5.0], vec![5.0, 0.0]],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn json_round_trip_uses_nested_rows() {
        let c = PairwiseCounts::from_wins(
            "d",
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 2.5, 1.0],
                vec![0.5, 0.0, 3.0],
                vec![4.0, 0.0, 0.0],
            ],
        )
        .unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"w\":[[0.0,2.5,1.0],"), "{json}");
        let back: PairwiseCounts<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let broken = json.replace("[0.0,2.5,1.0]", "[0.0,9.5,1.0]");
        assert!(serde_json::from_str::<PairwiseCounts<f64>>(&broken).is_err());
    }

    #[test]
    fn merged_pools_opponent_records() {
        let c = PairwiseCounts::from_wins(
            "d",
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 2.0, 1.0],
                vec![3.0, 0.0, 4.0],
                vec![5.0, 6.0, 0.0],
            ],
        )
        .unwrap();
        let m = c.merged(2, 0);
        assert_eq!(m.models(), &["a+c".to_string(), "b".to_string()]);
        assert_eq!(m.w(0, 1), 2.0 + 6.0);
        assert_eq!(m.w(1, 0), 3.0 + 4.0);
    }

    #[test]
    fn components_split_disconnected_graph() {
        let c = PairwiseCounts::from_wins(
            "d",
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![
                vec![0.0, 1.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 2.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
        )
        .unwrap();
        assert_eq!(c.components(), vec![0, 0, 1, 1]);
    }

    fn score_grid() -> impl Strategy<Value = Vec<Vec<f64>>> {
        // small integer-valued scores provoke ties
        prop::collection::vec(prop::collection::vec(0i32..6, 1..7), 2..5).prop_map(|m| {
            m.into_iter()
                .map(|r| r.into_iter().map(f64::from).collect())
                .collect()
        })
    }

    fn grid_table(grid: &[Vec<f64>]) -> PerformanceTable<f64> {
        let rows: Vec<(String, usize, f64)> = grid
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(move |(s, &v)| (format!("m{i}"), s, v))
            })
            .collect();
        let rows: Vec<(&str, usize, f64)> =
            rows.iter().map(|(m, s, v)| (m.as_str(), *s, *v)).collect();
        table(&rows)
    }

    proptest! {
        #[test]
        fn cross_matches_naive_double_loop(a in prop::collection::vec(0i32..8, 0..12),
                                           b in prop::collection::vec(0i32..8, 0..12)) {
            let mut a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let mut b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let expected = naive_cross(&a, &b);
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(cross_tally(&a, &b), expected);
        }

        #[test]
        fn counts_are_antisymmetric(grid in score_grid(), drop in any::<bool>()) {
            let ties = if drop { TiePolicy::Drop } else { TiePolicy::Half };
            let c = build_matches(&grid_table(&grid), "d", PairingMode::Cross, ties).unwrap();
            for i in 0..c.m() {
                for j in 0..c.m() {
                    prop_assert_eq!(c.w(i, j) + c.w(j, i), c.n(i, j));
                    prop_assert_eq!(c.n(i, j), c.n(j, i));
                }
            }
        }

        #[test]
        fn monotone_transform_gives_identical_counts(grid in score_grid()) {
            let t = grid_table(&grid);
            let moved = t.map_scores(|x| (x * 0.37).exp() * 3.0 - 11.0).unwrap();
            for mode in [PairingMode::Cross, PairingMode::Paired] {
                let a = build_matches(&t, "d", mode, TiePolicy::Half);
                let b = build_matches(&moved, "d", mode, TiePolicy::Half);
                match (a, b) {
                    (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "transform changed paired-mode validity"),
                }
            }
        }
    }
}
