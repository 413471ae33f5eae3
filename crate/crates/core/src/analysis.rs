//! Reports built from fitted scores: leaderboards, win-probability matrices,
//! cross-dataset tables, the algorithm embedding map and tunability tests.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt_solver::EppScores;
use crate::inference::{
    mann_whitney, prob_vs_average, spearman, wald_test_difference, win_probability, TestResult,
};
use crate::match_engine::ParseEnumError;
use crate::perf_table::{HyperValue, HyperparamTable, ParamKind, PerformanceTable};
use crate::report::{csv_num, csv_string};
use crate::scalar::{mean, median, Scalar};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("model `{model}` on dataset `{dataset}` has no algorithm")]
    UnmappedModel { dataset: String, model: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LeaderboardRow<T> {
    pub rank: usize,
    pub model_id: String,
    pub beta: T,
    pub prob_vs_average: T,
    /// Mean raw score over splits; `None` if the model is not in the table.
    pub mean_score: Option<T>,
    /// Wald test against the next row; absent on the last row.
    pub significance_vs_next: Option<TestResult<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Leaderboard<T> {
    pub dataset_id: String,
    pub rows: Vec<LeaderboardRow<T>>,
    /// True when ordering by mean raw score gives a different model order.
    pub differs_from_mean_order: bool,
    pub notes: Vec<String>,
}

pub const LEADERBOARD_HEADER: [&str; 7] = [
    "rank",
    "model",
    "epp",
    "p_vs_avg",
    "mean_score",
    "p_value_vs_next",
    "stars",
];

/// Sorts models by descending beta, ties broken by model id.
fn beta_order<T: Scalar>(scores: &EppScores<T>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.m()).collect();
    order.sort_by(|&a, &b| {
        scores.beta[b]
            .partial_cmp(&scores.beta[a])
            .expect("finite beta")
            .then_with(|| scores.models[a].cmp(&scores.models[b]))
    });
    order
}

/// Ranks the fitted models of one dataset. `top_k` truncates after the
/// significance column has been computed, so the last kept row still carries
/// its test against the next model.
pub fn leaderboard<T: Scalar>(
    scores: &EppScores<T>,
    table: &PerformanceTable<T>,
    top_k: Option<usize>,
) -> Leaderboard<T> {
    let order = beta_order(scores);
    let mut notes = Vec::new();
    let mut rows: Vec<LeaderboardRow<T>> = Vec::with_capacity(order.len());
    for (pos, &i) in order.iter().enumerate() {
        let model = &scores.models[i];
        let mean_score = table.mean_score(&scores.dataset_id, model);
        if mean_score.is_none() {
            notes.push(format!(
                "no raw scores for `{model}` on `{}`",
                scores.dataset_id
            ));
        }
        let significance_vs_next = match order.get(pos + 1) {
            None => None,
            Some(&j) => match wald_test_difference(scores, i, j) {
                Ok(r) => Some(r),
                Err(e) => {
                    notes.push(format!(
                        "no test between `{model}` and `{}`: {e}",
                        scores.models[j]
                    ));
                    None
                }
            },
        };
        rows.push(LeaderboardRow {
            rank: pos + 1,
            model_id: model.clone(),
            beta: scores.beta[i],
            prob_vs_average: prob_vs_average(scores.beta[i]),
            mean_score,
            significance_vs_next,
        });
    }

    let mut by_mean: Vec<&LeaderboardRow<T>> =
        rows.iter().filter(|r| r.mean_score.is_some()).collect();
    let by_epp: Vec<&str> = by_mean.iter().map(|r| r.model_id.as_str()).collect();
    by_mean.sort_by(|a, b| {
        b.mean_score
            .partial_cmp(&a.mean_score)
            .expect("finite scores")
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
    let by_mean: Vec<&str> = by_mean.iter().map(|r| r.model_id.as_str()).collect();
    let differs_from_mean_order = by_mean != by_epp;
    if differs_from_mean_order {
        notes.push(format!(
            "EPP order differs from mean-score order ({})",
            by_mean.join(" > ")
        ));
    }

    if let Some(k) = top_k {
        rows.truncate(k);
    }
    Leaderboard {
        dataset_id: scores.dataset_id.clone(),
        rows,
        differs_from_mean_order,
        notes,
    }
}

impl<T: Scalar> Leaderboard<T> {
    pub fn to_csv_string(&self) -> String {
        csv_string(
            &LEADERBOARD_HEADER,
            self.rows.iter().map(|r| {
                let (p, stars) = match &r.significance_vs_next {
                    Some(t) => (csv_num(t.p_value), t.stars.clone()),
                    None => (String::new(), String::new()),
                };
                [
                    r.rank.to_string(),
                    r.model_id.clone(),
                    csv_num(r.beta),
                    csv_num(r.prob_vs_average),
                    r.mean_score.map(csv_num).unwrap_or_default(),
                    p,
                    stars,
                ]
            }),
        )
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("leaderboard serializes")
    }
}

/// Modelled probability that the row model beats the column model.
pub fn win_matrix<T: Scalar>(scores: &EppScores<T>) -> Vec<Vec<T>> {
    scores
        .beta
        .iter()
        .map(|&bi| {
            scores
                .beta
                .iter()
                .map(|&bj| win_probability(bi, bj))
                .collect()
        })
        .collect()
}

/// CSV with a `model` column followed by one column per opponent.
pub fn win_matrix_csv<T: Scalar>(scores: &EppScores<T>) -> String {
    let mut header = vec!["model"];
    header.extend(scores.models.iter().map(String::as_str));
    csv_string(
        &header,
        win_matrix(scores)
            .into_iter()
            .zip(&scores.models)
            .map(|(row, name)| std::iter::once(name.clone()).chain(row.into_iter().map(csv_num))),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CrossCell<T> {
    pub beta: T,
    pub prob_vs_average: T,
}

/// Models by datasets; `None` where a model was not fitted on a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CrossDatasetTable<T> {
    pub datasets: Vec<String>,
    pub models: Vec<String>,
    pub cells: Vec<Vec<Option<CrossCell<T>>>>,
}

pub fn cross_dataset_compare<T: Scalar>(
    results: &[EppScores<T>],
    model_ids: &[String],
) -> CrossDatasetTable<T> {
    let cells = model_ids
        .iter()
        .map(|model| {
            results
                .iter()
                .map(|s| {
                    s.beta_of(model).map(|beta| CrossCell {
                        beta,
                        prob_vs_average: prob_vs_average(beta),
                    })
                })
                .collect()
        })
        .collect();
    CrossDatasetTable {
        datasets: results.iter().map(|s| s.dataset_id.clone()).collect(),
        models: model_ids.to_vec(),
        cells,
    }
}

impl<T: Scalar> CrossDatasetTable<T> {
    /// Wide CSV: `model`, then `<dataset>:epp` and `<dataset>:p_vs_avg` per
    /// dataset. Absent cells are empty.
    pub fn to_csv_string(&self) -> String {
        let names: Vec<String> = self
            .datasets
            .iter()
            .flat_map(|d| [format!("{d}:epp"), format!("{d}:p_vs_avg")])
            .collect();
        let mut header = vec!["model"];
        header.extend(names.iter().map(String::as_str));
        csv_string(
            &header,
            self.models.iter().zip(&self.cells).map(|(model, row)| {
                std::iter::once(model.clone()).chain(row.iter().flat_map(|c| match c {
                    Some(c) => [csv_num(c.beta), csv_num(c.prob_vs_average)],
                    None => [String::new(), String::new()],
                }))
            }),
        )
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

/// Centre used by the absolute-deviation spread.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpreadKind {
    /// `median(|β − median(β)|)`.
    #[default]
    Median,
    /// `mean(|β − mean(β)|)`.
    Mean,
}

impl SpreadKind {
    pub fn describe(self) -> &'static str {
        match self {
            SpreadKind::Median => "median absolute deviation",
            SpreadKind::Mean => "mean absolute deviation",
        }
    }

    pub fn spread<T: Scalar>(self, xs: &[T]) -> T {
        let centre = match self {
            SpreadKind::Median => median(xs),
            SpreadKind::Mean => mean(xs),
        };
        let dev: Vec<T> = xs.iter().map(|&x| (x - centre).abs()).collect();
        match self {
            SpreadKind::Median => median(&dev),
            SpreadKind::Mean => mean(&dev),
        }
    }
}

impl fmt::Display for SpreadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpreadKind::Median => "median",
            SpreadKind::Mean => "mean",
        })
    }
}

impl FromStr for SpreadKind {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "median" => Ok(SpreadKind::Median),
            "mean" => Ok(SpreadKind::Mean),
            _ => Err(ParseEnumError(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EmbeddingPoint<T> {
    pub algorithm: String,
    pub dataset_id: String,
    pub avg_epp: T,
    pub spread: T,
    pub n_models: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Embedding<T> {
    pub spread_kind: SpreadKind,
    /// How points were formed, for the report header.
    pub aggregation: String,
    pub points: Vec<EmbeddingPoint<T>>,
    pub warnings: Vec<String>,
}

pub const EMBEDDING_HEADER: [&str; 6] = [
    "algorithm",
    "dataset",
    "avg_epp",
    "spread",
    "spread_kind",
    "n_models",
];

/// One point per (algorithm, dataset) from every fitted model of that
/// algorithm on that dataset. Points are ordered by algorithm, then dataset.
pub fn embed<T: Scalar>(
    results: &[EppScores<T>],
    algorithm_of: &BTreeMap<String, String>,
    spread_kind: SpreadKind,
) -> Result<Embedding<T>, AnalysisError> {
    let mut groups: BTreeMap<(&str, &str), Vec<T>> = BTreeMap::new();
    for s in results {
        for (model, &beta) in s.models.iter().zip(&s.beta) {
            let algorithm =
                algorithm_of
                    .get(model)
                    .ok_or_else(|| AnalysisError::UnmappedModel {
                        dataset: s.dataset_id.clone(),
                        model: model.clone(),
                    })?;
            groups
                .entry((algorithm.as_str(), s.dataset_id.as_str()))
                .or_default()
                .push(beta);
        }
    }
    let mut warnings = Vec::new();
    let points = groups
        .into_iter()
        .map(|((algorithm, dataset), betas)| {
            let spread = if betas.len() < 2 {
                warnings.push(format!(
                    "`{algorithm}` has {} model on `{dataset}`; spread set to 0",
                    betas.len()
                ));
                T::zero()
            } else {
                spread_kind.spread(&betas)
            };
            EmbeddingPoint {
                algorithm: algorithm.to_string(),
                dataset_id: dataset.to_string(),
                avg_epp: mean(&betas),
                spread,
                n_models: betas.len(),
            }
        })
        .collect();
    Ok(Embedding {
        spread_kind,
        aggregation: format!(
            "one point per algorithm and dataset over all of its fitted models; x = mean EPP, y = {}",
            spread_kind.describe()
        ),
        points,
        warnings,
    })
}

impl<T: Scalar> Embedding<T> {
    pub fn to_csv_string(&self) -> String {
        csv_string(
            &EMBEDDING_HEADER,
            self.points.iter().map(|p| {
                [
                    p.algorithm.clone(),
                    p.dataset_id.clone(),
                    csv_num(p.avg_epp),
                    csv_num(p.spread),
                    self.spread_kind.to_string(),
                    p.n_models.to_string(),
                ]
            }),
        )
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("embedding serializes")
    }

    /// Scatter plot: x = average EPP, y = spread, one colour per algorithm.
    pub fn to_svg(&self) -> String {
        scatter_svg(self)
    }
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Range padded by 5%, widened to unit length when degenerate.
fn padded_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn scatter_svg<T: Scalar>(e: &Embedding<T>) -> String {
    use std::fmt::Write;
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 150.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 60.0;
    let (x0, x1) = padded_range(e.points.iter().map(|p| p.avg_epp.to_f64_lossy()));
    let (y0, y1) = padded_range(e.points.iter().map(|p| p.spread.to_f64_lossy()));
    let (y0, y1) = (y0.min(0.0), y1);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);
    let algorithms: Vec<&str> = {
        let mut a: Vec<&str> = e.points.iter().map(|p| p.algorithm.as_str()).collect();
        a.dedup();
        a
    };
    let colour = |alg: &str| {
        let k = algorithms.iter().position(|a| *a == alg).unwrap_or(0);
        PALETTE[k % PALETTE.len()]
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (ax0, ax1, ay0, ay1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{ax0}" y="{ay0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        ax1 - ax0,
        ay1 - ay0
    );
    for k in 0..=4 {
        let t = f64::from(k) / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let (x, y) = (px(xv), py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{ay1}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            ay1 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            ay1 + 18.0,
            crate::report::format_sig(xv, 3)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{ax0}" y2="{y:.2}" stroke="black"/>"#,
            ax0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            ax0 - 8.0,
            y + 4.0,
            crate::report::format_sig(yv, 3)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">average EPP</text>"#,
        (ax0 + ax1) / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0,
        e.spread_kind.describe()
    );
    for p in &e.points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}" fill-opacity="0.8"><title>{} / {}</title></circle>"#,
            px(p.avg_epp.to_f64_lossy()),
            py(p.spread.to_f64_lossy()),
            colour(&p.algorithm),
            xml_escape(&p.algorithm),
            xml_escape(&p.dataset_id)
        );
    }
    for (k, alg) in algorithms.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{y}" r="5" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            ax1 + 20.0,
            colour(alg),
            ax1 + 30.0,
            y + 4.0,
            xml_escape(alg)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One model's scores aggregated over the datasets it was fitted on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelProfile<T> {
    pub model_id: String,
    pub algorithm: String,
    pub avg_epp: T,
    pub spread: T,
    pub n_datasets: usize,
}

/// Averages each model's beta across datasets, and measures its spread with
/// `spread_kind`. Sorted by model id.
pub fn model_profiles<T: Scalar>(
    results: &[EppScores<T>],
    algorithm_of: &BTreeMap<String, String>,
    spread_kind: SpreadKind,
) -> Result<Vec<ModelProfile<T>>, AnalysisError> {
    let mut betas: BTreeMap<&str, Vec<T>> = BTreeMap::new();
    for s in results {
        for (model, &beta) in s.models.iter().zip(&s.beta) {
            if !algorithm_of.contains_key(model) {
                return Err(AnalysisError::UnmappedModel {
                    dataset: s.dataset_id.clone(),
                    model: model.clone(),
                });
            }
            betas.entry(model).or_default().push(beta);
        }
    }
    Ok(betas
        .into_iter()
        .map(|(model, b)| ModelProfile {
            model_id: model.to_string(),
            algorithm: algorithm_of[model].clone(),
            avg_epp: mean(&b),
            spread: spread_kind.spread(&b),
            n_datasets: b.len(),
        })
        .collect())
}

pub const PROFILES_HEADER: [&str; 5] = ["model", "algorithm", "avg_epp", "spread", "n_datasets"];

pub fn profiles_csv<T: Scalar>(profiles: &[ModelProfile<T>]) -> String {
    csv_string(
        &PROFILES_HEADER,
        profiles.iter().map(|p| {
            [
                p.model_id.clone(),
                p.algorithm.clone(),
                csv_num(p.avg_epp),
                csv_num(p.spread),
                p.n_datasets.to_string(),
            ]
        }),
    )
}

/// Long-format `algorithm,dataset,model,epp` rows, sorted by algorithm,
/// dataset and model: the per-algorithm distribution of scores.
pub fn beta_distribution_csv<T: Scalar>(
    results: &[EppScores<T>],
    algorithm_of: &BTreeMap<String, String>,
) -> Result<String, AnalysisError> {
    let mut rows = Vec::new();
    for s in results {
        for (model, &beta) in s.models.iter().zip(&s.beta) {
            let algorithm =
                algorithm_of
                    .get(model)
                    .ok_or_else(|| AnalysisError::UnmappedModel {
                        dataset: s.dataset_id.clone(),
                        model: model.clone(),
                    })?;
            rows.push((algorithm.clone(), s.dataset_id.clone(), model.clone(), beta));
        }
    }
    rows.sort_by(|a, b| (&a.0, &a.1, &a.2).cmp(&(&b.0, &b.1, &b.2)));
    Ok(csv_string(
        &["algorithm", "dataset", "model", "epp"],
        rows.into_iter().map(|(a, d, m, b)| [a, d, m, csv_num(b)]),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TunabilityTarget {
    AvgEpp,
    Spread,
}

impl fmt::Display for TunabilityTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TunabilityTarget::AvgEpp => "AVG_EPP",
            TunabilityTarget::Spread => "SPREAD",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TunabilityRow<T> {
    pub algorithm: String,
    pub parameter: String,
    pub target: TunabilityTarget,
    pub result: TestResult<T>,
    /// `Corr` for numeric parameters, `W` for binary ones.
    pub estimate_label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TunabilityReport<T> {
    pub rows: Vec<TunabilityRow<T>>,
    /// Parameters that could not be tested, with the reason.
    pub skipped: Vec<String>,
}

pub const TUNABILITY_HEADER: [&str; 8] = [
    "algorithm",
    "parameter",
    "target",
    "method",
    "label",
    "estimate",
    "p_value",
    "stars",
];

/// Tests each hyperparameter of each algorithm against the models' average
/// EPP and spread: Spearman for numeric parameters, Mann–Whitney for binary
/// ones (the statistic is `U` of the first level in sorted order).
pub fn tunability_report<T: Scalar>(
    profiles: &[ModelProfile<T>],
    hyper: &HyperparamTable<T>,
) -> TunabilityReport<T> {
    let mut by_algorithm: BTreeMap<&str, Vec<&ModelProfile<T>>> = BTreeMap::new();
    for p in profiles {
        by_algorithm
            .entry(p.algorithm.as_str())
            .or_default()
            .push(p);
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (algorithm, models) in by_algorithm {
        for (parameter, kind) in hyper.parameters() {
            let observed: Vec<(&HyperValue<T>, &ModelProfile<T>)> = models
                .iter()
                .filter_map(|p| hyper.get(&p.model_id, parameter).map(|v| (v, *p)))
                .collect();
            if observed.is_empty() {
                continue;
            }
            let mut skip =
                |reason: String| skipped.push(format!("{algorithm}/{parameter}: {reason}"));
            let targets = [
                (
                    TunabilityTarget::AvgEpp,
                    observed.iter().map(|(_, p)| p.avg_epp).collect::<Vec<T>>(),
                ),
                (
                    TunabilityTarget::Spread,
                    observed.iter().map(|(_, p)| p.spread).collect::<Vec<T>>(),
                ),
            ];
            match kind {
                ParamKind::Numeric => {
                    let x: Vec<T> = observed
                        .iter()
                        .filter_map(|(v, _)| match v {
                            HyperValue::Numeric(x) => Some(*x),
                            HyperValue::Level(_) => None,
                        })
                        .collect();
                    if x.iter().all(|&v| v == x[0]) {
                        skip("one distinct value".into());
                        continue;
                    }
                    for (target, y) in targets {
                        match spearman(&x, &y) {
                            Ok(result) => rows.push(TunabilityRow {
                                algorithm: algorithm.to_string(),
                                parameter: parameter.clone(),
                                target,
                                result,
                                estimate_label: "Corr".into(),
                            }),
                            Err(e) => skip(format!("{target}: {e}")),
                        }
                    }
                }
                ParamKind::Binary(levels) => {
                    let first = &levels[0];
                    let in_first: Vec<bool> = observed
                        .iter()
                        .map(|(v, _)| matches!(v, HyperValue::Level(l) if l == first))
                        .collect();
                    if in_first.iter().all(|&b| b) || in_first.iter().all(|&b| !b) {
                        skip("one distinct value".into());
                        continue;
                    }
                    for (target, y) in targets {
                        let (a, b): (Vec<(bool, T)>, Vec<(bool, T)>) =
                            in_first.iter().copied().zip(y).partition(|(f, _)| *f);
                        let a: Vec<T> = a.into_iter().map(|(_, v)| v).collect();
                        let b: Vec<T> = b.into_iter().map(|(_, v)| v).collect();
                        let result = mann_whitney(&a, &b).expect("both groups nonempty");
                        rows.push(TunabilityRow {
                            algorithm: algorithm.to_string(),
                            parameter: parameter.clone(),
                            target,
                            result,
                            estimate_label: "W".into(),
                        });
                    }
                }
            }
        }
    }
    TunabilityReport { rows, skipped }
}

impl<T: Scalar> TunabilityReport<T> {
    pub fn to_csv_string(&self) -> String {
        csv_string(
            &TUNABILITY_HEADER,
            self.rows.iter().map(|r| {
                let method = serde_json::to_value(r.result.method)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                [
                    r.algorithm.clone(),
                    r.parameter.clone(),
                    r.target.to_string(),
                    method,
                    r.estimate_label.clone(),
                    csv_num(r.result.statistic),
                    csv_num(r.result.p_value),
                    r.result.stars.clone(),
                ]
            }),
        )
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
