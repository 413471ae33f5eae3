//! Long-format performance tables: one score per (dataset, model, split).
//!
//! The CSV header is fixed to `dataset,model,algorithm,split,score`; the JSON
//! mirror is an array of objects with the same field names. Scores follow the
//! higher-is-better convention, use [`PerformanceTable::negated`] for losses.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub const SCORES_HEADER: [&str; 5] = ["dataset", "model", "algorithm", "split", "score"];
pub const HYPERPARAMS_HEADER: [&str; 3] = ["model", "parameter", "value"];

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line 1: expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("duplicate record for dataset `{dataset}`, model `{model}`, split `{split}`")]
    Duplicate {
        dataset: String,
        model: String,
        split: String,
    },
    #[error("model `{model}` is labelled with algorithm `{first}` and `{second}`")]
    AlgorithmConflict {
        model: String,
        first: String,
        second: String,
    },
    #[error("non-finite score for dataset `{dataset}`, model `{model}`, split `{split}`")]
    NonFinite {
        dataset: String,
        model: String,
        split: String,
    },
    #[error("duplicate hyperparameter `{parameter}` for model `{model}`")]
    DuplicateParameter { model: String, parameter: String },
    #[error("parameter `{parameter}` mixes numeric and categorical values")]
    MixedParameter { parameter: String },
    #[error("parameter `{parameter}` has more than two categorical levels: {levels:?}")]
    TooManyLevels {
        parameter: String,
        levels: Vec<String>,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// One observed performance value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScoreRecord<T> {
    #[serde(rename = "dataset")]
    pub dataset_id: String,
    /// Algorithm plus hyperparameter configuration, e.g. `gbm1305`.
    #[serde(rename = "model")]
    pub model_id: String,
    pub algorithm: String,
    #[serde(rename = "split")]
    pub split_id: String,
    pub score: T,
}

type SplitScores<T> = BTreeMap<String, T>;

/// Immutable, validated collection of [`ScoreRecord`]s indexed by
/// dataset → model → split.
#[derive(Clone, Debug, PartialEq)]
pub struct PerformanceTable<T> {
    records: Vec<ScoreRecord<T>>,
    index: BTreeMap<String, BTreeMap<String, SplitScores<T>>>,
    algorithms: BTreeMap<String, String>,
}

impl<T: Scalar> Default for PerformanceTable<T> {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            index: BTreeMap::new(),
            algorithms: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> PerformanceTable<T> {
    /// Builds a table, rejecting non-finite scores, duplicate keys and models
    /// labelled with two different algorithms. Records are stored in key order.
    pub fn from_records(records: Vec<ScoreRecord<T>>) -> Result<Self, TableError> {
        Self::build(records.into_iter().map(|r| (None, r)))
    }

    fn build(
        records: impl IntoIterator<Item = (Option<u64>, ScoreRecord<T>)>,
    ) -> Result<Self, TableError> {
        let mut table = Self::default();
        for (line, rec) in records {
            if !rec.score.is_finite() {
                let err = TableError::NonFinite {
                    dataset: rec.dataset_id,
                    model: rec.model_id,
                    split: rec.split_id,
                };
                return Err(match line {
                    Some(line) => TableError::Malformed {
                        line,
                        message: err.to_string(),
                    },
                    None => err,
                });
            }
            match table.algorithms.get(&rec.model_id) {
                Some(alg) if *alg != rec.algorithm => {
                    return Err(TableError::AlgorithmConflict {
                        model: rec.model_id,
                        first: alg.clone(),
                        second: rec.algorithm,
                    })
                }
                Some(_) => {}
                None => {
                    table
                        .algorithms
                        .insert(rec.model_id.clone(), rec.algorithm.clone());
                }
            }
            let splits = table
                .index
                .entry(rec.dataset_id.clone())
                .or_default()
                .entry(rec.model_id.clone())
                .or_default();
            if splits.insert(rec.split_id.clone(), rec.score).is_some() {
                return Err(TableError::Duplicate {
                    dataset: rec.dataset_id,
                    model: rec.model_id,
                    split: rec.split_id,
                });
            }
            table.records.push(rec);
        }
        table.records.sort_by(|a, b| {
            (&a.dataset_id, &a.model_id, &a.split_id).cmp(&(
                &b.dataset_id,
                &b.model_id,
                &b.split_id,
            ))
        });
        Ok(table)
    }

    pub fn records(&self) -> &[ScoreRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn datasets(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn contains_dataset(&self, dataset: &str) -> bool {
        self.index.contains_key(dataset)
    }

    /// Models scored on `dataset`, in lexicographic order.
    pub fn models(&self, dataset: &str) -> Vec<&str> {
        self.index
            .get(dataset)
            .map(|m| m.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }

    /// Split → score map for one model on one dataset.
    pub fn split_scores(&self, dataset: &str, model: &str) -> Option<&BTreeMap<String, T>> {
        self.index.get(dataset)?.get(model)
    }

    pub fn algorithm_of(&self, model: &str) -> Option<&str> {
        self.algorithms.get(model).map(String::as_str)
    }

    /// Model → algorithm labels over the whole table.
    pub fn algorithms(&self) -> &BTreeMap<String, String> {
        &self.algorithms
    }

    /// Average score across splits.
    pub fn mean_score(&self, dataset: &str, model: &str) -> Option<T> {
        let splits = self.split_scores(dataset, model)?;
        let vals: Vec<T> = splits.values().copied().collect();
        Some(crate::scalar::mean(&vals))
    }

    /// Same table with every score negated (lower-is-better measures).
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.records {
            r.score = -r.score;
        }
        for models in out.index.values_mut() {
            for splits in models.values_mut() {
                for s in splits.values_mut() {
                    *s = -*s;
                }
            }
        }
        out
    }

    /// Applies `f` to every score. `f` must return finite values.
    pub fn map_scores(&self, f: impl Fn(T) -> T) -> Result<Self, TableError> {
        Self::from_records(
            self.records
                .iter()
                .map(|r| ScoreRecord {
                    score: f(r.score),
                    ..r.clone()
                })
                .collect(),
        )
    }

    /// Restricts the table to a single dataset.
    pub fn dataset_view(&self, dataset: &str) -> Self {
        let recs = self
            .records
            .iter()
            .filter(|r| r.dataset_id == dataset)
            .cloned()
            .collect();
        Self::from_records(recs).expect("subset of a valid table is valid")
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SCORES_HEADER).expect("in-memory write");
        for r in &self.records {
            w.write_record([
                r.dataset_id.as_str(),
                r.model_id.as_str(),
                r.algorithm.as_str(),
                r.split_id.as_str(),
                &r.score.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.records).expect("records serialize")
    }
}

/// Parses the long-format scores CSV. LF and CRLF line endings are accepted;
/// fields may be quoted. Errors carry the 1-based line number.
pub fn parse_scores_csv<T: Scalar>(
    bytes: impl AsRef<[u8]>,
) -> Result<PerformanceTable<T>, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes.as_ref());
    let mut rows = reader.byte_records();
    check_header(rows.next(), &SCORES_HEADER)?;

    let mut parsed = Vec::new();
    for row in rows {
        let row = row.map_err(csv_line_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let fields = utf8_fields(&row, line)?;
        if fields.len() != SCORES_HEADER.len() {
            return Err(TableError::Malformed {
                line,
                message: format!("expected 5 columns, found {}", fields.len()),
            });
        }
        let raw = fields[4].trim();
        let score: T = raw.parse().map_err(|_| TableError::Malformed {
            line,
            message: format!("cannot parse score `{raw}`"),
        })?;
        if !score.is_finite() {
            return Err(TableError::Malformed {
                line,
                message: format!("score `{raw}` is not finite"),
            });
        }
        parsed.push((
            Some(line),
            ScoreRecord {
                dataset_id: fields[0].to_string(),
                model_id: fields[1].to_string(),
                algorithm: fields[2].to_string(),
                split_id: fields[3].to_string(),
                score,
            },
        ));
    }
    PerformanceTable::build(parsed)
}

/// Parses the JSON mirror format (array of score records).
pub fn parse_scores_json<T: Scalar>(text: &str) -> Result<PerformanceTable<T>, TableError> {
    let records: Vec<ScoreRecord<T>> = serde_json::from_str(text)?;
    PerformanceTable::from_records(records)
}

/// Header of an ordered match list.
pub const MATCHES_HEADER: [&str; 2] = ["winner", "loser"];

/// Parses `winner,loser` rows, keeping file order.
pub fn parse_matches_csv(bytes: impl AsRef<[u8]>) -> Result<Vec<(String, String)>, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes.as_ref());
    let mut rows = reader.byte_records();
    check_header(rows.next(), &MATCHES_HEADER)?;
    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(csv_line_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let fields = utf8_fields(&row, line)?;
        let malformed = |message: String| TableError::Malformed { line, message };
        if fields.len() != 2 {
            return Err(malformed(format!(
                "expected 2 columns, found {}",
                fields.len()
            )));
        }
        let (w, l) = (fields[0].trim(), fields[1].trim());
        if w.is_empty() || l.is_empty() {
            return Err(malformed("empty player name".into()));
        }
        if w == l {
            return Err(malformed(format!("`{w}` cannot play itself")));
        }
        out.push((w.to_string(), l.to_string()));
    }
    Ok(out)
}

fn check_header(
    first: Option<Result<csv::ByteRecord, csv::Error>>,
    expected: &[&str],
) -> Result<(), TableError> {
    let expected_line = expected.join(",");
    let Some(first) = first else {
        return Err(TableError::Header {
            expected: expected_line,
            found: String::new(),
        });
    };
    let first = first.map_err(csv_line_error)?;
    let found: Vec<String> = first
        .iter()
        .map(|f| {
            String::from_utf8_lossy(f)
                .trim_start_matches('\u{feff}')
                .trim()
                .to_string()
        })
        .collect();
    if found != expected {
        return Err(TableError::Header {
            expected: expected_line,
            found: found.join(","),
        });
    }
    Ok(())
}

fn utf8_fields(row: &csv::ByteRecord, line: u64) -> Result<Vec<&str>, TableError> {
    row.iter()
        .map(|f| {
            std::str::from_utf8(f).map_err(|_| TableError::Malformed {
                line,
                message: "invalid UTF-8".into(),
            })
        })
        .collect()
}

fn csv_line_error(e: csv::Error) -> TableError {
    match e.position() {
        Some(p) => TableError::Malformed {
            line: p.line(),
            message: e.to_string(),
        },
        None => TableError::Csv(e),
    }
}

/// Per-dataset summary produced by [`validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub dataset: String,
    pub model_count: usize,
    /// Distinct split ids seen for any model of the dataset.
    pub split_count: usize,
    /// Models lacking some split, with the missing split ids.
    pub missing_splits: BTreeMap<String, Vec<String>>,
    /// Models whose score is identical on every split.
    pub constant_score_models: Vec<String>,
    /// Pairs of scores from different models that compare equal exactly.
    pub tied_score_pairs: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub datasets: Vec<DatasetSummary>,
}

impl ValidationReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for d in &self.datasets {
            for (model, missing) in &d.missing_splits {
                out.push(format!(
                    "dataset `{}`: model `{}` is missing split(s) {}",
                    d.dataset,
                    model,
                    missing.join(", ")
                ));
            }
            for model in &d.constant_score_models {
                out.push(format!(
                    "dataset `{}`: model `{}` has a constant score across splits",
                    d.dataset, model
                ));
            }
            if d.tied_score_pairs > 0 {
                out.push(format!(
                    "dataset `{}`: {} cross-model score pair(s) are exactly equal",
                    d.dataset, d.tied_score_pairs
                ));
            }
        }
        out
    }

    pub fn is_clean(&self) -> bool {
        self.warnings().is_empty()
    }
}

/// Summarises each dataset: model and split counts, missing splits,
/// constant-score models and exact score ties. Never fails.
pub fn validate<T: Scalar>(table: &PerformanceTable<T>) -> ValidationReport {
    let mut datasets = Vec::new();
    for (dataset, models) in &table.index {
        let all_splits: BTreeSet<&String> = models.values().flat_map(|s| s.keys()).collect();
        let mut missing_splits = BTreeMap::new();
        let mut constant_score_models = Vec::new();
        for (model, splits) in models {
            let missing: Vec<String> = all_splits
                .iter()
                .filter(|s| !splits.contains_key(s.as_str()))
                .map(|s| s.to_string())
                .collect();
            if !missing.is_empty() {
                missing_splits.insert(model.clone(), missing);
            }
            let mut vals = splits.values();
            if let Some(first) = vals.next() {
                if splits.len() > 1 && vals.all(|v| v == first) {
                    constant_score_models.push(model.clone());
                }
            }
        }
        datasets.push(DatasetSummary {
            dataset: dataset.clone(),
            model_count: models.len(),
            split_count: all_splits.len(),
            missing_splits,
            constant_score_models,
            tied_score_pairs: count_cross_model_ties(models),
        });
    }
    ValidationReport { datasets }
}

fn count_cross_model_ties<T: Scalar>(models: &BTreeMap<String, SplitScores<T>>) -> u64 {
    let mut tagged: Vec<(T, usize)> = models
        .values()
        .enumerate()
        .flat_map(|(m, splits)| splits.values().map(move |&s| (s, m)))
        .collect();
    tagged.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let mut total = 0u64;
    let mut start = 0;
    while start < tagged.len() {
        let mut end = start;
        while end < tagged.len() && tagged[end].0 == tagged[start].0 {
            end += 1;
        }
        let run = (end - start) as u64;
        let mut pairs = run * (run - 1) / 2;
        // same-model pairs are not match ties
        let mut i = start;
        while i < end {
            let mut j = i;
            while j < end && tagged[j].1 == tagged[i].1 {
                j += 1;
            }
            let k = (j - i) as u64;
            pairs -= k * (k - 1) / 2;
            i = j;
        }
        total += pairs;
        start = end;
    }
    total
}

/// A hyperparameter value: numeric, or one level of a two-level factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound = "T: Scalar")]
pub enum HyperValue<T> {
    Numeric(T),
    Level(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    Numeric,
    /// Sorted levels; at most two.
    Binary(Vec<String>),
}

/// Hyperparameter settings per model, from a `model,parameter,value` CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HyperparamTable<T> {
    values: BTreeMap<String, BTreeMap<String, HyperValue<T>>>,
    kinds: BTreeMap<String, ParamKind>,
}

impl<T: Scalar> HyperparamTable<T> {
    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    /// Parameter names with their inferred kind.
    pub fn parameters(&self) -> &BTreeMap<String, ParamKind> {
        &self.kinds
    }

    pub fn get(&self, model: &str, parameter: &str) -> Option<&HyperValue<T>> {
        self.values.get(model)?.get(parameter)
    }

    pub fn len(&self) -> usize {
        self.values.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Models that do not occur in `table`.
    pub fn unknown_models<'a>(&'a self, table: &PerformanceTable<T>) -> Vec<&'a str> {
        self.models()
            .filter(|m| table.algorithm_of(m).is_none())
            .collect()
    }
}

/// Parses `model,parameter,value` rows. Values that parse as finite reals are
/// numeric; anything else is a categorical level. A parameter must be
/// entirely numeric or have at most two levels.
pub fn parse_hyperparams_csv<T: Scalar>(
    bytes: impl AsRef<[u8]>,
) -> Result<HyperparamTable<T>, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes.as_ref());
    let mut rows = reader.byte_records();
    check_header(rows.next(), &HYPERPARAMS_HEADER)?;

    let mut table = HyperparamTable::<T>::default();
    let mut levels: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut numeric: BTreeSet<String> = BTreeSet::new();
    for row in rows {
        let row = row.map_err(csv_line_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let fields = utf8_fields(&row, line)?;
        if fields.len() != HYPERPARAMS_HEADER.len() {
            return Err(TableError::Malformed {
                line,
                message: format!("expected 3 columns, found {}", fields.len()),
            });
        }
        let (model, parameter, raw) = (fields[0], fields[1], fields[2].trim());
        let value = match raw.parse::<T>() {
            Ok(v) if v.is_finite() => {
                numeric.insert(parameter.to_string());
                HyperValue::Numeric(v)
            }
            _ => {
                levels
                    .entry(parameter.to_string())
                    .or_default()
                    .insert(raw.to_string());
                HyperValue::Level(raw.to_string())
            }
        };
        let slot = table.values.entry(model.to_string()).or_default();
        if slot.insert(parameter.to_string(), value).is_some() {
            return Err(TableError::DuplicateParameter {
                model: model.to_string(),
                parameter: parameter.to_string(),
            });
        }
    }
    for p in &numeric {
        if levels.contains_key(p) {
            return Err(TableError::MixedParameter {
                parameter: p.clone(),
            });
        }
        table.kinds.insert(p.clone(), ParamKind::Numeric);
    }
    for (p, lv) in levels {
        if lv.len() > 2 {
            return Err(TableError::TooManyLevels {
                parameter: p,
                levels: lv.into_iter().collect(),
            });
        }
        table
            .kinds
            .insert(p, ParamKind::Binary(lv.into_iter().collect()));
    }
    Ok(table)
}
