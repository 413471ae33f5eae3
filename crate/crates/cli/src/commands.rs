//! Subcommand implementations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use epp_core::analysis::{beta_distribution_csv, profiles_csv, win_matrix, win_matrix_csv};
use epp_core::report::{csv_num, csv_string};
use epp_core::{
    build_matches, counts_from_matches, cross_dataset_compare, embed as embed_points, fit_epp,
    leaderboard as rank, model_profiles, parse_hyperparams_csv, parse_matches_csv,
    parse_scores_csv, parse_scores_json, recovery_error, sequential_elo, simulate_scores,
    tunability_report, validate, EloConfig64, EppScores64, HyperparamTable64, MatchError, Noise,
    PerformanceTable64, SyntheticSpec64,
};
use rayon::prelude::*;

use crate::config::{OutputFormat, RunConfig};
use crate::output::{file_stem, Outputs};

/// Bad input data or options; exits with status 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_table(path: &Path) -> anyhow::Result<PerformanceTable64> {
    let text = read(path)?;
    let parsed = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        parse_scores_json(&text)
    } else {
        parse_scores_csv(&text)
    };
    parsed.map_err(|e| Invalid(format!("{}: {e}", path.display())).into())
}

/// Expands directories to their `epp_*.json` files and loads every score
/// file, ordered by dataset id.
fn load_scores(paths: &[PathBuf]) -> anyhow::Result<Vec<EppScores64>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("epp_") && n.ends_with(".json"))
                })
                .collect();
            found.sort();
            if found.is_empty() {
                bail!("no epp_*.json files in {}", p.display());
            }
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    let mut by_dataset: BTreeMap<String, (PathBuf, EppScores64)> = BTreeMap::new();
    for f in files {
        let s = EppScores64::from_json_str(&read(&f)?)
            .map_err(|e| Invalid(format!("{}: {e}", f.display())))?;
        if let Some((prev, _)) = by_dataset.get(&s.dataset_id) {
            return Err(Invalid(format!(
                "dataset `{}` appears in both {} and {}",
                s.dataset_id,
                prev.display(),
                f.display()
            ))
            .into());
        }
        by_dataset.insert(s.dataset_id.clone(), (f, s));
    }
    Ok(by_dataset.into_values().map(|(_, s)| s).collect())
}

pub fn show_config(cfg: &RunConfig) -> anyhow::Result<()> {
    print!("{}", cfg.to_config_string());
    Ok(())
}

fn pool(cfg: &RunConfig) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .context("starting worker threads")
}

fn report(cfg: &RunConfig, csv: String, json: String) -> (String, String) {
    match cfg.format {
        OutputFormat::Csv => (cfg.format.extension().into(), csv),
        OutputFormat::Json => (cfg.format.extension().into(), json),
    }
}

pub fn fit(
    cfg: &RunConfig,
    input: &Path,
    only: &[String],
    lower_is_better: bool,
    save_counts: bool,
) -> anyhow::Result<()> {
    let mut table = load_table(input)?;
    if lower_is_better {
        table = table.negated();
    }
    for w in validate(&table).warnings() {
        eprintln!("warning: {w}");
    }
    let datasets: Vec<String> = if only.is_empty() {
        table.datasets().map(String::from).collect()
    } else {
        for d in only {
            if !table.contains_dataset(d) {
                return Err(
                    Invalid(format!("dataset `{d}` not found in {}", input.display())).into(),
                );
            }
        }
        only.iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    if datasets.is_empty() {
        return Err(Invalid(format!("{} contains no scores", input.display())).into());
    }

    let results: Vec<anyhow::Result<_>> = pool(cfg)?.install(|| {
        datasets
            .par_iter()
            .map(|d| {
                let counts =
                    build_matches(&table, d, cfg.pairing, cfg.ties).map_err(|e| match e {
                        MatchError::SplitMismatch { .. } => {
                            anyhow::Error::new(Invalid(e.to_string()))
                        }
                        other => anyhow::Error::new(other),
                    })?;
                let scores =
                    fit_epp(&counts, &cfg.fit).with_context(|| format!("fitting `{d}`"))?;
                Ok((counts, scores))
            })
            .collect()
    });

    let mut out = Outputs::new(cfg.out_dir.clone());
    for r in results {
        let (counts, scores) = r?;
        let stem = file_stem(&scores.dataset_id);
        for w in &scores.warnings {
            eprintln!("warning: dataset `{}`: {w}", scores.dataset_id);
        }
        out.write(&format!("epp_{stem}.csv"), &scores.to_csv_string())?;
        out.write(&format!("epp_{stem}.json"), &scores.to_json_string())?;
        if save_counts {
            out.write(
                &format!("counts_{stem}.json"),
                &serde_json::to_string_pretty(&counts).context("serialising counts")?,
            )?;
        }
    }
    out.report();
    Ok(())
}

pub fn leaderboard(
    cfg: &RunConfig,
    scores: &[PathBuf],
    input: Option<&Path>,
    top_k: Option<usize>,
    with_matrix: bool,
) -> anyhow::Result<()> {
    let results = load_scores(scores)?;
    let table = match input {
        Some(p) => load_table(p)?,
        None => PerformanceTable64::default(),
    };
    let mut out = Outputs::new(cfg.out_dir.clone());
    for s in &results {
        let lb = rank(s, &table, top_k);
        if input.is_some() {
            for n in &lb.notes {
                eprintln!("note: dataset `{}`: {n}", s.dataset_id);
            }
        }
        let stem = file_stem(&s.dataset_id);
        let (ext, body) = report(cfg, lb.to_csv_string(), lb.to_json_string());
        out.write(&format!("leaderboard_{stem}.{ext}"), &body)?;
        if with_matrix {
            let json = serde_json::to_string_pretty(&serde_json::json!({
                "dataset_id": s.dataset_id,
                "models": s.models,
                "win_probability": win_matrix(s),
            }))?;
            let (ext, body) = report(cfg, win_matrix_csv(s), json);
            out.write(&format!("winmatrix_{stem}.{ext}"), &body)?;
        }
    }
    out.report();
    Ok(())
}

pub fn compare(cfg: &RunConfig, scores: &[PathBuf], models: &[String]) -> anyhow::Result<()> {
    let results = load_scores(scores)?;
    let models: Vec<String> = if models.is_empty() {
        results
            .iter()
            .flat_map(|s| s.models.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        models.to_vec()
    };
    let table = cross_dataset_compare(&results, &models);
    let (ext, body) = report(cfg, table.to_csv_string(), table.to_json_string());
    let mut out = Outputs::new(cfg.out_dir.clone());
    out.write(&format!("compare.{ext}"), &body)?;
    out.report();
    Ok(())
}

fn algorithm_map(table: &PerformanceTable64) -> BTreeMap<String, String> {
    table.algorithms().clone()
}

pub fn embed(cfg: &RunConfig, scores: &[PathBuf], input: &Path) -> anyhow::Result<()> {
    let results = load_scores(scores)?;
    let algorithms = algorithm_map(&load_table(input)?);
    let e = embed_points(&results, &algorithms, cfg.spread).map_err(|e| Invalid(e.to_string()))?;
    for w in &e.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = Outputs::new(cfg.out_dir.clone());
    let (ext, body) = report(cfg, e.to_csv_string(), e.to_json_string());
    out.write(&format!("embedding.{ext}"), &body)?;
    out.write("embedding.svg", &e.to_svg())?;
    out.write(
        "epp_by_algorithm.csv",
        &beta_distribution_csv(&results, &algorithms).map_err(|e| Invalid(e.to_string()))?,
    )?;
    out.report();
    Ok(())
}

pub fn tunability(
    cfg: &RunConfig,
    scores: &[PathBuf],
    input: &Path,
    hyperparams: &Path,
) -> anyhow::Result<()> {
    let results = load_scores(scores)?;
    let algorithms = algorithm_map(&load_table(input)?);
    let hyper: HyperparamTable64 = parse_hyperparams_csv(read(hyperparams)?)
        .map_err(|e| Invalid(format!("{}: {e}", hyperparams.display())))?;
    let profiles =
        model_profiles(&results, &algorithms, cfg.spread).map_err(|e| Invalid(e.to_string()))?;
    let r = tunability_report(&profiles, &hyper);
    for s in &r.skipped {
        eprintln!("note: skipped {s}");
    }
    let mut out = Outputs::new(cfg.out_dir.clone());
    let (ext, body) = report(cfg, r.to_csv_string(), r.to_json_string());
    out.write(&format!("tunability.{ext}"), &body)?;
    let (ext, body) = report(
        cfg,
        profiles_csv(&profiles),
        serde_json::to_string_pretty(&serde_json::json!({
            "spread_kind": cfg.spread,
            "profiles": profiles,
        }))?,
    );
    out.write(&format!("profiles.{ext}"), &body)?;
    out.report();
    Ok(())
}

pub fn simulate(
    cfg: &RunConfig,
    models: usize,
    splits: usize,
    seed: u64,
    noise: Noise<f64>,
    skill_min: f64,
    skill_max: f64,
) -> anyhow::Result<()> {
    if models == 0 || splits == 0 {
        return Err(Invalid("--models and --splits must be positive".into()).into());
    }
    if let Noise::Gaussian { sigma } = noise {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Invalid("--sigma must be positive".into()).into());
        }
    }
    let spec = SyntheticSpec64::linspace(models, skill_min, skill_max, splits, noise, seed);
    let table = simulate_scores(&spec);
    let mut out = Outputs::new(cfg.out_dir.clone());
    let (ext, body) = report(cfg, table.to_csv_string(), table.to_json_string());
    out.write(&format!("scores.{ext}"), &body)?;
    let truth = serde_json::json!({
        "dataset_id": epp_core::baselines::SYNTHETIC_DATASET,
        "model_ids": spec.model_ids(),
        "generator": "ChaCha8 (rand_chacha), seed_from_u64",
        "spec": spec,
    });
    out.write("truth.json", &serde_json::to_string_pretty(&truth)?)?;
    out.report();
    Ok(())
}

pub fn elo(
    cfg: &RunConfig,
    input: &Path,
    reversed: bool,
    elo_cfg: &EloConfig64,
) -> anyhow::Result<()> {
    if !(elo_cfg.k_factor > 0.0 && elo_cfg.scale > 0.0) {
        return Err(Invalid("--k-factor and --scale must be positive".into()).into());
    }
    let mut matches = parse_matches_csv(read(input)?)
        .map_err(|e| Invalid(format!("{}: {e}", input.display())))?;
    if reversed {
        matches.reverse();
    }
    let ratings = sequential_elo(&matches, elo_cfg);
    let epp = fit_epp(&counts_from_matches("matches", &matches), &cfg.fit)?;
    let order = if reversed { "reversed" } else { "file" };
    let csv = csv_string(
        &["model", "rating", "epp"],
        ratings.iter().map(|(m, r)| {
            [
                m.clone(),
                csv_num(*r),
                epp.beta_of(m).map(csv_num).unwrap_or_default(),
            ]
        }),
    );
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "order": order,
        "config": elo_cfg,
        "ratings": ratings,
        "epp": epp.models.iter().cloned().zip(epp.beta.iter().copied()).collect::<BTreeMap<_, _>>(),
    }))?;
    let (ext, body) = report(cfg, csv, json);
    let mut out = Outputs::new(cfg.out_dir.clone());
    out.write(&format!("elo_{order}.{ext}"), &body)?;
    out.report();
    Ok(())
}

pub fn recovery(cfg: &RunConfig, scores: &Path, truth: &Path) -> anyhow::Result<()> {
    let fitted = EppScores64::from_json_str(&read(scores)?)
        .map_err(|e| Invalid(format!("{}: {e}", scores.display())))?;
    let truth_json: serde_json::Value = serde_json::from_str(&read(truth)?)
        .map_err(|e| Invalid(format!("{}: {e}", truth.display())))?;
    let spec: SyntheticSpec64 = serde_json::from_value(truth_json["spec"].clone())
        .map_err(|e| Invalid(format!("{}: no usable `spec`: {e}", truth.display())))?;
    let r = recovery_error(&fitted, &spec).map_err(|e| Invalid(e.to_string()))?;
    let csv = csv_string(
        &["max_abs_error", "rank_correlation"],
        [[csv_num(r.max_abs_error), csv_num(r.rank_correlation)]],
    );
    let (ext, body) = report(cfg, csv, serde_json::to_string_pretty(&r)?);
    let mut out = Outputs::new(cfg.out_dir.clone());
    out.write(&format!("recovery.{ext}"), &body)?;
    out.report();
    Ok(())
}
