//! Run configuration shared by all subcommands, loadable from a `key = value`
//! file. Command-line flags override the file, which overrides defaults.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use epp_core::{Algorithm, FitConfig64, PairingMode, SpreadKind, TiePolicy};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub pairing: PairingMode,
    pub ties: TiePolicy,
    pub fit: FitConfig64,
    pub spread: SpreadKind,
    pub format: OutputFormat,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pairing: PairingMode::default(),
            ties: TiePolicy::default(),
            fit: FitConfig64::default(),
            spread: SpreadKind::default(),
            format: OutputFormat::default(),
            out_dir: PathBuf::from("."),
            jobs: 1,
        }
    }
}

pub const KEYS: [&str; 10] = [
    "pairing",
    "ties",
    "algorithm",
    "lambda",
    "tol",
    "max_iter",
    "spread",
    "format",
    "out_dir",
    "jobs",
];

fn parse<T: FromStr>(key: &str, value: &str) -> anyhow::Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow::anyhow!("invalid value for `{key}`: {e}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        match key {
            "pairing" => self.pairing = parse(key, value)?,
            "ties" => self.ties = parse(key, value)?,
            "algorithm" => self.fit.algorithm = parse::<Algorithm>(key, value)?,
            "lambda" => self.fit.ridge_lambda = parse(key, value)?,
            "tol" => self.fit.tol = parse(key, value)?,
            "max_iter" => self.fit.max_iter = parse(key, value)?,
            "spread" => self.spread = parse(key, value)?,
            "format" => self.format = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "jobs" => self.jobs = parse(key, value)?,
            _ => bail!(
                "unknown configuration key `{key}` (known: {})",
                KEYS.join(", ")
            ),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_text(&mut self, text: &str) -> anyhow::Result<()> {
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected `key = value`", k + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("line {}", k + 1))?;
        }
        self.fit
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid fit settings: {e}"))?;
        if self.jobs == 0 {
            bail!("jobs must be at least 1");
        }
        Ok(())
    }

    /// Renders every field so that `apply_text` on a default config restores it.
    pub fn to_config_string(&self) -> String {
        format!(
            "pairing = {}\nties = {}\nalgorithm = {}\nlambda = {:e}\ntol = {:e}\nmax_iter = {}\nspread = {}\nformat = {}\nout_dir = {}\njobs = {}\n",
            self.pairing,
            self.ties,
            self.fit.algorithm,
            self.fit.ridge_lambda,
            self.fit.tol,
            self.fit.max_iter,
            self.spread,
            self.format,
            self.out_dir.display(),
            self.jobs,
        )
    }
}
