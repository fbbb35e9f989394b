//! Seeded experiment driver: single trials, sweeps over sample sizes,
//! aggregation, model fits and CSV / JSON persistence.

mod fit;
mod trial;

pub use fit::{fit_model, fit_report, model_shape, FitPoint, FitReport, Model, ModelFit};
pub use trial::{
    first_unsampled, run_trial, run_trial_with, trial_seed, Adversary, Algorithm, Diagnostics, TrialConfig, TrialResult,
    TrialRow, CSV_COLUMNS,
};

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AdversaryError, CalibrationConstants, DEFAULT_ALPHA, DEFAULT_BLOCK_BUDGET};
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Problems with the requested configuration, as opposed to I/O.
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_) | HarnessError::Adversary(_) | HarnessError::Json(_))
    }
}

fn default_adversary() -> Vec<Adversary> {
    vec![Adversary::On]
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_budget() -> usize {
    DEFAULT_BLOCK_BUDGET
}
fn default_max_fail_rate() -> f64 {
    0.05
}

/// A sweep: every algorithm under every adversary setting at every `m`,
/// `trials` seeded trials each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub gamma: f64,
    pub d: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Strictly ascending.
    pub m_grid: Vec<usize>,
    pub trials: u64,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    #[serde(default = "default_adversary")]
    pub adversary: Vec<Adversary>,
    #[serde(default = "default_budget")]
    pub per_block_budget: usize,
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub bags: Option<usize>,
    #[serde(default)]
    pub constants: CalibrationConstants,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default = "default_max_fail_rate")]
    pub max_fail_rate: f64,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let spec: SweepSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn trial_config(&self, m: usize) -> TrialConfig {
        TrialConfig {
            gamma: self.gamma,
            d: self.d,
            m,
            alpha: self.alpha,
            per_block_budget: self.per_block_budget,
            rounds: self.rounds,
            nu: self.nu,
            bags: self.bags,
            constants: self.constants,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.m_grid.is_empty() {
            return bad("m_grid must not be empty".into());
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("m_grid must be strictly ascending, got {:?}", self.m_grid));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.algorithms.is_empty() || self.adversary.is_empty() {
            return bad("algorithms and adversary must not be empty".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.max_fail_rate) {
            return bad(format!("max_fail_rate must lie in [0, 1], got {}", self.max_fail_rate));
        }
        for &m in &self.m_grid {
            self.trial_config(m).params()?;
        }
        Ok(())
    }
}

/// Summary of the trials of one `(m, algorithm, adversary)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub m: usize,
    pub algo: Algorithm,
    pub adversary: Adversary,
    pub trials: usize,
    pub failures: usize,
    /// Over trials without a failure.
    pub mean_error: Option<f64>,
    pub median_error: Option<f64>,
    pub mean_h0_weight: Option<f64>,
    pub mean_frs_minus_fraction: Option<f64>,
    /// Over all trials.
    pub in_spart1_fraction: f64,
}

const AGGREGATE_TAG: &str = "aggregate";

impl Aggregate {
    /// Aggregates trial rows that all belong to the same cell.
    pub fn from_rows(rows: &[&TrialRow]) -> Option<Self> {
        let first = rows.first()?;
        let ok: Vec<&&TrialRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
        let mean = |f: &dyn Fn(&TrialRow) -> Option<f64>| -> Option<f64> {
            let xs: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        };
        let mut errors: Vec<f64> = ok.iter().filter_map(|r| r.exact_error).collect();
        errors.sort_by(f64::total_cmp);
        let median_error = match errors.len() {
            0 => None,
            n if n % 2 == 1 => Some(errors[n / 2]),
            n => Some((errors[n / 2 - 1] + errors[n / 2]) / 2.0),
        };
        let in_spart1 = rows.iter().filter(|r| r.in_spart1 == Some(true)).count();
        Some(Self {
            m: first.m,
            algo: first.algo,
            adversary: first.adversary,
            trials: rows.len(),
            failures: rows.len() - ok.len(),
            mean_error: mean(&|r| r.exact_error),
            median_error,
            mean_h0_weight: mean(&|r| r.h0_weight),
            mean_frs_minus_fraction: mean(&|r| r.frs_minus_fraction),
            in_spart1_fraction: in_spart1 as f64 / rows.len() as f64,
        })
    }

    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }

    /// The aggregate as a CSV row: means in the value columns, the number of
    /// successful trials in `rounds_used`, and the remaining statistics as
    /// `key=value` pairs after the `aggregate` tag in `failure`.
    pub fn to_row(&self, template: &TrialRow) -> TrialRow {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        TrialRow {
            seed: None,
            m: self.m,
            u: template.u,
            r: template.r,
            r1: template.r1,
            gamma: template.gamma,
            d: template.d,
            alpha: template.alpha,
            algo: self.algo,
            adversary: self.adversary,
            exact_error: self.mean_error,
            h0_weight: self.mean_h0_weight,
            in_spart1: None,
            frs_minus_fraction: self.mean_frs_minus_fraction,
            rounds_used: self.trials - self.failures,
            failure: Some(format!(
                "{AGGREGATE_TAG};trials={};failures={};median_error={};in_spart1_fraction={}",
                self.trials,
                self.failures,
                opt(self.median_error),
                self.in_spart1_fraction
            )),
        }
    }

    /// Inverse of [`to_row`](Self::to_row); `None` for trial rows.
    pub fn from_row(row: &TrialRow) -> Option<Self> {
        let tag = row.failure.as_deref()?;
        let mut parts = tag.split(';');
        if parts.next()? != AGGREGATE_TAG || row.seed.is_some() {
            return None;
        }
        let fields: BTreeMap<&str, &str> = parts.filter_map(|kv| kv.split_once('=')).collect();
        let num = |k: &str| fields.get(k).and_then(|v| v.parse::<f64>().ok());
        Some(Self {
            m: row.m,
            algo: row.algo,
            adversary: row.adversary,
            trials: fields.get("trials")?.parse().ok()?,
            failures: fields.get("failures")?.parse().ok()?,
            mean_error: row.exact_error,
            median_error: num("median_error"),
            mean_h0_weight: row.h0_weight,
            mean_frs_minus_fraction: row.frs_minus_fraction,
            in_spart1_fraction: num("in_spart1_fraction")?,
        })
    }
}

pub fn is_aggregate_row(row: &TrialRow) -> bool {
    row.seed.is_none() && row.failure.as_deref().is_some_and(|f| f.starts_with(AGGREGATE_TAG))
}

/// Mean error ratio of one algorithm over another at the same `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRatio {
    pub m: usize,
    pub numerator: (Algorithm, Adversary),
    pub denominator: (Algorithm, Adversary),
    pub ratio: Option<f64>,
}

/// Everything a sweep produced besides the trial rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub spec: SweepSpec,
    pub aggregates: Vec<Aggregate>,
    pub fits: Vec<FitReport>,
    /// AdaBoost over bagged, both adversarial, at the largest `m`.
    pub adaboost_over_bagged: Option<ErrorRatio>,
    pub failure_rate: f64,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    /// Sorted by `(m, algorithm, adversary, seed)`.
    pub results: Vec<TrialResult>,
    pub summary: SweepSummary,
}

impl SweepOutcome {
    /// Trial rows followed by one aggregate row per cell.
    pub fn csv_rows(&self) -> Vec<TrialRow> {
        let mut rows: Vec<TrialRow> = self.results.iter().map(|r| r.row.clone()).collect();
        for a in &self.summary.aggregates {
            let template = self
                .results
                .iter()
                .find(|r| r.row.m == a.m)
                .map(|r| &r.row)
                .expect("every aggregate has trials");
            rows.push(a.to_row(template));
        }
        rows
    }
}

/// Serialized appender for rows finished out of order.
struct Appender {
    writer: Mutex<csv::Writer<File>>,
}

impl Appender {
    fn create(path: &Path) -> Result<Self, HarnessError> {
        let file = OpenOptions::new().create(true).truncate(true).write(true).open(path)?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        writer.write_record(CSV_COLUMNS)?;
        writer.flush()?;
        Ok(Self { writer: Mutex::new(writer) })
    }

    fn push(&self, row: &TrialRow) -> Result<(), HarnessError> {
        let mut w = self.writer.lock().expect("appender lock");
        w.serialize(row)?;
        w.flush()?;
        Ok(())
    }
}

/// Partial-results path next to `out`.
pub fn partial_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Runs every trial of the sweep. With `partial`, each finished row is
/// appended and flushed to that file as it completes, so an interrupted
/// sweep leaves its results behind.
pub fn run_sweep(spec: &SweepSpec, partial: Option<&Path>) -> Result<SweepOutcome, HarnessError> {
    spec.validate()?;
    let appender = partial.map(Appender::create).transpose()?;
    let mut tasks = Vec::new();
    for &m in &spec.m_grid {
        for &algo in &spec.algorithms {
            for &adversary in &spec.adversary {
                for i in 0..spec.trials {
                    tasks.push((m, algo, adversary, trial_seed(spec.seed, m, i)));
                }
            }
        }
    }
    let run = || -> Result<Vec<TrialResult>, HarnessError> {
        tasks
            .par_iter()
            .map(|&(m, algo, adversary, seed)| {
                let result = run_trial(&spec.trial_config(m), algo, adversary, seed)?;
                if let Some(a) = &appender {
                    a.push(&result.row)?;
                }
                Ok(result)
            })
            .collect()
    };
    let mut results = match spec.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    results.sort_by_key(|r| (r.row.m, r.row.algo, r.row.adversary, r.row.seed));
    let summary = summarize(spec, &results);
    Ok(SweepOutcome { results, summary })
}

/// Aggregates, fits and ratios of finished trials.
pub fn summarize(spec: &SweepSpec, results: &[TrialResult]) -> SweepSummary {
    let mut cells: BTreeMap<(usize, Algorithm, Adversary), Vec<&TrialRow>> = BTreeMap::new();
    for r in results {
        cells.entry((r.row.m, r.row.algo, r.row.adversary)).or_default().push(&r.row);
    }
    let aggregates: Vec<Aggregate> = cells.values().filter_map(|rows| Aggregate::from_rows(rows)).collect();
    let mut fits = Vec::new();
    for &algo in &spec.algorithms {
        for &adversary in &spec.adversary {
            let means: Vec<FitPoint> = aggregates
                .iter()
                .filter(|a| a.algo == algo && a.adversary == adversary)
                .map(|a| FitPoint { m: a.m, mean_error: a.mean_error.unwrap_or(f64::NAN) })
                .collect();
            fits.push(fit_report(algo, adversary, &means, spec.gamma, spec.d));
        }
    }
    let largest = spec.m_grid.last().copied();
    let mean_at = |algo, adversary| {
        aggregates.iter().find(|a| Some(a.m) == largest && a.algo == algo && a.adversary == adversary).and_then(|a| a.mean_error)
    };
    let adaboost_over_bagged = match (largest, mean_at(Algorithm::AdaBoost, Adversary::On), mean_at(Algorithm::Bagged, Adversary::On)) {
        (Some(m), Some(num), Some(den)) => Some(ErrorRatio {
            m,
            numerator: (Algorithm::AdaBoost, Adversary::On),
            denominator: (Algorithm::Bagged, Adversary::On),
            ratio: (den > 0.0).then(|| num / den),
        }),
        _ => None,
    };
    let failures = results.iter().filter(|r| r.failed()).count();
    let failure_rate = if results.is_empty() { 0.0 } else { failures as f64 / results.len() as f64 };
    SweepSummary { spec: spec.clone(), aggregates, fits, adaboost_over_bagged, failure_rate }
}

pub fn write_csv(path: &Path, rows: &[TrialRow]) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(HarnessError::Config(format!("unexpected CSV header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_summary(path: &Path, summary: &SweepSummary) -> Result<(), HarnessError> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, summary)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Writes `<out>` (CSV) and `<out>.summary.json`, and drops the partial file.
pub fn persist(out: &Path, outcome: &SweepOutcome) -> Result<PathBuf, HarnessError> {
    write_csv(out, &outcome.csv_rows())?;
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    let summary = PathBuf::from(s);
    write_summary(&summary, &outcome.summary)?;
    let partial = partial_path(out);
    if partial.exists() {
        fs::remove_file(partial)?;
    }
    Ok(summary)
}
