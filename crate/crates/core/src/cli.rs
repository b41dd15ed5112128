//! Runners behind the `lftc` binary: single evaluations, repeated few-shot
//! trials, parameter sweeps and head-to-head timing comparisons.
//!
//! Everything here is plain library code so examples and tests can drive
//! the same paths as the command line.

use std::fmt;
use std::path::PathBuf;

use crate::bundle::{load_bundle, save_bundle, BundleHeader};
use crate::classifier::{evaluate, evaluate_with, thread_pool, Evaluation, PipelineConfig, Variant};
use crate::corpus::{few_shot_sample, load_csv, Corpus, CsvOptions, FewShotSpec};
use crate::error::{Error, Result};
use crate::mcc::{build_all_lists, CompressorLists};
use crate::report::{csv_summary, write_audit, CompareReport, EvalReport, SCHEMA_VERSION};
use crate::synthetic::{bundled_test, bundled_train};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Fewshot,
    Sweep,
    Compare,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Eval => "eval",
            Command::Fewshot => "fewshot",
            Command::Sweep => "sweep",
            Command::Compare => "compare",
        })
    }
}

/// Grid explored by `sweep`: every combination of the three axes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepGrid {
    pub step_sizes: Vec<usize>,
    /// Levels of the list backend.
    pub levels: Vec<i32>,
    /// `None` keeps every segment.
    pub max_compressors: Vec<Option<usize>>,
}

impl SweepGrid {
    /// Grid points in step-size-major order. Empty axes fall back to the
    /// base configuration's value, but at least one axis must be given.
    pub fn points(&self, base: &PipelineConfig) -> Result<Vec<PipelineConfig>> {
        if self.step_sizes.is_empty() && self.levels.is_empty() && self.max_compressors.is_empty() {
            return Err(Error::Validation("sweep grid is empty".into()));
        }
        let steps = axis(&self.step_sizes, base.plan.step_size);
        let levels = axis(&self.levels, base.mcc_backend.level);
        let caps = axis(&self.max_compressors, base.plan.max_compressors);
        let mut out = Vec::with_capacity(steps.len() * levels.len() * caps.len());
        for &step in &steps {
            for &level in &levels {
                for &cap in &caps {
                    let mut c = base.clone();
                    c.plan.step_size = step;
                    c.plan.max_compressors = cap;
                    c.mcc_backend.level = level;
                    out.push(c);
                }
            }
        }
        Ok(out)
    }
}

fn axis<T: Copy>(values: &[T], fallback: T) -> Vec<T> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

/// Where the train and test corpora come from.
#[derive(Debug, Clone)]
pub enum DataSource {
    /// The small synthetic corpus compiled into the crate.
    Bundled,
    Files {
        train: PathBuf,
        test: PathBuf,
        csv: CsvOptions,
    },
}

impl DataSource {
    pub fn load(&self) -> Result<(Corpus, Corpus)> {
        match self {
            DataSource::Bundled => Ok((bundled_train()?, bundled_test()?)),
            DataSource::Files { train, test, csv } => Ok((load_csv(train, csv)?, load_csv(test, csv)?)),
        }
    }
}

/// One fully specified invocation.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: Command,
    pub data: DataSource,
    pub config: PipelineConfig,
    pub seed: u64,
    /// Training samples per class for `fewshot`.
    pub shots: Option<usize>,
    pub trials: usize,
    pub grid: SweepGrid,
    /// Report destination (JSON; CSV summary for `sweep`).
    pub out: Option<PathBuf>,
    /// Per-prediction JSON lines.
    pub audit: Option<PathBuf>,
    /// Compressor-list bundle: loaded if present, written otherwise.
    pub bundle: Option<PathBuf>,
}

impl RunSpec {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            data: DataSource::Bundled,
            config: PipelineConfig::default(),
            seed: DEFAULT_SEED,
            shots: None,
            trials: DEFAULT_TRIALS,
            grid: SweepGrid::default(),
            out: None,
            audit: None,
            bundle: None,
        }
    }

    /// Checks every flag; runs before any data is read.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        match self.command {
            Command::Fewshot => {
                FewShotSpec::new(self.shots.unwrap_or(0), self.seed, self.trials)?;
            }
            Command::Sweep => {
                for c in self.grid.points(&self.config)? {
                    c.validate()?;
                }
            }
            Command::Eval | Command::Compare => {}
        }
        if self.shots.is_some() && self.command != Command::Fewshot {
            return Err(Error::Validation(format!(
                "--shots has no meaning for `{}`",
                self.command
            )));
        }
        if self.bundle.is_some() && !matches!(self.command, Command::Eval | Command::Compare) {
            return Err(Error::Validation(format!(
                "--bundle has no meaning for `{}`",
                self.command
            )));
        }
        if let DataSource::Files { train, test, .. } = &self.data {
            for p in [train, test] {
                if !p.is_file() {
                    return Err(Error::Validation(format!("{} is not a readable file", p.display())));
                }
            }
        }
        Ok(())
    }
}

/// Loads the bundle when the file exists, otherwise builds lists on the
/// configured pool and writes them there.
fn bundled_lists(path: &std::path::Path, train: &Corpus, config: &PipelineConfig) -> Result<CompressorLists> {
    let plan = config.effective_plan();
    if path.exists() {
        let (header, lists) = load_bundle(path)?;
        header.check_matches(&config.mcc_backend, &plan, train)?;
        return Ok(lists);
    }
    let lists = thread_pool(config.threads)?.install(|| build_all_lists(train, &plan, &config.mcc_backend))?;
    save_bundle(path, &BundleHeader::new(&config.mcc_backend, &plan, train), &lists)?;
    Ok(lists)
}

fn run_one(train: &Corpus, test: &Corpus, config: &PipelineConfig, bundle: Option<&PathBuf>) -> Result<Evaluation> {
    match bundle {
        Some(path) if config.variant != Variant::BaselineNcd => {
            let lists = bundled_lists(path, train, config)?;
            evaluate_with(train, test, config, Some(lists))
        }
        _ => evaluate(train, test, config),
    }
}

fn finish(report: &EvalReport, spec: &RunSpec) -> Result<()> {
    if let Some(out) = &spec.out {
        report.write_json(out)?;
    }
    Ok(())
}

/// One evaluation of `spec.config.variant`.
pub fn run_eval(spec: &RunSpec) -> Result<EvalReport> {
    spec.validate()?;
    let (train, test) = spec.data.load()?;
    let eval = run_one(&train, &test, &spec.config, spec.bundle.as_ref())?;
    if let Some(audit) = &spec.audit {
        write_audit(audit, &eval.predictions)?;
    }
    finish(&eval.report, spec)?;
    Ok(eval.report)
}

/// Classes that cannot supply `shots` training samples, with their counts.
pub fn infeasible_classes(train: &Corpus, shots: usize) -> Vec<(String, usize)> {
    train
        .class_counts()
        .into_iter()
        .filter(|&(_, n)| n < shots)
        .map(|(c, n)| (c.to_owned(), n))
        .collect()
}

/// `spec.trials` seeded few-shot draws from the training split, each
/// evaluated on the full test split, folded into one report.
pub fn run_fewshot(spec: &RunSpec) -> Result<EvalReport> {
    spec.validate()?;
    let few = FewShotSpec::new(spec.shots.unwrap_or(0), spec.seed, spec.trials)?;
    let (train, test) = spec.data.load()?;
    let short = infeasible_classes(&train, few.shots);
    if !short.is_empty() {
        let detail: Vec<String> = short.iter().map(|(c, n)| format!("`{c}` has {n}")).collect();
        return Err(Error::Validation(format!(
            "{} shots requested but {}",
            few.shots,
            detail.join(", ")
        )));
    }
    let mut reports = Vec::with_capacity(few.trials);
    let mut audit = Vec::new();
    for trial in 0..few.trials {
        let sample = few_shot_sample(&train, &few, trial)?;
        let eval = evaluate(&sample, &test, &spec.config)?;
        if spec.audit.is_some() {
            audit.extend(eval.predictions);
        }
        reports.push(eval.report);
    }
    let mut report = EvalReport::aggregate_trials(&reports)?;
    report.n_train = few.shots * train.classes().len();
    report.config.seed = Some(few.seed);
    report.config.shots = Some(few.shots);
    if let Some(path) = &spec.audit {
        write_audit(path, &audit)?;
    }
    finish(&report, spec)?;
    Ok(report)
}

/// The full pipeline and the NCD baseline on the same split with the same
/// thread count.
pub fn run_compare(spec: &RunSpec) -> Result<CompareReport> {
    spec.validate()?;
    let (train, test) = spec.data.load()?;
    let lftc_config = spec.config.clone().with_variant(Variant::Lftc);
    let base_config = spec.config.clone().with_variant(Variant::BaselineNcd);
    let lftc = run_one(&train, &test, &lftc_config, spec.bundle.as_ref())?;
    let baseline = run_one(&train, &test, &base_config, None)?;
    if lftc.report.split_checksum != baseline.report.split_checksum {
        return Err(Error::Validation("variants saw different splits".into()));
    }
    let speed_ratio = baseline.report.timings.total_seconds / lftc.report.timings.total_seconds.max(1e-3);
    if let Some(path) = &spec.audit {
        let mut all = lftc.predictions;
        all.extend(baseline.predictions);
        write_audit(path, &all)?;
    }
    let report = CompareReport {
        schema_version: SCHEMA_VERSION,
        split_checksum: lftc.report.split_checksum.clone(),
        lftc: lftc.report,
        baseline: baseline.report,
        speed_ratio,
    };
    if let Some(out) = &spec.out {
        let path = out.as_path();
        std::fs::write(path, serde_json::to_string_pretty(&report)?).map_err(|e| Error::io(path, e))?;
    }
    Ok(report)
}

/// One report per grid point; `spec.out` receives the CSV summary.
pub fn run_sweep(spec: &RunSpec) -> Result<Vec<EvalReport>> {
    spec.validate()?;
    let points = spec.grid.points(&spec.config)?;
    let (train, test) = spec.data.load()?;
    let reports = points
        .iter()
        .map(|config| evaluate(&train, &test, config).map(|e| e.report))
        .collect::<Result<Vec<_>>>()?;
    if let Some(out) = &spec.out {
        let path = out.as_path();
        std::fs::write(path, csv_summary(&reports)).map_err(|e| Error::io(path, e))?;
    }
    Ok(reports)
}
