//! Machine-readable run reports (JSON documents plus CSV summary rows).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{PipelineConfig, Prediction, Variant};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Stage timings in seconds, millisecond resolution.
///
/// `mcc_seconds` and `cr_seconds` add up per-sample stage time across all
/// workers; `total_seconds` is wall-clock time for the whole evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub list_build_seconds: f64,
    pub cache_build_seconds: f64,
    pub mcc_seconds: f64,
    pub cr_seconds: f64,
    pub total_seconds: f64,
}

impl Timings {
    fn accumulate(&mut self, other: &Timings) {
        self.list_build_seconds += other.list_build_seconds;
        self.cache_build_seconds += other.cache_build_seconds;
        self.mcc_seconds += other.mcc_seconds;
        self.cr_seconds += other.cr_seconds;
        self.total_seconds += other.total_seconds;
    }
}

/// Flat echo of every knob that influenced a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub variant: Variant,
    pub step_size: usize,
    pub max_compressors: Option<usize>,
    pub dictionary_mode: String,
    pub aggregation: String,
    pub mcc_backend: String,
    pub mcc_level: i32,
    pub adaptive_level: bool,
    pub ncd_backend: String,
    pub ncd_level: i32,
    pub k: usize,
    pub threads: usize,
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub trials: Option<usize>,
}

impl ConfigEcho {
    pub fn from_config(config: &PipelineConfig) -> Self {
        Self {
            variant: config.variant,
            step_size: config.plan.step_size,
            max_compressors: config.plan.max_compressors,
            dictionary_mode: config.plan.dictionary_mode.to_string(),
            aggregation: config.plan.aggregation.to_string(),
            mcc_backend: config.mcc_backend.kind.to_string(),
            mcc_level: config.mcc_backend.level,
            adaptive_level: config.mcc_backend.adaptive_level,
            ncd_backend: config.knn.backend.kind.to_string(),
            ncd_level: config.knn.backend.level,
            k: config.knn.k,
            threads: config.threads,
            seed: None,
            shots: None,
            trials: None,
        }
    }
}

/// Normal-approximation 95% interval of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ci95 {
    pub mean: f64,
    pub half_width: f64,
}

impl Ci95 {
    /// `None` for fewer than two observations.
    pub fn from_samples(values: &[f64]) -> Option<Self> {
        if values.len() < 2 {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some(Self {
            mean,
            half_width: 1.96 * var.sqrt() / n.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub dataset: String,
    pub variant: Variant,
    pub config: ConfigEcho,
    pub n_train: usize,
    pub n_test: usize,
    pub correct: usize,
    /// Samples whose pipeline failed; they count as incorrect.
    pub errors: usize,
    pub accuracy: f64,
    pub per_class: BTreeMap<String, f64>,
    pub timings: Timings,
    pub ncd_calls: u64,
    pub split_checksum: String,
    pub trials: Option<Vec<f64>>,
    pub ci95: Option<Ci95>,
}

impl EvalReport {
    pub fn from_predictions(
        dataset: &str,
        config: &PipelineConfig,
        predictions: &[Prediction],
        timings: Timings,
        split_checksum: String,
        n_train: usize,
    ) -> Self {
        let mut per_class: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for p in predictions {
            let e = per_class.entry(p.truth.clone()).or_default();
            e.1 += 1;
            if p.is_correct() {
                e.0 += 1;
            }
        }
        let correct = predictions.iter().filter(|p| p.is_correct()).count();
        Self {
            schema_version: SCHEMA_VERSION,
            dataset: dataset.to_owned(),
            variant: config.variant,
            config: ConfigEcho::from_config(config),
            n_train,
            n_test: predictions.len(),
            correct,
            errors: predictions.iter().filter(|p| p.error.is_some()).count(),
            accuracy: if predictions.is_empty() {
                0.0
            } else {
                correct as f64 / predictions.len() as f64
            },
            per_class: per_class
                .into_iter()
                .map(|(c, (ok, n))| (c, ok as f64 / n as f64))
                .collect(),
            timings,
            ncd_calls: predictions.iter().map(|p| p.ncd_calls as u64).sum(),
            split_checksum,
            trials: None,
            ci95: None,
        }
    }

    /// Folds per-trial reports into one: mean accuracy, mean per-class
    /// accuracy, summed timings and the 95% interval over trials.
    pub fn aggregate_trials(reports: &[EvalReport]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::Validation("no trial reports".into()))?;
        let accs: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
        let n = reports.len() as f64;
        let mut per_class: BTreeMap<String, f64> = BTreeMap::new();
        let mut timings = Timings::default();
        for r in reports {
            for (c, a) in &r.per_class {
                *per_class.entry(c.clone()).or_default() += a / n;
            }
            timings.accumulate(&r.timings);
        }
        let mut out = first.clone();
        out.accuracy = accs.iter().sum::<f64>() / n;
        out.correct = reports.iter().map(|r| r.correct).sum();
        out.errors = reports.iter().map(|r| r.errors).sum();
        out.n_test = reports.iter().map(|r| r.n_test).sum();
        out.ncd_calls = reports.iter().map(|r| r.ncd_calls).sum();
        out.per_class = per_class;
        out.timings = timings;
        out.ci95 = Ci95::from_samples(&accs);
        out.trials = Some(accs);
        out.config.trials = Some(reports.len());
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub const CSV_HEADER: &'static str = "dataset,variant,step_size,max_compressors,dictionary_mode,mcc_level,k,threads,seed,shots,trials,accuracy,ci95_half_width,total_seconds";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            csv_field(&self.dataset),
            self.variant.to_string(),
            self.config.step_size.to_string(),
            opt(self.config.max_compressors.map(|v| v.to_string())),
            self.config.dictionary_mode.clone(),
            self.config.mcc_level.to_string(),
            self.config.k.to_string(),
            self.config.threads.to_string(),
            opt(self.config.seed.map(|v| v.to_string())),
            opt(self.config.shots.map(|v| v.to_string())),
            opt(self.config.trials.map(|v| v.to_string())),
            format!("{:.6}", self.accuracy),
            opt(self.ci95.map(|c| format!("{:.6}", c.half_width))),
            format!("{:.3}", self.timings.total_seconds),
        ]
        .join(",")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// CSV summary of several reports, header included.
pub fn csv_summary(reports: &[EvalReport]) -> String {
    let mut out = String::from(EvalReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Head-to-head run of the full pipeline against the NCD baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub lftc: EvalReport,
    pub baseline: EvalReport,
    /// Baseline total seconds over full-pipeline total seconds.
    pub speed_ratio: f64,
    pub split_checksum: String,
}

/// One JSON object per prediction for `--audit` output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord<'a> {
    pub sample_index: usize,
    pub truth: &'a str,
    pub predicted: Option<&'a str>,
    pub candidate_pair: Option<&'a (String, String)>,
    pub class_scores: &'a [crate::mcc::ClassScore],
    pub nearest: &'a [crate::cr::NcdNeighbor],
    pub tie: bool,
    pub fallback: bool,
    pub degenerate: bool,
    pub error: Option<&'a str>,
}

impl<'a> From<&'a Prediction> for AuditRecord<'a> {
    fn from(p: &'a Prediction) -> Self {
        Self {
            sample_index: p.sample_index,
            truth: &p.truth,
            predicted: p.predicted.as_deref(),
            candidate_pair: p.candidate_pair.as_ref(),
            class_scores: &p.class_scores,
            nearest: &p.nearest,
            tie: p.tie,
            fallback: p.fallback,
            degenerate: p.degenerate,
            error: p.error.as_deref(),
        }
    }
}

/// Writes JSON lines, one per prediction.
pub fn write_audit(path: impl AsRef<Path>, predictions: &[Prediction]) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for p in predictions {
        serde_json::to_writer(&mut out, &AuditRecord::from(p))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
