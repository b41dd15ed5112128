//! End-to-end pipelines: the full two-stage classifier, its two ablations
//! and the single-compressor NCD baseline.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compression::CompressionBackend;
use crate::corpus::{split_checksum, Corpus};
use crate::cr::{centralized_reason_cached, knn_vote, ncd_to_references, KnnConfig, NcdNeighbor, SizeCache};
use crate::error::{Error, Result};
use crate::mcc::{build_all_lists, score_query, select_candidates_by, ClassScore, CompressorLists, SegmentPlan};
use crate::report::{EvalReport, Timings};

/// Source cap for the single whole-class dictionary of the `lftc-mcc` ablation.
pub const SINGLE_DICTIONARY_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Compressor lists, candidate pair, NCD-KNN over the pair's texts.
    Lftc,
    /// One dictionary per class instead of a list; reasoning unchanged.
    LftcMcc,
    /// Compressor lists only: the best-scoring class is the answer.
    LftcCr,
    /// NCD-KNN against every training text.
    BaselineNcd,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Lftc, Variant::LftcMcc, Variant::LftcCr, Variant::BaselineNcd];

    fn uses_lists(self) -> bool {
        !matches!(self, Variant::BaselineNcd)
    }

    fn uses_ncd(self) -> bool {
        !matches!(self, Variant::LftcCr)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Lftc => "lftc",
            Variant::LftcMcc => "lftc-mcc",
            Variant::LftcCr => "lftc-cr",
            Variant::BaselineNcd => "baseline-ncd",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| Error::Validation(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub variant: Variant,
    pub plan: SegmentPlan,
    pub knn: KnnConfig,
    pub mcc_backend: CompressionBackend,
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Lftc,
            plan: SegmentPlan::default(),
            knn: KnnConfig::default(),
            mcc_backend: CompressionBackend::zstd(),
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl PipelineConfig {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::Validation("threads must be at least 1".into()));
        }
        self.plan.validate()?;
        self.knn.validate()?;
        self.mcc_backend.validate()?;
        if self.variant.uses_lists() && !self.mcc_backend.kind.supports_dictionary() {
            return Err(Error::Validation(format!(
                "{} backend cannot build compressor lists",
                self.mcc_backend.kind
            )));
        }
        Ok(())
    }

    /// Segment plan actually used to build lists for this variant.
    pub fn effective_plan(&self) -> SegmentPlan {
        match self.variant {
            Variant::LftcMcc => SegmentPlan {
                step_size: SINGLE_DICTIONARY_LIMIT,
                max_compressors: Some(1),
                ..self.plan.clone()
            },
            _ => self.plan.clone(),
        }
    }
}

/// One classified test sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_index: usize,
    /// `None` only when the pipeline failed for this sample.
    pub predicted: Option<String>,
    pub truth: String,
    pub candidate_pair: Option<(String, String)>,
    pub elapsed_seconds: f64,
    pub mcc_seconds: f64,
    pub cr_seconds: f64,
    pub ncd_calls: usize,
    /// Reasoning found no gold data and returned the first candidate.
    pub fallback: bool,
    /// The training set has a single class.
    pub degenerate: bool,
    pub tie: bool,
    pub class_scores: Vec<ClassScore>,
    pub nearest: Vec<NcdNeighbor>,
    pub error: Option<String>,
}

impl Prediction {
    fn new(sample_index: usize, truth: &str) -> Self {
        Self {
            sample_index,
            predicted: None,
            truth: truth.to_owned(),
            candidate_pair: None,
            elapsed_seconds: 0.0,
            mcc_seconds: 0.0,
            cr_seconds: 0.0,
            ncd_calls: 0,
            fallback: false,
            degenerate: false,
            tie: false,
            class_scores: Vec::new(),
            nearest: Vec::new(),
            error: None,
        }
    }

    pub fn is_correct(&self) -> bool {
        self.predicted.as_deref() == Some(self.truth.as_str())
    }

    /// Equality on everything except wall-clock fields.
    pub fn same_outcome(&self, other: &Prediction) -> bool {
        let strip = |p: &Prediction| Prediction {
            elapsed_seconds: 0.0,
            mcc_seconds: 0.0,
            cr_seconds: 0.0,
            ..p.clone()
        };
        strip(self) == strip(other)
    }
}

/// Per-query machinery prepared once for a training corpus.
#[derive(Debug)]
pub struct Classifier<'a> {
    train: &'a Corpus,
    config: PipelineConfig,
    lists: Option<CompressorLists>,
    cache: Option<SizeCache>,
    references: Vec<(usize, &'a crate::corpus::LabeledText)>,
    list_build: Duration,
    cache_build: Duration,
}

impl<'a> Classifier<'a> {
    /// Builds compressor lists and the NCD size cache as the variant needs.
    /// Runs on the current rayon pool.
    pub fn prepare(train: &'a Corpus, config: &PipelineConfig) -> Result<Self> {
        Self::build(train, config, None)
    }

    /// Uses lists built elsewhere (for instance loaded from a bundle).
    pub fn with_lists(train: &'a Corpus, config: &PipelineConfig, lists: CompressorLists) -> Result<Self> {
        if lists.keys().ne(train.classes().iter()) {
            return Err(Error::Bundle("bundle classes differ from training classes".into()));
        }
        Self::build(train, config, Some(lists))
    }

    fn build(train: &'a Corpus, config: &PipelineConfig, lists: Option<CompressorLists>) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::InvalidInput("empty training corpus".into()));
        }
        let degenerate = train.classes().len() < 2;
        let start = Instant::now();
        let lists = match lists {
            _ if !config.variant.uses_lists() || degenerate => None,
            Some(lists) => Some(lists),
            None => Some(build_all_lists(train, &config.effective_plan(), &config.mcc_backend)?),
        };
        let list_build = start.elapsed();
        let start = Instant::now();
        let cache = if config.variant.uses_ncd() && !degenerate {
            Some(SizeCache::build(train, &config.knn.backend)?)
        } else {
            None
        };
        Ok(Self {
            train,
            config: config.clone(),
            lists,
            cache,
            references: train.samples().iter().enumerate().collect(),
            list_build,
            cache_build: start.elapsed(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn lists(&self) -> Option<&CompressorLists> {
        self.lists.as_ref()
    }

    pub fn list_build_time(&self) -> Duration {
        self.list_build
    }

    pub fn cache_build_time(&self) -> Duration {
        self.cache_build
    }

    /// Classifies one text. Failures are recorded in the prediction.
    pub fn predict(&self, sample_index: usize, text: &[u8], truth: &str) -> Prediction {
        let start = Instant::now();
        let mut p = Prediction::new(sample_index, truth);
        if let Err(e) = self.predict_into(text, &mut p) {
            p.predicted = None;
            p.error = Some(e.to_string());
        }
        p.elapsed_seconds = start.elapsed().as_secs_f64();
        p
    }

    /// Classifies one text, propagating failures.
    pub fn try_predict(&self, text: &[u8]) -> Result<Prediction> {
        let start = Instant::now();
        let mut p = Prediction::new(0, "");
        self.predict_into(text, &mut p)?;
        p.elapsed_seconds = start.elapsed().as_secs_f64();
        Ok(p)
    }

    fn predict_into(&self, text: &[u8], p: &mut Prediction) -> Result<()> {
        if text.is_empty() {
            return Err(Error::InvalidInput("empty query".into()));
        }
        if self.train.classes().len() < 2 {
            p.predicted = self.train.classes().iter().next().cloned();
            p.degenerate = true;
            return Ok(());
        }
        if self.config.variant == Variant::BaselineNcd {
            let t = Instant::now();
            let neighbors = ncd_to_references(text, &self.references, &self.config.knn, self.cache.as_ref())?;
            let vote = knn_vote(&neighbors, self.config.knn.k)?;
            p.ncd_calls = neighbors.len();
            p.tie = vote.tie;
            p.nearest = vote.nearest;
            p.predicted = Some(vote.label);
            p.cr_seconds = t.elapsed().as_secs_f64();
            return Ok(());
        }

        let lists = self.lists.as_ref().expect("list-based variant has lists");
        let t = Instant::now();
        let scores = score_query(lists, text)?;
        let pair = select_candidates_by(&scores, self.config.plan.aggregation)?;
        p.mcc_seconds = t.elapsed().as_secs_f64();
        p.candidate_pair = Some((pair.first.clone(), pair.second.clone()));
        p.class_scores = scores;

        if self.config.variant == Variant::LftcCr {
            p.predicted = Some(pair.first);
            return Ok(());
        }
        let t = Instant::now();
        let outcome = centralized_reason_cached(self.train, &pair, text, &self.config.knn, self.cache.as_ref())?;
        p.cr_seconds = t.elapsed().as_secs_f64();
        p.ncd_calls = outcome.ncd_calls;
        p.fallback = outcome.fallback;
        p.tie = outcome.tie;
        p.nearest = outcome.nearest;
        p.predicted = Some(outcome.label);
        Ok(())
    }
}

fn predict_variant(train: &Corpus, text: &[u8], config: &PipelineConfig, variant: Variant) -> Result<Prediction> {
    let config = config.clone().with_variant(variant);
    Classifier::prepare(train, &config)?.try_predict(text)
}

/// Full pipeline for a single text. Builds lists from scratch; use
/// [`Classifier`] to amortise that over many queries.
pub fn predict_lftc(train: &Corpus, text: &[u8], config: &PipelineConfig) -> Result<Prediction> {
    predict_variant(train, text, config, Variant::Lftc)
}

pub fn predict_ablation_mcc(train: &Corpus, text: &[u8], config: &PipelineConfig) -> Result<Prediction> {
    predict_variant(train, text, config, Variant::LftcMcc)
}

pub fn predict_ablation_cr(train: &Corpus, text: &[u8], config: &PipelineConfig) -> Result<Prediction> {
    predict_variant(train, text, config, Variant::LftcCr)
}

pub fn predict_baseline_ncd(train: &Corpus, text: &[u8], config: &PipelineConfig) -> Result<Prediction> {
    predict_variant(train, text, config, Variant::BaselineNcd)
}

/// Report plus every per-sample prediction, ordered by sample index.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub predictions: Vec<Prediction>,
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))
}

/// Classifies every test sample with `config.threads` workers.
pub fn evaluate(train: &Corpus, test: &Corpus, config: &PipelineConfig) -> Result<Evaluation> {
    evaluate_with(train, test, config, None)
}

/// [`evaluate`] with optionally pre-built compressor lists.
pub fn evaluate_with(
    train: &Corpus,
    test: &Corpus,
    config: &PipelineConfig,
    lists: Option<CompressorLists>,
) -> Result<Evaluation> {
    config.validate()?;
    if test.is_empty() {
        return Err(Error::InvalidInput("empty test corpus".into()));
    }
    if train.classes().is_disjoint(test.classes()) {
        return Err(Error::Validation("train and test corpora share no labels".into()));
    }
    let pool = thread_pool(config.threads)?;
    let wall = Instant::now();
    let (classifier, predictions) = pool.install(|| -> Result<_> {
        let classifier = match lists {
            Some(lists) => Classifier::with_lists(train, config, lists)?,
            None => Classifier::prepare(train, config)?,
        };
        let predictions: Vec<Prediction> = test
            .samples()
            .par_iter()
            .enumerate()
            .map(|(i, s)| classifier.predict(i, &s.text, &s.label))
            .collect();
        Ok((classifier, predictions))
    })?;
    let total = wall.elapsed();

    let timings = Timings {
        list_build_seconds: round_ms(classifier.list_build.as_secs_f64()),
        cache_build_seconds: round_ms(classifier.cache_build.as_secs_f64()),
        mcc_seconds: round_ms(predictions.iter().map(|p| p.mcc_seconds).sum()),
        cr_seconds: round_ms(predictions.iter().map(|p| p.cr_seconds).sum()),
        total_seconds: round_ms(total.as_secs_f64()),
    };
    let report = EvalReport::from_predictions(
        test.name(),
        config,
        &predictions,
        timings,
        split_checksum(train, test),
        train.len(),
    );
    Ok(Evaluation { report, predictions })
}

/// Millisecond resolution for reported timings.
pub(crate) fn round_ms(seconds: f64) -> f64 {
    (seconds * 1000.0).round() / 1000.0
}
