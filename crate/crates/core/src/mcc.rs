//! Multi-compressor classification: per-class compressor lists built from
//! fixed-size segments of each class's concatenated training text, and the
//! scoring pass that shortlists the two classes a query compresses best under.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compression::{
    dict_compressed_size, train_dictionary_with, CompressionBackend, DictCompressor, DictionaryMode, SourceSpan,
};
use crate::corpus::{concat_class_text, Corpus, DEFAULT_SEPARATOR};
use crate::error::{Error, Result};

pub const DEFAULT_STEP_SIZE: usize = 64 * 1024;
pub const DEFAULT_MAX_COMPRESSORS: usize = 16;

/// How per-compressor sizes are combined into one class ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Rank by the plain total over the class's list.
    Sum,
    /// Rank by total divided by list length, so classes with more training
    /// text (and therefore longer lists) are not penalised for it.
    #[default]
    Mean,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Sum => "sum",
            Aggregation::Mean => "mean",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Aggregation::Sum),
            "mean" => Ok(Aggregation::Mean),
            _ => Err(Error::Validation(format!("unknown aggregation `{s}`"))),
        }
    }
}

/// How class texts are cut into dictionary segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPlan {
    /// Bytes per segment.
    pub step_size: usize,
    /// Upper bound on compressors per class; `None` keeps every segment.
    pub max_compressors: Option<usize>,
    /// Placed between documents when a class is concatenated.
    pub separator: Vec<u8>,
    pub dictionary_mode: DictionaryMode,
    pub aggregation: Aggregation,
}

impl Default for SegmentPlan {
    fn default() -> Self {
        Self {
            step_size: DEFAULT_STEP_SIZE,
            max_compressors: Some(DEFAULT_MAX_COMPRESSORS),
            separator: DEFAULT_SEPARATOR.to_vec(),
            dictionary_mode: DictionaryMode::Trained,
            aggregation: Aggregation::Mean,
        }
    }
}

impl SegmentPlan {
    pub fn new(step_size: usize, max_compressors: Option<usize>) -> Self {
        Self {
            step_size,
            max_compressors,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_size == 0 {
            return Err(Error::Validation("step size must be at least 1".into()));
        }
        if self.max_compressors == Some(0) {
            return Err(Error::Validation("compressor cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// `ceil(total_len / step_size)`.
pub fn segment_count(total_len: usize, step_size: usize) -> Result<usize> {
    if total_len == 0 || step_size == 0 {
        return Err(Error::InvalidInput(format!(
            "segment_count({total_len}, {step_size}) needs positive arguments"
        )));
    }
    Ok(total_len.div_ceil(step_size))
}

/// Picks `cap` of `n` segment indices spread evenly from the first segment on.
pub fn spread_indices(n: usize, cap: Option<usize>) -> Vec<usize> {
    match cap {
        Some(cap) if cap < n => (0..cap).map(|i| i * n / cap).collect(),
        _ => (0..n).collect(),
    }
}

/// The compressors built for one class.
#[derive(Debug)]
pub struct ClassCompressorList {
    pub class: String,
    pub compressors: Vec<DictCompressor>,
    /// Number of compressors kept after capping.
    pub segment_count: usize,
    /// Segments before capping.
    pub total_segments: usize,
    /// Length of the concatenated class text.
    pub text_len: usize,
}

impl ClassCompressorList {
    pub fn spans(&self) -> impl Iterator<Item = &SourceSpan> {
        self.compressors.iter().map(|c| &c.dictionary().span)
    }
}

pub type CompressorLists = BTreeMap<String, ClassCompressorList>;

/// Builds the compressor list of one class.
pub fn build_class_list(
    corpus: &Corpus,
    class: &str,
    plan: &SegmentPlan,
    backend: &CompressionBackend,
) -> Result<ClassCompressorList> {
    plan.validate()?;
    if !backend.kind.supports_dictionary() {
        return Err(Error::UnsupportedBackend(backend.kind));
    }
    let text = concat_class_text(corpus, class, &plan.separator)?;
    let total_segments = segment_count(text.len(), plan.step_size)?;
    let compressors = spread_indices(total_segments, plan.max_compressors)
        .into_par_iter()
        .map(|x| {
            let start = x * plan.step_size;
            let end = (start + plan.step_size).min(text.len());
            let span = SourceSpan::new(class, x, start, end);
            let dict = train_dictionary_with(backend, &text[start..end], span, plan.dictionary_mode)?;
            DictCompressor::new(*backend, dict)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassCompressorList {
        class: class.to_owned(),
        segment_count: compressors.len(),
        compressors,
        total_segments,
        text_len: text.len(),
    })
}

/// Builds one list per class. Classes are processed in parallel on the
/// current rayon pool; the result does not depend on the pool size.
pub fn build_all_lists(corpus: &Corpus, plan: &SegmentPlan, backend: &CompressionBackend) -> Result<CompressorLists> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("empty training corpus".into()));
    }
    let classes: Vec<&String> = corpus.classes().iter().collect();
    classes
        .into_par_iter()
        .map(|class| {
            build_class_list(corpus, class, plan, backend)
                .map(|list| (class.clone(), list))
                .map_err(|e| Error::in_class(class, e))
        })
        .collect()
}

/// Total compressed size of a query under one class's list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    /// Sum of compressed sizes over the class's compressors.
    pub score: u64,
    pub compressors: usize,
}

impl ClassScore {
    pub fn mean(&self) -> f64 {
        self.score as f64 / self.compressors.max(1) as f64
    }
}

/// Orders by aggregated score, then class name.
pub fn compare_scores(a: &ClassScore, b: &ClassScore, aggregation: Aggregation) -> Ordering {
    let primary = match aggregation {
        Aggregation::Sum => a.score.cmp(&b.score),
        // a/na vs b/nb without rounding.
        Aggregation::Mean => (u128::from(a.score) * b.compressors.max(1) as u128)
            .cmp(&(u128::from(b.score) * a.compressors.max(1) as u128)),
    };
    primary.then_with(|| a.class.cmp(&b.class))
}

/// Scores `query` under every class's list, in class order.
pub fn score_query(lists: &CompressorLists, query: &[u8]) -> Result<Vec<ClassScore>> {
    if lists.is_empty() {
        return Err(Error::InvalidInput("no compressor lists".into()));
    }
    if query.is_empty() {
        return Err(Error::InvalidInput("empty query".into()));
    }
    let jobs: Vec<(&str, &DictCompressor)> = lists
        .values()
        .flat_map(|l| l.compressors.iter().map(move |c| (l.class.as_str(), c)))
        .collect();
    let sizes = jobs
        .par_iter()
        .map(|(class, c)| dict_compressed_size(c, query).map_err(|e| Error::in_class(class, e)))
        .collect::<Result<Vec<_>>>()?;
    let mut sizes = sizes.into_iter();
    Ok(lists
        .values()
        .map(|l| ClassScore {
            class: l.class.clone(),
            score: sizes.by_ref().take(l.compressors.len()).map(|s| s as u64).sum(),
            compressors: l.compressors.len(),
        })
        .collect())
}

/// The two best-scoring classes, with every class score kept for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub first: String,
    pub second: String,
    pub scores: Vec<ClassScore>,
}

impl CandidatePair {
    pub fn contains(&self, class: &str) -> bool {
        self.first == class || self.second == class
    }
}

pub fn select_candidates(scores: &[ClassScore]) -> Result<CandidatePair> {
    select_candidates_by(scores, Aggregation::default())
}

/// Picks the two lowest-scoring classes; ties go to the lexicographically
/// smaller class name.
pub fn select_candidates_by(scores: &[ClassScore], aggregation: Aggregation) -> Result<CandidatePair> {
    if scores.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least two scored classes, got {}",
            scores.len()
        )));
    }
    let mut ranked: Vec<&ClassScore> = scores.iter().collect();
    ranked.sort_by(|a, b| compare_scores(a, b, aggregation));
    Ok(CandidatePair {
        first: ranked[0].class.clone(),
        second: ranked[1].class.clone(),
        scores: scores.to_vec(),
    })
}
