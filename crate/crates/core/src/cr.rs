//! Centralized reasoning: NCD nearest neighbours restricted to the training
//! texts of the two shortlisted classes.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compression::{compressed_size, ncd_with_sizes, CompressionBackend};
use crate::corpus::{Corpus, LabeledText};
use crate::error::{Error, Result};
use crate::mcc::CandidatePair;

/// Training samples labelled with either candidate class.
#[derive(Debug, Clone)]
pub struct GoldData<'c> {
    /// `(corpus index, sample)` in corpus order.
    pub samples: Vec<(usize, &'c LabeledText)>,
    pub source: CandidatePair,
}

impl GoldData<'_> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcdNeighbor {
    pub distance: f64,
    pub label: String,
    /// Position in the gold data (or in whatever reference set was searched).
    pub index: usize,
    /// Position in the training corpus.
    pub corpus_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub backend: CompressionBackend,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 1,
            backend: CompressionBackend::deflate(),
        }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Validation("k must be at least 1".into()));
        }
        self.backend.validate()
    }
}

/// Every training sample labelled `pair.first` or `pair.second`.
///
/// Nothing is held out: the candidates are classes, not individual texts.
pub fn extract_gold<'c>(corpus: &'c Corpus, pair: &CandidatePair) -> Result<GoldData<'c>> {
    let samples: Vec<_> = corpus
        .samples()
        .iter()
        .enumerate()
        .filter(|(_, s)| pair.contains(&s.label))
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptyGold(pair.first.clone(), pair.second.clone()));
    }
    Ok(GoldData {
        samples,
        source: pair.clone(),
    })
}

/// `C(sample)` for every training sample, reused across queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeCache {
    pub backend: CompressionBackend,
    pub sizes: Vec<usize>,
}

impl SizeCache {
    pub fn build(corpus: &Corpus, backend: &CompressionBackend) -> Result<Self> {
        let sizes = corpus
            .samples()
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                compressed_size(backend, &s.text).map_err(|e| Error::GoldSample {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            backend: *backend,
            sizes,
        })
    }
}

/// NCD from `query` to each `(corpus index, sample)` reference.
///
/// With a cache, `C(sample)` is looked up instead of recomputed; the
/// distances are identical either way.
pub(crate) fn ncd_to_references(
    query: &[u8],
    references: &[(usize, &LabeledText)],
    config: &KnnConfig,
    cache: Option<&SizeCache>,
) -> Result<Vec<NcdNeighbor>> {
    if query.is_empty() {
        return Err(Error::InvalidInput("empty query".into()));
    }
    if references.is_empty() {
        return Err(Error::InvalidInput("no reference samples".into()));
    }
    let backend = &config.backend;
    let cache = cache.filter(|c| c.backend == *backend);
    let cq = compressed_size(backend, query)?;
    references
        .par_iter()
        .enumerate()
        .map(|(index, &(corpus_index, sample))| {
            let wrap = |e| Error::GoldSample {
                index,
                source: Box::new(e),
            };
            let cs = match cache {
                Some(c) => c.sizes[corpus_index],
                None => compressed_size(backend, &sample.text).map_err(wrap)?,
            };
            let distance = ncd_with_sizes(backend, query, &sample.text, cq, cs).map_err(wrap)?;
            Ok(NcdNeighbor {
                distance,
                label: sample.label.clone(),
                index,
                corpus_index,
            })
        })
        .collect()
}

/// One neighbour per gold sample, in gold order.
pub fn ncd_distances(query: &[u8], gold: &GoldData<'_>, config: &KnnConfig) -> Result<Vec<NcdNeighbor>> {
    ncd_to_references(query, &gold.samples, config, None)
}

/// Result of a KNN vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnVote {
    pub label: String,
    /// Two or more labels shared the top vote count; the closest neighbour decided.
    pub tie: bool,
    /// The `k` nearest neighbours, nearest first.
    pub nearest: Vec<NcdNeighbor>,
}

/// Majority vote among the `k` nearest neighbours (ordered by distance, then
/// index). A tie in vote counts goes to the label of the single closest
/// neighbour.
pub fn knn_vote(neighbors: &[NcdNeighbor], k: usize) -> Result<KnnVote> {
    if neighbors.is_empty() {
        return Err(Error::InvalidInput("no neighbours to vote".into()));
    }
    if k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    let mut order: Vec<&NcdNeighbor> = neighbors.iter().collect();
    order.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
    order.truncate(k);

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for n in &order {
        *counts.entry(n.label.as_str()).or_insert(0) += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let leaders: Vec<&str> = counts.iter().filter(|(_, &c)| c == best).map(|(&l, _)| l).collect();
    let tie = leaders.len() > 1;
    let label = if tie {
        order[0].label.clone()
    } else {
        leaders[0].to_owned()
    };
    Ok(KnnVote {
        label,
        tie,
        nearest: order.into_iter().cloned().collect(),
    })
}

pub fn knn_decide(neighbors: &[NcdNeighbor], config: &KnnConfig) -> Result<String> {
    knn_vote(neighbors, config.k).map(|v| v.label)
}

/// Outcome of the reasoning stage for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrOutcome {
    pub label: String,
    /// No gold data was found and the first candidate was returned.
    pub fallback: bool,
    pub tie: bool,
    pub nearest: Vec<NcdNeighbor>,
    /// NCD evaluations performed (one per gold sample).
    pub ncd_calls: usize,
}

pub(crate) fn centralized_reason_cached(
    corpus: &Corpus,
    pair: &CandidatePair,
    query: &[u8],
    config: &KnnConfig,
    cache: Option<&SizeCache>,
) -> Result<CrOutcome> {
    let gold = match extract_gold(corpus, pair) {
        Ok(g) => g,
        Err(Error::EmptyGold(..)) => {
            return Ok(CrOutcome {
                label: pair.first.clone(),
                fallback: true,
                tie: false,
                nearest: Vec::new(),
                ncd_calls: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let neighbors = ncd_to_references(query, &gold.samples, config, cache)?;
    let vote = knn_vote(&neighbors, config.k)?;
    Ok(CrOutcome {
        label: vote.label,
        fallback: false,
        tie: vote.tie,
        nearest: vote.nearest,
        ncd_calls: neighbors.len(),
    })
}

/// Gold extraction, NCD distances and the KNN vote for one query.
pub fn centralized_reason(
    corpus: &Corpus,
    pair: &CandidatePair,
    query: &[u8],
    config: &KnnConfig,
) -> Result<CrOutcome> {
    centralized_reason_cached(corpus, pair, query, config, None)
}

/// NCD between the query and the concatenation of both candidate classes'
/// texts: a single scalar, kept as a diagnostic next to the per-sample
/// distances the vote uses.
pub fn concatenated_gold_ncd(
    corpus: &Corpus,
    pair: &CandidatePair,
    query: &[u8],
    backend: &CompressionBackend,
) -> Result<f64> {
    let gold = extract_gold(corpus, pair)?;
    let mut joined = Vec::new();
    for class in [&pair.first, &pair.second] {
        for (_, s) in gold.samples.iter().filter(|(_, s)| &s.label == class) {
            joined.extend_from_slice(&s.text);
        }
    }
    crate::compression::ncd(backend, query, &joined)
}
