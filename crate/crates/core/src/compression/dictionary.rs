use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use zstd_safe::{CDict, CParameter, ResetDirective};

use super::{reference, with_zstd_context, BackendKind, CompressionBackend};
use crate::error::{Error, Result};

/// zstd refuses dictionaries below this capacity.
const MIN_TRAINED_CAPACITY: usize = 256;
const MAX_TRAINED_CAPACITY: usize = 112_640;
/// Training samples are cut at newlines and never exceed this length.
const MAX_SAMPLE_LEN: usize = 4096;

/// How a dictionary payload is derived from its segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DictionaryMode {
    /// zstd's dictionary builder; falls back to raw bytes when the segment
    /// is too small to train on.
    #[default]
    Trained,
    /// The segment bytes themselves, used as raw-content dictionary.
    Raw,
}

impl fmt::Display for DictionaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DictionaryMode::Trained => "trained",
            DictionaryMode::Raw => "raw",
        })
    }
}

impl FromStr for DictionaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trained" => Ok(DictionaryMode::Trained),
            "raw" => Ok(DictionaryMode::Raw),
            _ => Err(Error::Validation(format!("unknown dictionary mode `{s}`"))),
        }
    }
}

/// Where a dictionary came from inside its class's concatenated text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub class: String,
    pub segment_index: usize,
    /// Byte range `[start, end)` in the concatenated class text.
    pub start: usize,
    pub end: usize,
    /// The builder rejected the segment and the raw bytes were used instead.
    pub raw_fallback: bool,
}

impl SourceSpan {
    pub fn new(class: impl Into<String>, segment_index: usize, start: usize, end: usize) -> Self {
        Self {
            class: class.into(),
            segment_index,
            start,
            end,
            raw_fallback: false,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainedDictionary {
    pub payload: Vec<u8>,
    pub span: SourceSpan,
    /// Constant added to every score computed with this dictionary.
    pub overhead_bytes: usize,
}

/// Splits a segment into training samples at newline boundaries.
fn sample_sizes(segment: &[u8]) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut start = 0;
    for (i, &b) in segment.iter().enumerate() {
        if b == b'\n' || i + 1 - start == MAX_SAMPLE_LEN {
            sizes.push(i + 1 - start);
            start = i + 1;
        }
    }
    if start < segment.len() {
        sizes.push(segment.len() - start);
    }
    sizes
}

fn trained_capacity(segment_len: usize) -> usize {
    (segment_len / 4).clamp(MIN_TRAINED_CAPACITY, MAX_TRAINED_CAPACITY)
}

/// Segment length and dmer size of the fastCover trainer. Fixed rather
/// than searched: the search multiplies training time by ~10 for a gain in
/// dictionary quality that does not show up in classification accuracy.
const COVER_K: u32 = 200;
const COVER_D: u32 = 8;

fn train_zstd(segment: &[u8], level: i32) -> Option<Vec<u8>> {
    use zstd_sys::{ZDICT_fastCover_params_t, ZDICT_isError, ZDICT_params_t, ZDICT_trainFromBuffer_fastCover};

    let sizes = sample_sizes(segment);
    let capacity = trained_capacity(segment.len());
    let mut dict = vec![0u8; capacity];
    let params = ZDICT_fastCover_params_t {
        k: COVER_K,
        d: COVER_D,
        f: 0,
        steps: 0,
        nbThreads: 0,
        splitPoint: 1.0,
        accel: 0,
        shrinkDict: 0,
        shrinkDictMaxRegression: 0,
        zParams: ZDICT_params_t {
            compressionLevel: level,
            notificationLevel: 0,
            dictID: 0,
        },
    };
    // SAFETY: the buffers outlive the call, `sizes` sums to `segment.len()`
    // and the trainer writes at most `capacity` bytes into `dict`.
    let written = unsafe {
        ZDICT_trainFromBuffer_fastCover(
            dict.as_mut_ptr().cast(),
            capacity,
            segment.as_ptr().cast(),
            sizes.as_ptr(),
            u32::try_from(sizes.len()).ok()?,
            params,
        )
    };
    if unsafe { ZDICT_isError(written) } != 0 || written == 0 {
        return None;
    }
    dict.truncate(written);
    Some(dict)
}

/// Builds a dictionary from one segment with the builder's default mode.
pub fn train_dictionary(backend: &CompressionBackend, segment: &[u8], span: SourceSpan) -> Result<TrainedDictionary> {
    train_dictionary_with(backend, segment, span, DictionaryMode::Trained)
}

/// Builds a dictionary from one segment.
///
/// The reference backend always uses the raw segment: its "dictionary" is
/// the initial content of the sliding window.
pub fn train_dictionary_with(
    backend: &CompressionBackend,
    segment: &[u8],
    mut span: SourceSpan,
    mode: DictionaryMode,
) -> Result<TrainedDictionary> {
    if !backend.kind.supports_dictionary() {
        return Err(Error::UnsupportedBackend(backend.kind));
    }
    if segment.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty segment".into()));
    }
    let payload = match (backend.kind, mode) {
        (BackendKind::Zstd, DictionaryMode::Trained) => match train_zstd(segment, backend.level) {
            Some(dict) => dict,
            None => {
                span.raw_fallback = true;
                segment.to_vec()
            }
        },
        _ => segment.to_vec(),
    };
    Ok(TrainedDictionary {
        payload,
        span,
        overhead_bytes: 0,
    })
}

/// A backend bound to one dictionary, ready to score queries.
pub struct DictCompressor {
    backend: CompressionBackend,
    dictionary: TrainedDictionary,
    prepared: Option<CDict<'static>>,
    fast: OnceLock<CDict<'static>>,
}

impl fmt::Debug for DictCompressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DictCompressor")
            .field("backend", &self.backend)
            .field("span", &self.dictionary.span)
            .field("payload_len", &self.dictionary.payload.len())
            .finish()
    }
}

fn digest(payload: &[u8], level: i32, kind: BackendKind) -> Result<CDict<'static>> {
    CDict::try_create(payload, level).ok_or_else(|| Error::Backend {
        kind,
        message: "could not load dictionary".into(),
    })
}

impl DictCompressor {
    pub fn new(backend: CompressionBackend, dictionary: TrainedDictionary) -> Result<Self> {
        if !backend.kind.supports_dictionary() {
            return Err(Error::UnsupportedBackend(backend.kind));
        }
        if dictionary.payload.is_empty() {
            return Err(Error::InvalidInput("empty dictionary payload".into()));
        }
        let prepared = match backend.kind {
            BackendKind::Zstd => Some(digest(&dictionary.payload, backend.level, backend.kind)?),
            _ => None,
        };
        Ok(Self {
            backend,
            dictionary,
            prepared,
            fast: OnceLock::new(),
        })
    }

    pub fn backend(&self) -> &CompressionBackend {
        &self.backend
    }

    pub fn dictionary(&self) -> &TrainedDictionary {
        &self.dictionary
    }

    fn cdict_for(&self, len: usize) -> Result<&CDict<'static>> {
        let level = self.backend.effective_level(len);
        let prepared = self
            .prepared
            .as_ref()
            .expect("zstd compressor has a digested dictionary");
        if level == self.backend.level {
            return Ok(prepared);
        }
        if let Some(d) = self.fast.get() {
            return Ok(d);
        }
        let d = digest(&self.dictionary.payload, level, self.backend.kind)?;
        Ok(self.fast.get_or_init(|| d))
    }

    fn zstd_size(&self, data: &[u8]) -> Result<usize> {
        let cdict = self.cdict_for(data.len())?;
        let fail = |code| Error::Backend {
            kind: self.backend.kind,
            message: zstd_safe::get_error_name(code).to_owned(),
        };
        with_zstd_context(|cctx, buf| {
            buf.clear();
            buf.reserve(zstd_safe::compress_bound(data.len()));
            cctx.reset(ResetDirective::SessionAndParameters).map_err(fail)?;
            // The frame would otherwise carry the dictionary ID for trained
            // dictionaries only, skewing trained against raw-fallback lists.
            cctx.set_parameter(CParameter::DictIdFlag(false)).map_err(fail)?;
            cctx.ref_cdict(cdict).map_err(fail)?;
            let result = cctx.compress2(buf, data).map_err(fail);
            cctx.disable_dictionary().map_err(fail)?;
            result
        })
    }
}

/// Compressed length of `data` using the compressor's dictionary, plus the
/// dictionary's overhead term.
pub fn dict_compressed_size(comp: &DictCompressor, data: &[u8]) -> Result<usize> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot size empty input".into()));
    }
    let size = match comp.backend.kind {
        BackendKind::Zstd => comp.zstd_size(data)?,
        BackendKind::ReferenceLz => {
            reference::ref_compress_size(&comp.dictionary.payload, data, comp.backend.window)?.max(1)
        }
        BackendKind::Deflate => return Err(Error::UnsupportedBackend(comp.backend.kind)),
    };
    Ok(size + comp.dictionary.overhead_bytes)
}
