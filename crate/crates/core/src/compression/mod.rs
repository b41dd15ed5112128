//! Compressed-size oracles: real Zstandard and DEFLATE backends, the
//! reference LZ + entropy model, dictionary compressors and NCD.

mod dictionary;
pub mod reference;

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use flate2::{Compress, Compression, FlushCompress, Status};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dictionary::{
    dict_compressed_size, train_dictionary, train_dictionary_with, DictCompressor, DictionaryMode, SourceSpan,
    TrainedDictionary,
};

/// Gzip member header (10 bytes, no optional fields) plus CRC32/ISIZE trailer.
const GZIP_FRAMING: usize = 18;

/// Default sliding window of the reference model.
pub const DEFAULT_REFERENCE_WINDOW: usize = 32 * 1024;

/// Inputs at or above this size are compressed at the fast level when
/// adaptive levels are enabled.
pub const ADAPTIVE_LEVEL_THRESHOLD: usize = 64 * 1024;
const ADAPTIVE_FAST_LEVEL: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    /// Zstandard frames; dictionary capable.
    Zstd,
    /// DEFLATE in a gzip container.
    Deflate,
    /// In-process greedy LZ parse priced by empirical entropy.
    ReferenceLz,
}

impl BackendKind {
    pub fn default_level(self) -> i32 {
        match self {
            BackendKind::Zstd => 3,
            BackendKind::Deflate => 6,
            BackendKind::ReferenceLz => 0,
        }
    }

    pub fn supports_dictionary(self) -> bool {
        !matches!(self, BackendKind::Deflate)
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            BackendKind::Zstd => 1,
            BackendKind::Deflate => 2,
            BackendKind::ReferenceLz => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(BackendKind::Zstd),
            2 => Some(BackendKind::Deflate),
            3 => Some(BackendKind::ReferenceLz),
            _ => None,
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Zstd => "zstd",
            BackendKind::Deflate => "deflate",
            BackendKind::ReferenceLz => "reference-lz",
        })
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zstd" => Ok(BackendKind::Zstd),
            "deflate" | "gzip" => Ok(BackendKind::Deflate),
            "reference-lz" | "reference" => Ok(BackendKind::ReferenceLz),
            _ => Err(Error::Validation(format!("unknown backend `{s}`"))),
        }
    }
}

/// A configured compressor used as a size oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionBackend {
    pub kind: BackendKind,
    pub level: i32,
    /// Drop to the fast level for inputs of [`ADAPTIVE_LEVEL_THRESHOLD`] bytes
    /// or more. Only affects Zstandard.
    pub adaptive_level: bool,
    /// Sliding window of the reference model, in bytes.
    pub window: usize,
}

impl CompressionBackend {
    pub fn new(kind: BackendKind) -> Self {
        Self {
            kind,
            level: kind.default_level(),
            adaptive_level: matches!(kind, BackendKind::Zstd),
            window: DEFAULT_REFERENCE_WINDOW,
        }
    }

    pub fn zstd() -> Self {
        Self::new(BackendKind::Zstd)
    }

    pub fn deflate() -> Self {
        Self::new(BackendKind::Deflate)
    }

    pub fn reference_lz() -> Self {
        Self::new(BackendKind::ReferenceLz)
    }

    pub fn with_level(mut self, level: i32) -> Self {
        self.level = level;
        self
    }

    pub fn with_adaptive_level(mut self, on: bool) -> Self {
        self.adaptive_level = on;
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            BackendKind::Zstd => (zstd::compression_level_range()).contains(&self.level) && self.level != 0,
            BackendKind::Deflate => (0..=9).contains(&self.level),
            BackendKind::ReferenceLz => self.window >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "level {} / window {} not valid for {} backend",
                self.level, self.window, self.kind
            )))
        }
    }

    /// Level actually used for an input of `len` bytes.
    pub fn effective_level(&self, len: usize) -> i32 {
        if self.kind == BackendKind::Zstd && self.adaptive_level && len >= ADAPTIVE_LEVEL_THRESHOLD {
            self.level.min(ADAPTIVE_FAST_LEVEL)
        } else {
            self.level
        }
    }

    fn failure(&self, message: impl Into<String>) -> Error {
        Error::Backend {
            kind: self.kind,
            message: message.into(),
        }
    }
}

/// Anything that can report a compressed length.
pub trait SizeOracle {
    fn size_of(&self, data: &[u8]) -> Result<usize>;
}

impl SizeOracle for CompressionBackend {
    fn size_of(&self, data: &[u8]) -> Result<usize> {
        compressed_size(self, data)
    }
}

thread_local! {
    static ZSTD_CCTX: RefCell<Option<zstd_safe::CCtx<'static>>> = const { RefCell::new(None) };
    static DEFLATE: RefCell<Option<(u32, Compress)>> = const { RefCell::new(None) };
    static SCRATCH: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

/// Runs `f` with this thread's reusable Zstandard context and output buffer.
pub(crate) fn with_zstd_context<T>(f: impl FnOnce(&mut zstd_safe::CCtx<'static>, &mut Vec<u8>) -> T) -> T {
    ZSTD_CCTX.with(|cell| {
        let mut slot = cell.borrow_mut();
        let cctx = slot.get_or_insert_with(zstd_safe::CCtx::create);
        SCRATCH.with(|buf| f(cctx, &mut buf.borrow_mut()))
    })
}

fn zstd_size(backend: &CompressionBackend, data: &[u8]) -> Result<usize> {
    let level = backend.effective_level(data.len());
    with_zstd_context(|cctx, buf| {
        buf.clear();
        buf.reserve(zstd_safe::compress_bound(data.len()));
        cctx.compress(buf, data, level)
            .map_err(|code| backend.failure(zstd_safe::get_error_name(code)))
    })
}

fn deflate_size(backend: &CompressionBackend, data: &[u8]) -> Result<usize> {
    let level = backend.level as u32;
    DEFLATE.with(|cell| {
        let mut slot = cell.borrow_mut();
        let state = match slot.as_mut() {
            Some((l, c)) if *l == level => {
                c.reset();
                c
            }
            _ => {
                *slot = Some((level, Compress::new(Compression::new(level), false)));
                &mut slot.as_mut().unwrap().1
            }
        };
        SCRATCH.with(|buf| {
            let mut buf = buf.borrow_mut();
            buf.clear();
            // Stored blocks cost 5 bytes per 64 KiB; this bound is never exceeded.
            buf.reserve(data.len() + data.len() / 16 + 64);
            loop {
                let consumed = state.total_in() as usize;
                let status = state
                    .compress_vec(&data[consumed..], &mut buf, FlushCompress::Finish)
                    .map_err(|e| backend.failure(e.to_string()))?;
                match status {
                    Status::StreamEnd => break,
                    Status::Ok | Status::BufError => {
                        let extra = buf.capacity().max(1024);
                        buf.reserve(extra);
                    }
                }
            }
            Ok(state.total_out() as usize + GZIP_FRAMING)
        })
    })
}

/// Length in bytes of `data` compressed by `backend`.
pub fn compressed_size(backend: &CompressionBackend, data: &[u8]) -> Result<usize> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot size empty input".into()));
    }
    match backend.kind {
        BackendKind::Zstd => zstd_size(backend, data),
        BackendKind::Deflate => deflate_size(backend, data),
        BackendKind::ReferenceLz => Ok(reference::ref_compress_size(&[], data, backend.window)?.max(1)),
    }
}

/// Full compressed payload in the backend's public container format.
///
/// Used for interoperability checks; scoring only ever needs the size.
pub fn compress_bytes(backend: &CompressionBackend, data: &[u8]) -> Result<Vec<u8>> {
    match backend.kind {
        BackendKind::Zstd => {
            zstd::bulk::compress(data, backend.effective_level(data.len())).map_err(|e| backend.failure(e.to_string()))
        }
        BackendKind::Deflate => {
            use std::io::Write;
            let mut enc = flate2::GzBuilder::new().write(Vec::new(), Compression::new(backend.level as u32));
            enc.write_all(data)
                .and_then(|_| enc.finish())
                .map_err(|e| backend.failure(e.to_string()))
        }
        BackendKind::ReferenceLz => Err(backend.failure("reference payloads are size-only")),
    }
}

/// NCD from three compressed sizes: `C(x)`, `C(y)` and `C(xy)`.
pub fn ncd_from_sizes(cx: usize, cy: usize, cxy: usize) -> f64 {
    let (lo, hi) = if cx < cy { (cx, cy) } else { (cy, cx) };
    (cxy as f64 - lo as f64) / hi as f64
}

/// Normalized compression distance under any size oracle; `x` precedes `y`
/// in the joint string.
pub fn ncd_with<O: SizeOracle + ?Sized>(oracle: &O, x: &[u8], y: &[u8]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("ncd of empty input".into()));
    }
    let cx = oracle.size_of(x)?;
    let cy = oracle.size_of(y)?;
    ncd_with_sizes(oracle, x, y, cx, cy)
}

/// NCD when `C(x)` and `C(y)` are already known.
pub fn ncd_with_sizes<O: SizeOracle + ?Sized>(oracle: &O, x: &[u8], y: &[u8], cx: usize, cy: usize) -> Result<f64> {
    let mut joint = Vec::with_capacity(x.len() + y.len());
    joint.extend_from_slice(x);
    joint.extend_from_slice(y);
    let cxy = oracle.size_of(&joint)?;
    Ok(ncd_from_sizes(cx, cy, cxy))
}

pub fn ncd(backend: &CompressionBackend, x: &[u8], y: &[u8]) -> Result<f64> {
    ncd_with(backend, x, y)
}
