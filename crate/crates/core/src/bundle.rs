//! Compressor-list bundles: a versioned binary file holding every class's
//! dictionaries so repeated runs can skip list construction.
//!
//! See `docs/bundle-format.md` for the layout. The format is not promised to
//! stay stable across crate versions; readers reject unknown versions.

use std::io::{Read, Write};
use std::path::Path;

use crate::compression::{
    BackendKind, CompressionBackend, DictCompressor, DictionaryMode, SourceSpan, TrainedDictionary,
};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::mcc::{ClassCompressorList, CompressorLists, SegmentPlan};

pub const MAGIC: &[u8; 8] = b"LFTCBNDL";
pub const FORMAT_VERSION: u32 = 1;

/// Build parameters and the training-set checksum stored in the header; a
/// run that disagrees with them would score against lists it did not ask for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleHeader {
    pub backend: CompressionBackend,
    pub step_size: usize,
    pub max_compressors: Option<usize>,
    pub dictionary_mode: DictionaryMode,
    /// [`Corpus::checksum`] of the training split.
    pub train_checksum: String,
}

impl BundleHeader {
    pub fn new(backend: &CompressionBackend, plan: &SegmentPlan, train: &Corpus) -> Self {
        Self {
            backend: *backend,
            step_size: plan.step_size,
            max_compressors: plan.max_compressors,
            dictionary_mode: plan.dictionary_mode,
            train_checksum: train.checksum(),
        }
    }

    /// Errors unless the bundle was built from `train` with `backend` and `plan`.
    pub fn check_matches(&self, backend: &CompressionBackend, plan: &SegmentPlan, train: &Corpus) -> Result<()> {
        let want = Self::new(backend, plan, train);
        if *self != want {
            return Err(Error::Bundle(format!(
                "bundle was built with {self:?}, run asks for {want:?}"
            )));
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u64(out, b.len() as u64);
    out.extend_from_slice(b);
}

fn dict_mode_tag(mode: DictionaryMode) -> u8 {
    match mode {
        DictionaryMode::Trained => 1,
        DictionaryMode::Raw => 2,
    }
}

/// Serializes lists to bytes.
pub fn encode(header: &BundleHeader, lists: &CompressorLists) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    out.push(header.backend.kind.tag());
    out.extend_from_slice(&header.backend.level.to_le_bytes());
    out.push(header.backend.adaptive_level as u8);
    put_u64(&mut out, header.backend.window as u64);
    put_u64(&mut out, header.step_size as u64);
    put_u64(&mut out, header.max_compressors.map_or(0, |c| c as u64));
    out.push(dict_mode_tag(header.dictionary_mode));
    put_bytes(&mut out, header.train_checksum.as_bytes());
    put_u32(&mut out, lists.len() as u32);
    for list in lists.values() {
        put_bytes(&mut out, list.class.as_bytes());
        put_u64(&mut out, list.total_segments as u64);
        put_u64(&mut out, list.text_len as u64);
        put_u32(&mut out, list.compressors.len() as u32);
        for c in &list.compressors {
            let d = c.dictionary();
            put_u64(&mut out, d.span.segment_index as u64);
            put_u64(&mut out, d.span.start as u64);
            put_u64(&mut out, d.span.end as u64);
            out.push(d.span.raw_fallback as u8);
            put_u64(&mut out, d.overhead_bytes as u64);
            put_bytes(&mut out, &d.payload);
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Bundle(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Bundle("length overflows usize".into()))
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.usize()?;
        self.take(n)
    }

    fn flag(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Bundle(format!("bad flag byte {b}"))),
        }
    }
}

/// Parses bytes produced by [`encode`], rebuilding ready compressors.
pub fn decode(buf: &[u8]) -> Result<(BundleHeader, CompressorLists)> {
    let mut r = Cursor { buf, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::Bundle("not a compressor bundle".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Bundle(format!("unsupported bundle version {version}")));
    }
    let kind = BackendKind::from_tag(r.u8()?).ok_or_else(|| Error::Bundle("unknown backend tag".into()))?;
    let backend = CompressionBackend {
        kind,
        level: r.i32()?,
        adaptive_level: r.flag()?,
        window: r.usize()?,
    };
    let step_size = r.usize()?;
    let max_compressors = match r.usize()? {
        0 => None,
        c => Some(c),
    };
    let dictionary_mode = match r.u8()? {
        1 => DictionaryMode::Trained,
        2 => DictionaryMode::Raw,
        t => return Err(Error::Bundle(format!("unknown dictionary mode tag {t}"))),
    };
    let train_checksum =
        String::from_utf8(r.bytes()?.to_vec()).map_err(|_| Error::Bundle("training checksum is not UTF-8".into()))?;
    let header = BundleHeader {
        backend,
        step_size,
        max_compressors,
        dictionary_mode,
        train_checksum,
    };

    let mut lists = CompressorLists::new();
    for _ in 0..r.u32()? {
        let class =
            String::from_utf8(r.bytes()?.to_vec()).map_err(|_| Error::Bundle("class id is not UTF-8".into()))?;
        let total_segments = r.usize()?;
        let text_len = r.usize()?;
        let n = r.u32()? as usize;
        let mut compressors = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let mut span = SourceSpan::new(class.clone(), r.usize()?, r.usize()?, r.usize()?);
            span.raw_fallback = r.flag()?;
            let overhead_bytes = r.usize()?;
            let payload = r.bytes()?.to_vec();
            let dict = TrainedDictionary {
                payload,
                span,
                overhead_bytes,
            };
            compressors.push(DictCompressor::new(backend, dict)?);
        }
        let list = ClassCompressorList {
            class: class.clone(),
            segment_count: compressors.len(),
            compressors,
            total_segments,
            text_len,
        };
        if lists.insert(class.clone(), list).is_some() {
            return Err(Error::Bundle(format!("class `{class}` appears twice")));
        }
    }
    if r.pos != buf.len() {
        return Err(Error::Bundle("trailing bytes after last class".into()));
    }
    Ok((header, lists))
}

pub fn save_bundle(path: impl AsRef<Path>, header: &BundleHeader, lists: &CompressorLists) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(header, lists)).map_err(|e| Error::io(path, e))
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<(BundleHeader, CompressorLists)> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode(&buf)
}
