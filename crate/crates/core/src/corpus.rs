//! Labelled text corpora: CSV loading, per-class concatenation and seeded
//! few-shot subsampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Default separator placed between documents when a class is concatenated.
pub const DEFAULT_SEPARATOR: &[u8] = b"\n";

/// One training or test document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledText {
    pub label: String,
    pub text: Vec<u8>,
}

impl LabeledText {
    pub fn new(label: impl Into<String>, text: impl Into<Vec<u8>>) -> Result<Self> {
        let label = label.into();
        let text = text.into();
        if label.is_empty() {
            return Err(Error::InvalidInput("empty label".into()));
        }
        if text.iter().all(u8::is_ascii_whitespace) {
            return Err(Error::InvalidInput(format!("empty text for label `{label}`")));
        }
        Ok(Self { label, text })
    }
}

/// An immutable, ordered collection of labelled documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    name: String,
    samples: Vec<LabeledText>,
    classes: BTreeSet<String>,
}

impl Corpus {
    /// Builds a corpus. Sample order is preserved.
    pub fn new(name: impl Into<String>, samples: Vec<LabeledText>) -> Result<Self> {
        for s in &samples {
            if s.label.is_empty() {
                return Err(Error::InvalidInput("empty label".into()));
            }
            if s.text.iter().all(u8::is_ascii_whitespace) {
                return Err(Error::InvalidInput(format!("empty text for label `{}`", s.label)));
            }
        }
        let classes = samples.iter().map(|s| s.label.clone()).collect();
        Ok(Self {
            name: name.into(),
            samples,
            classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[LabeledText] {
        &self.samples
    }

    pub fn classes(&self) -> &BTreeSet<String> {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            *counts.entry(s.label.as_str()).or_insert(0) += 1;
        }
        counts
    }

    /// Indices of every sample carrying `class`, in corpus order.
    pub fn indices_of(&self, class: &str) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// SHA-256 over labels and texts, used to prove two runs saw the same split.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        self.feed_hasher(&mut hasher);
        hex_digest(hasher)
    }

    pub(crate) fn feed_hasher(&self, hasher: &mut Sha256) {
        for s in &self.samples {
            hasher.update((s.label.len() as u64).to_le_bytes());
            hasher.update(s.label.as_bytes());
            hasher.update((s.text.len() as u64).to_le_bytes());
            hasher.update(&s.text);
        }
    }

    /// Writes `label,text` rows with a header. Texts must be valid UTF-8.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, 0, e))?;
        writer
            .write_record(["label", "text"])
            .map_err(|e| csv_error(path, 0, e))?;
        for (i, s) in self.samples.iter().enumerate() {
            let text = std::str::from_utf8(&s.text).map_err(|_| Error::Csv {
                path: path.to_owned(),
                row: i as u64 + 1,
                message: "text is not valid UTF-8".into(),
            })?;
            writer
                .write_record([s.label.as_str(), text])
                .map_err(|e| csv_error(path, i as u64 + 1, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn hex_digest(hasher: Sha256) -> String {
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Checksum of a train/test pair.
pub fn split_checksum(train: &Corpus, test: &Corpus) -> String {
    let mut hasher = Sha256::new();
    train.feed_hasher(&mut hasher);
    hasher.update(b"\x00split\x00");
    test.feed_hasher(&mut hasher);
    hex_digest(hasher)
}

/// Addresses a CSV column by header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Column::Index(i) => write!(f, "{i}"),
            Column::Name(n) => f.write_str(n),
        }
    }
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_owned()),
        })
    }
}

/// How to read a labelled CSV file.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: Column,
    /// Several text columns are joined with a single space (e.g. title + body).
    pub text_columns: Vec<Column>,
    pub has_header: bool,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            label_column: Column::Index(0),
            text_columns: vec![Column::Index(1)],
            has_header: true,
            delimiter: b',',
        }
    }
}

impl CsvOptions {
    pub fn new(label_column: Column, text_column: Column) -> Self {
        Self {
            label_column,
            text_columns: vec![text_column],
            ..Self::default()
        }
    }
}

fn csv_error(path: &Path, row: u64, e: csv::Error) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return Error::io(path, io);
        }
        unreachable!();
    }
    let row = if row > 0 {
        row
    } else {
        e.position().map(|p| p.record()).unwrap_or(0)
    };
    Error::Csv {
        path: path.to_owned(),
        row,
        message: e.to_string(),
    }
}

fn resolve(column: &Column, headers: Option<&csv::ByteRecord>) -> Result<usize> {
    match (column, headers) {
        (Column::Index(i), _) => Ok(*i),
        (Column::Name(name), Some(h)) => h
            .iter()
            .position(|f| f == name.as_bytes())
            .ok_or_else(|| Error::UnknownColumn(name.clone())),
        (Column::Name(name), None) => Err(Error::UnknownColumn(name.clone())),
    }
}

/// Loads a labelled corpus with one sample per CSV row, in file order.
///
/// Rows are numbered from 1 for the first data row. The corpus name is the
/// file stem.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(std::io::BufReader::new(file), path, name, options)
}

/// Like [`load_csv`] but from any reader; `name` labels both the corpus and
/// error messages.
pub fn read_csv(reader: impl std::io::Read, name: &str, options: &CsvOptions) -> Result<Corpus> {
    parse_csv(reader, Path::new(name), name.to_owned(), options)
}

fn parse_csv(source: impl std::io::Read, path: &Path, name: String, options: &CsvOptions) -> Result<Corpus> {
    if options.text_columns.is_empty() {
        return Err(Error::Validation("no text column given".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .delimiter(options.delimiter)
        .flexible(true)
        .from_reader(source);
    let headers = if options.has_header {
        Some(reader.byte_headers().map_err(|e| csv_error(path, 0, e))?.clone())
    } else {
        None
    };
    let label_idx = resolve(&options.label_column, headers.as_ref())?;
    let text_idx = options
        .text_columns
        .iter()
        .map(|c| resolve(c, headers.as_ref()))
        .collect::<Result<Vec<_>>>()?;

    let mut samples = Vec::new();
    let mut record = csv::ByteRecord::new();
    let mut row = 0u64;
    loop {
        match reader.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(path, row + 1, e)),
        }
        row += 1;
        let field = |idx: usize| {
            record.get(idx).ok_or_else(|| Error::Csv {
                path: path.to_owned(),
                row,
                message: format!("missing column {idx} ({} fields)", record.len()),
            })
        };
        let label = std::str::from_utf8(field(label_idx)?)
            .map_err(|_| Error::Csv {
                path: path.to_owned(),
                row,
                message: "label is not valid UTF-8".into(),
            })?
            .trim()
            .to_owned();
        if label.is_empty() {
            return Err(Error::Csv {
                path: path.to_owned(),
                row,
                message: "empty label".into(),
            });
        }
        let mut text = Vec::new();
        for (n, &idx) in text_idx.iter().enumerate() {
            if n > 0 {
                text.push(b' ');
            }
            text.extend_from_slice(field(idx)?);
        }
        if text.iter().all(u8::is_ascii_whitespace) {
            return Err(Error::EmptyText {
                path: path.to_owned(),
                row,
            });
        }
        samples.push(LabeledText { label, text });
    }
    Corpus::new(name, samples)
}

/// Concatenates every text labelled `class`, in corpus order, joined by `separator`.
pub fn concat_class_text(corpus: &Corpus, class: &str, separator: &[u8]) -> Result<Vec<u8>> {
    if !corpus.classes.contains(class) {
        return Err(Error::UnknownClass(class.to_owned()));
    }
    let mut out = Vec::new();
    for (n, s) in corpus.samples.iter().filter(|s| s.label == class).enumerate() {
        if n > 0 {
            out.extend_from_slice(separator);
        }
        out.extend_from_slice(&s.text);
    }
    Ok(out)
}

/// Parameters of a repeated few-shot experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotSpec {
    pub shots: usize,
    pub seed: u64,
    pub trials: usize,
}

impl FewShotSpec {
    pub fn new(shots: usize, seed: u64, trials: usize) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Validation("shots must be at least 1".into()));
        }
        if trials == 0 {
            return Err(Error::Validation("trials must be at least 1".into()));
        }
        Ok(Self { shots, seed, trials })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one (seed, trial, class) stream.
fn stream_seed(seed: u64, trial: usize, class: &str) -> u64 {
    // FNV-1a over the class name keeps the stream independent of class order.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in class.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(splitmix64(seed ^ splitmix64(trial as u64)) ^ h)
}

/// Draws `spec.shots` samples per class without replacement.
///
/// The selection for each class depends only on `(spec.seed, trial_index, class)`.
/// The returned corpus keeps the original relative order of the chosen samples.
pub fn few_shot_sample(corpus: &Corpus, spec: &FewShotSpec, trial_index: usize) -> Result<Corpus> {
    if spec.shots == 0 || spec.trials == 0 {
        return Err(Error::Validation("shots and trials must be positive".into()));
    }
    if trial_index >= spec.trials {
        return Err(Error::Validation(format!(
            "trial index {trial_index} out of range for {} trials",
            spec.trials
        )));
    }
    let mut chosen = Vec::with_capacity(spec.shots * corpus.classes.len());
    for class in &corpus.classes {
        let members = corpus.indices_of(class);
        if members.len() < spec.shots {
            return Err(Error::InsufficientSamples {
                class: class.clone(),
                available: members.len(),
                requested: spec.shots,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(spec.seed, trial_index, class));
        chosen.extend(
            index::sample(&mut rng, members.len(), spec.shots)
                .into_iter()
                .map(|i| members[i]),
        );
    }
    chosen.sort_unstable();
    let samples = chosen.into_iter().map(|i| corpus.samples[i].clone()).collect();
    Corpus::new(format!("{}-{}shot-t{}", corpus.name, spec.shots, trial_index), samples)
}
