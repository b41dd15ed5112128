//! Seeded motif corpora for tests, examples and the bundled demo data.
//!
//! Each class owns a small vocabulary of motif words; documents interleave
//! those motifs with words from a vocabulary shared by every class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{read_csv, Corpus, CsvOptions, LabeledText};
use crate::error::Result;

/// Seed of the bundled corpus under `data/`.
pub const BUNDLED_SEED: u64 = 20_240_601;
pub const BUNDLED_TRAIN_CSV: &str = include_str!("../data/synthetic_train.csv");
pub const BUNDLED_TEST_CSV: &str = include_str!("../data/synthetic_test.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct MotifCorpusSpec {
    pub classes: usize,
    pub docs_per_class: usize,
    pub motifs_per_class: usize,
    pub shared_words: usize,
    /// Probability that a word is drawn from the class motifs.
    pub motif_rate: f64,
    pub min_words: usize,
    pub max_words: usize,
    pub seed: u64,
}

impl Default for MotifCorpusSpec {
    fn default() -> Self {
        Self {
            classes: 3,
            docs_per_class: 40,
            motifs_per_class: 12,
            shared_words: 80,
            motif_rate: 0.4,
            min_words: 20,
            max_words: 45,
            seed: BUNDLED_SEED,
        }
    }
}

/// Class vocabularies and a generator for documents drawn from them.
pub struct MotifGenerator {
    spec: MotifCorpusSpec,
    motifs: Vec<Vec<String>>,
    shared: Vec<String>,
    rng: ChaCha8Rng,
}

fn word(rng: &mut ChaCha8Rng, alphabet: &[u8], min: usize, max: usize) -> String {
    let len = rng.random_range(min..=max);
    (0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())] as char)
        .collect()
}

impl MotifGenerator {
    pub fn new(spec: MotifCorpusSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let lower: Vec<u8> = (b'a'..=b'z').collect();
        let shared = (0..spec.shared_words).map(|_| word(&mut rng, &lower, 2, 8)).collect();
        // Each class draws its motifs from its own slice of the alphabet.
        let motifs = (0..spec.classes)
            .map(|c| {
                let alphabet: Vec<u8> = lower
                    .iter()
                    .copied()
                    .skip(c * 26 / spec.classes.max(1))
                    .take((26 / spec.classes.max(1)).max(4))
                    .collect();
                (0..spec.motifs_per_class)
                    .map(|_| word(&mut rng, &alphabet, 4, 9))
                    .collect()
            })
            .collect();
        Self {
            spec,
            motifs,
            shared,
            rng,
        }
    }

    pub fn class_label(class: usize) -> String {
        format!("class{class}")
    }

    /// One document of the given class.
    pub fn document(&mut self, class: usize) -> String {
        let n = self.rng.random_range(self.spec.min_words..=self.spec.max_words);
        let mut words = Vec::with_capacity(n);
        for _ in 0..n {
            let w = if self.rng.random_bool(self.spec.motif_rate) {
                let m = &self.motifs[class];
                &m[self.rng.random_range(0..m.len())]
            } else {
                &self.shared[self.rng.random_range(0..self.shared.len())]
            };
            words.push(w.as_str());
        }
        words.join(" ")
    }

    /// `per_class` documents for every class, classes interleaved.
    pub fn corpus(&mut self, name: &str, per_class: usize) -> Corpus {
        let mut samples = Vec::with_capacity(per_class * self.spec.classes);
        for _ in 0..per_class {
            for c in 0..self.spec.classes {
                let text = self.document(c);
                samples.push(LabeledText {
                    label: Self::class_label(c),
                    text: text.into_bytes(),
                });
            }
        }
        Corpus::new(name, samples).expect("generated documents are non-empty")
    }
}

/// Train corpus of `spec.docs_per_class` per class plus a test corpus of
/// `test_per_class` per class, drawn from the same generator.
pub fn motif_split(spec: &MotifCorpusSpec, test_per_class: usize) -> (Corpus, Corpus) {
    let mut generator = MotifGenerator::new(spec.clone());
    let train = generator.corpus("motif-train", spec.docs_per_class);
    let test = generator.corpus("motif-test", test_per_class);
    (train, test)
}

/// Test split size of the bundled corpus, per class.
pub const BUNDLED_TEST_PER_CLASS: usize = 20;

fn parse_bundled(name: &str, csv: &str) -> Result<Corpus> {
    read_csv(csv.as_bytes(), name, &CsvOptions::default())
}

/// The 3-class, 40-documents-per-class corpus shipped in `data/`.
pub fn bundled_train() -> Result<Corpus> {
    parse_bundled("synthetic_train", BUNDLED_TRAIN_CSV)
}

pub fn bundled_test() -> Result<Corpus> {
    parse_bundled("synthetic_test", BUNDLED_TEST_CSV)
}
