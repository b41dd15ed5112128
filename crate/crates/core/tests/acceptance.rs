//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines show up on a plain
//! `cargo test`. Criteria that need the public benchmark corpora read them
//! from `LFTC_DATA_DIR` (see `lftc::datasets`). Without the data they print
//! FAIL with the reason but do not fail the run, unless
//! `LFTC_ACCEPTANCE_STRICT=1`. Any other failure exits non-zero.
//!
//!     cargo test --test acceptance            # all criteria
//!     cargo test --test acceptance -- 3 7     # a subset

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lftc::cli::{run_compare, run_fewshot, Command, DataSource, RunSpec};
use lftc::compression::reference::{ref_entropy_coded_size, ref_longest_match};
use lftc::compression::{ncd_with, SizeOracle};
use lftc::cr::{knn_decide, KnnConfig, NcdNeighbor};
use lftc::datasets::{self, Dataset};
use lftc::report::CompareReport;
use lftc::synthetic::{bundled_test, bundled_train, motif_split, MotifCorpusSpec};
use lftc::{evaluate, Corpus, PipelineConfig, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Pass,
    Fail,
    /// Needs a dataset that is not present locally; nothing else failed.
    MissingData,
}

type Outcome = (Verdict, String);

fn check(ok: bool, detail: String) -> Outcome {
    (if ok { Verdict::Pass } else { Verdict::Fail }, detail)
}

/// Failures beat missing data beats pass.
fn combine(failed: bool, missing: bool, detail: String) -> Outcome {
    let v = match (failed, missing) {
        (true, _) => Verdict::Fail,
        (false, true) => Verdict::MissingData,
        _ => Verdict::Pass,
    };
    (v, detail)
}

/// Distinguishes an absent dataset from one that is present but broken.
fn dataset_present(dataset: Dataset) -> bool {
    datasets::data_dir().is_some_and(|root| {
        let (train, test) = dataset.paths(&root);
        train.exists() && test.exists()
    })
}

// ---------------------------------------------------------------- 1

/// Σ count·log2(n/count), evaluated directly from a frequency table.
fn oracle_bits(symbols: &[u32]) -> f64 {
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for &s in symbols {
        *counts.entry(s).or_default() += 1;
    }
    let n = symbols.len() as f64;
    counts.values().map(|&c| c as f64 * (n / c as f64).log2()).sum()
}

fn brute_match(text: &[u8], pos: usize) -> (usize, usize) {
    let mut best = (0, 0);
    for start in 0..pos {
        let mut len = 0;
        while pos + len < text.len() && text[start + len] == text[pos + len] {
            len += 1;
        }
        if len >= 3 && (len > best.0 || (len == best.0 && pos - start < best.1)) {
            best = (len, pos - start);
        }
    }
    best
}

struct Stub(HashMap<&'static [u8], usize>);

impl SizeOracle for Stub {
    fn size_of(&self, data: &[u8]) -> lftc::Result<usize> {
        Ok(self.0[data])
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let alphabet = rng.random_range(1..300);
        let symbols: Vec<u32> = (0..rng.random_range(1..2000))
            .map(|_| rng.random_range(0..alphabet))
            .collect();
        let got = ref_entropy_coded_size(&symbols).unwrap();
        let want = oracle_bits(&symbols);
        let rel = if want == 0.0 {
            got.abs()
        } else {
            ((got - want) / want).abs()
        };
        worst = worst.max(rel);
    }

    let mut mismatches = 0;
    let mut positions = 0;
    for _ in 0..1000 {
        let alphabet = rng.random_range(1..5u8);
        let text: Vec<u8> = (0..rng.random_range(1..=512))
            .map(|_| rng.random_range(0..alphabet))
            .collect();
        // Every position of short strings, 32 random ones of long strings.
        let picks: Vec<usize> = if text.len() <= 64 {
            (0..text.len()).collect()
        } else {
            (0..32).map(|_| rng.random_range(0..text.len())).collect()
        };
        for pos in picks {
            positions += 1;
            if ref_longest_match(b"", &text, pos).unwrap() != brute_match(&text, pos) {
                mismatches += 1;
            }
        }
    }

    // Hand-computed: (C(xy) − min) / max.
    let stub = Stub(HashMap::from([
        (&b"x"[..], 40),
        (&b"y"[..], 50),
        (&b"xy"[..], 75),
        (&b"yx"[..], 80),
        (&b"xx"[..], 44),
    ]));
    let stub_ok = ncd_with(&stub, b"x", b"y").unwrap() == 35.0 / 50.0
        && ncd_with(&stub, b"y", b"x").unwrap() == 40.0 / 50.0
        && ncd_with(&stub, b"x", b"x").unwrap() == 4.0 / 40.0;

    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && mismatches == 0 && stub_ok && elapsed < Duration::from_secs(60),
        format!(
            "entropy worst rel err {worst:.1e}; longest match {mismatches} mismatches over {positions} positions; stubbed NCD {}; {:.1}s",
            if stub_ok { "exact" } else { "WRONG" },
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 2

/// Full sort by (distance, index), explicit vote count, and the
/// closest-neighbour rule when the top count is shared.
fn oracle_knn(neighbours: &[NcdNeighbor], k: usize) -> String {
    let mut sorted = neighbours.to_vec();
    sorted.sort_by(|a, b| a.distance.partial_cmp(&b.distance).unwrap().then(a.index.cmp(&b.index)));
    let top = &sorted[..k.min(sorted.len())];
    let mut labels: Vec<&str> = top.iter().map(|n| n.label.as_str()).collect();
    labels.sort();
    labels.dedup();
    let votes: Vec<usize> = labels
        .iter()
        .map(|l| top.iter().filter(|n| n.label == *l).count())
        .collect();
    let best = *votes.iter().max().unwrap();
    let leaders: Vec<&str> = labels
        .iter()
        .zip(&votes)
        .filter(|(_, &v)| v == best)
        .map(|(l, _)| *l)
        .collect();
    if leaders.len() == 1 {
        leaders[0].to_owned()
    } else {
        top[0].label.clone()
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut disagreements = 0;
    let mut ties = 0;
    for case in 0..10_000 {
        let k = [1, 2, 3, 5][case % 4];
        let n = rng.random_range(1..30);
        let labels = rng.random_range(1..5);
        // Coarse distances so equal distances (index tie-breaks) are common.
        let mut ns: Vec<NcdNeighbor> = (0..n)
            .map(|i| NcdNeighbor {
                distance: rng.random_range(0..20) as f64 / 20.0,
                label: format!("c{}", rng.random_range(0..labels)),
                index: i,
                corpus_index: i,
            })
            .collect();
        // Present them out of order.
        for i in (1..ns.len()).rev() {
            ns.swap(i, rng.random_range(0..=i));
        }
        let cfg = KnnConfig {
            k,
            ..KnnConfig::default()
        };
        let got = knn_decide(&ns, &cfg).unwrap();
        let vote = lftc::cr::knn_vote(&ns, k).unwrap();
        ties += usize::from(vote.tie);
        if got != oracle_knn(&ns, k) {
            disagreements += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        disagreements == 0 && elapsed < Duration::from_secs(60),
        format!(
            "{disagreements} disagreements over 10000 cases ({ties} vote ties); {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 3

const QUERIES: usize = 200;

fn truncate(corpus: &Corpus, n: usize) -> Corpus {
    Corpus::new(corpus.name(), corpus.samples()[..n].to_vec()).unwrap()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut sums = [0.0; 3];
    let mut min_full = 1.0f64;
    for seed in 0..10u64 {
        let spec = MotifCorpusSpec {
            seed: 3_000 + seed,
            docs_per_class: 40,
            ..MotifCorpusSpec::default()
        };
        let (train, test) = motif_split(&spec, QUERIES.div_ceil(3));
        let test = truncate(&test, QUERIES);
        for (i, v) in [Variant::Lftc, Variant::LftcMcc, Variant::LftcCr]
            .into_iter()
            .enumerate()
        {
            let acc = evaluate(&train, &test, &PipelineConfig::default().with_variant(v))
                .unwrap()
                .report
                .accuracy;
            sums[i] += acc / 10.0;
            if i == 0 {
                min_full = min_full.min(acc);
            }
        }
    }
    let [full, mcc, cr] = sums;
    let within = |a: f64| a - full <= 0.01 + 1e-12 && full - a <= 0.03 + 1e-12;
    let elapsed = start.elapsed();
    check(
        min_full >= 0.95 && within(mcc) && within(cr) && elapsed < Duration::from_secs(300),
        format!(
            "lftc mean {full:.4} (worst seed {min_full:.3}); lftc-mcc {mcc:.4}; lftc-cr {cr:.4}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 4

fn full_split_accuracy(dataset: Dataset) -> Result<(f64, f64), String> {
    let (train, test) = datasets::load_from_env(dataset).map_err(|e| e.to_string())?;
    let eval = evaluate(&train, &test, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    Ok((eval.report.accuracy, eval.report.timings.total_seconds))
}

fn criterion_4() -> Outcome {
    let targets = [(Dataset::R8, 0.93), (Dataset::Kirnews, 0.88), (Dataset::Kinnews, 0.89)];
    let (mut failed, mut missing) = (false, false);
    let mut parts = Vec::new();
    for (d, floor) in targets {
        if !dataset_present(d) {
            missing = true;
            parts.push(format!(
                "{d} unavailable (no local copy under {})",
                datasets::DATA_DIR_ENV
            ));
            continue;
        }
        match full_split_accuracy(d) {
            Ok((acc, secs)) => {
                failed |= acc < floor;
                parts.push(format!("{d} {acc:.4} (≥ {floor}, {secs:.1}s)"));
            }
            Err(e) => {
                failed = true;
                parts.push(format!("{d} failed: {e}"));
            }
        }
    }
    combine(failed, missing, parts.join("; "))
}

// ---------------------------------------------------------------- 5

fn fewshot_mean(dataset: Dataset) -> Result<f64, String> {
    let root = datasets::data_dir().ok_or(format!("{} is not set", datasets::DATA_DIR_ENV))?;
    // Loads once here for the size check; the runner reloads from the same files.
    datasets::load(&root, dataset).map_err(|e| e.to_string())?;
    let (train, test) = dataset.paths(&root);
    let mut spec = RunSpec::new(Command::Fewshot);
    spec.data = DataSource::Files {
        train,
        test,
        csv: dataset.csv_options(),
    };
    spec.shots = Some(5);
    spec.trials = 10;
    spec.seed = 5;
    run_fewshot(&spec).map(|r| r.accuracy).map_err(|e| e.to_string())
}

fn criterion_5() -> Outcome {
    let (mut failed, mut missing) = (false, false);
    let mut parts = Vec::new();
    if dataset_present(Dataset::AgNews) {
        match fewshot_mean(Dataset::AgNews) {
            Ok(m) => {
                failed |= !(0.436..=0.624).contains(&m);
                parts.push(format!("agnews 5-shot mean {m:.4} (band [0.436, 0.624])"));
            }
            Err(e) => {
                failed = true;
                parts.push(format!("agnews failed: {e}"));
            }
        }
    } else {
        missing = true;
        parts.push(format!(
            "agnews unavailable (no local copy under {})",
            datasets::DATA_DIR_ENV
        ));
    }
    // Optional: only checked when a local copy exists.
    if dataset_present(Dataset::SogouNews) {
        match fewshot_mean(Dataset::SogouNews) {
            Ok(m) => {
                failed |= !(0.485..=0.717).contains(&m);
                parts.push(format!("sogounews 5-shot mean {m:.4} (band [0.485, 0.717])"));
            }
            Err(e) => {
                failed = true;
                parts.push(format!("sogounews failed: {e}"));
            }
        }
    } else {
        parts.push("sogounews omitted (optional)".into());
    }
    combine(failed, missing, parts.join("; "))
}

// ---------------------------------------------------------------- 6

/// Median-of-three compare runs: timings on a shared machine are noisy,
/// and the accuracy side is identical across runs anyway.
fn median_compare(spec: &RunSpec) -> lftc::Result<CompareReport> {
    let mut runs = (0..3).map(|_| run_compare(spec)).collect::<lftc::Result<Vec<_>>>()?;
    runs.sort_by(|a, b| a.speed_ratio.total_cmp(&b.speed_ratio));
    Ok(runs.swap_remove(1))
}

fn criterion_6() -> Outcome {
    let train = bundled_train().unwrap();
    let test = bundled_test().unwrap();
    let spec = RunSpec::new(Command::Compare);
    let cmp = median_compare(&spec).unwrap();

    // Instrumented call counts, per query.
    let lftc = evaluate(&train, &test, &spec.config.clone().with_variant(Variant::Lftc)).unwrap();
    let base = evaluate(&train, &test, &spec.config.clone().with_variant(Variant::BaselineNcd)).unwrap();
    let gold_exact = lftc.predictions.iter().all(|p| {
        let (a, b) = p.candidate_pair.clone().unwrap();
        p.ncd_calls == train.samples().iter().filter(|s| s.label == a || s.label == b).count()
    });
    let train_exact = base.predictions.iter().all(|p| p.ncd_calls == train.len());
    let mut failed = !(cmp.speed_ratio > 1.0 && gold_exact && train_exact);
    let mut missing = false;
    let mut detail = format!(
        "synthetic ratio {:.2} (lftc {:.3}s, baseline {:.3}s); ncd calls = |gold| {}, = |train| {}",
        cmp.speed_ratio,
        cmp.lftc.timings.total_seconds,
        cmp.baseline.timings.total_seconds,
        if gold_exact { "exact" } else { "MISMATCH" },
        if train_exact { "exact" } else { "MISMATCH" },
    );

    if !dataset_present(Dataset::R8) {
        missing = true;
        detail += &format!("; r8 unavailable (no local copy under {})", datasets::DATA_DIR_ENV);
        return combine(failed, missing, detail);
    }
    let r8 = datasets::data_dir()
        .ok_or(format!("{} is not set", datasets::DATA_DIR_ENV))
        .and_then(|root| {
            datasets::load(&root, Dataset::R8).map_err(|e| e.to_string())?;
            let (train, test) = Dataset::R8.paths(&root);
            let mut spec = RunSpec::new(Command::Compare);
            spec.data = DataSource::Files {
                train,
                test,
                csv: Dataset::R8.csv_options(),
            };
            run_compare(&spec).map_err(|e| e.to_string())
        });
    match r8 {
        Ok(r) => {
            failed |= r.speed_ratio < 3.0;
            detail += &format!(
                "; r8 ratio {:.2} (≥ 3.0) with {} threads",
                r.speed_ratio, r.lftc.config.threads
            );
        }
        Err(e) => {
            failed = true;
            detail += &format!("; r8 failed: {e}");
        }
    }
    combine(failed, missing, detail)
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let train = bundled_train().unwrap();
    let test = bundled_test().unwrap();
    let mut compared = 0;
    for v in Variant::ALL {
        let runs: Vec<_> = [1, 4, 8]
            .into_iter()
            .map(|t| {
                evaluate(
                    &train,
                    &test,
                    &PipelineConfig::default().with_variant(v).with_threads(t),
                )
                .unwrap()
            })
            .collect();
        for r in &runs[1..] {
            let same = r.report.accuracy.to_bits() == runs[0].report.accuracy.to_bits()
                && r.predictions.len() == runs[0].predictions.len()
                && r.predictions
                    .iter()
                    .zip(&runs[0].predictions)
                    .all(|(a, b)| a.same_outcome(b));
            if !same {
                return check(
                    false,
                    format!("{v} differs between 1 and {} threads", r.report.config.threads),
                );
            }
            compared += r.predictions.len();
        }
    }
    // Seeded few-shot trials, end to end.
    let fewshot = |threads| {
        let mut spec = RunSpec::new(Command::Fewshot);
        spec.shots = Some(4);
        spec.trials = 3;
        spec.config.threads = threads;
        run_fewshot(&spec).unwrap()
    };
    let base = fewshot(1);
    for t in [4, 8] {
        let r = fewshot(t);
        if r.trials != base.trials || r.per_class != base.per_class {
            return check(false, format!("few-shot trials differ between 1 and {t} threads"));
        }
    }
    check(
        true,
        format!("{compared} predictions identical across 1/4/8 workers for all variants; few-shot trials identical"),
    )
}

// ----------------------------------------------------------------

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        (1, "compressor and distance fidelity", criterion_1),
        (2, "knn oracle equivalence", criterion_2),
        (3, "synthetic separation", criterion_3),
        (4, "full-split accuracy (R8, kirnews, kinnews)", criterion_4),
        (5, "few-shot accuracy (AG News, SogouNews)", criterion_5),
        (6, "relative speed and NCD-call counts", criterion_6),
        (7, "determinism across worker counts", criterion_7),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let strict = std::env::var("LFTC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let (mut failed, mut missing) = (0, 0);
    for (n, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let (verdict, detail) = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (Verdict::Fail, format!("panicked: {msg}"))
        });
        let tag = match verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::MissingData => {
                missing += 1;
                "FAIL"
            }
        };
        println!("criterion {n} ({name}): {tag} — {detail}");
    }
    if missing > 0 {
        println!(
            "{missing} criteria FAIL for lack of local benchmark data ({}); {}",
            datasets::DATA_DIR_ENV,
            if strict {
                "fatal under LFTC_ACCEPTANCE_STRICT=1"
            } else {
                "set LFTC_ACCEPTANCE_STRICT=1 to make this fatal"
            }
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
    }
    if failed > 0 || (strict && missing > 0) {
        std::process::exit(1);
    }
}
