//! End-to-end behaviour of loaders, lists, pipelines, reports and the binary.

use std::collections::BTreeMap;

use lftc::classifier::{evaluate_with, predict_ablation_cr, predict_lftc};
use lftc::cli::{run_compare, run_fewshot, Command, RunSpec};
use lftc::compression::{compressed_size, dict_compressed_size, CompressionBackend};
use lftc::corpus::{concat_class_text, few_shot_sample, load_csv, read_csv, CsvOptions, FewShotSpec};
use lftc::cr::{centralized_reason, extract_gold};
use lftc::mcc::{build_all_lists, score_query, select_candidates, SegmentPlan};
use lftc::report::{CompareReport, EvalReport};
use lftc::synthetic::{
    bundled_test, bundled_train, motif_split, MotifCorpusSpec, MotifGenerator, BUNDLED_TEST_PER_CLASS,
};
use lftc::{evaluate, Corpus, LabeledText, PipelineConfig, Variant};

fn small_plan() -> SegmentPlan {
    SegmentPlan::new(2048, Some(4))
}

#[test]
fn bundled_files_match_the_generator() {
    let (train, test) = motif_split(&MotifCorpusSpec::default(), BUNDLED_TEST_PER_CLASS);
    assert_eq!(bundled_train().unwrap().samples(), train.samples());
    assert_eq!(bundled_test().unwrap().samples(), test.samples());
    assert_eq!(train.len(), 120);
    assert_eq!(train.classes().len(), 3);
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let awkward = Corpus::new(
        "c",
        vec![
            LabeledText::new("a", "plain").unwrap(),
            LabeledText::new("b,c", "has \"quotes\", commas\nand a newline").unwrap(),
            LabeledText::new("a", "ünïcödé").unwrap(),
        ],
    )
    .unwrap();
    awkward.write_csv(&path).unwrap();
    let back = load_csv(&path, &CsvOptions::default()).unwrap();
    assert_eq!(back.samples(), awkward.samples());
    assert_eq!(back.classes(), awkward.classes());

    let bundled = bundled_train().unwrap();
    bundled.write_csv(&path).unwrap();
    assert_eq!(
        load_csv(&path, &CsvOptions::default()).unwrap().samples(),
        bundled.samples()
    );
}

#[test]
fn concat_length_identity() {
    let train = bundled_train().unwrap();
    for class in train.classes() {
        let members = train.indices_of(class);
        let sum: usize = members.iter().map(|&i| train.samples()[i].text.len()).sum();
        assert_eq!(
            concat_class_text(&train, class, b"\n").unwrap().len(),
            sum + members.len() - 1
        );
    }
}

#[test]
fn few_shot_labels_and_reproducibility() {
    let train = bundled_train().unwrap();
    let spec = FewShotSpec::new(5, 11, 3).unwrap();
    for trial in 0..3 {
        let a = few_shot_sample(&train, &spec, trial).unwrap();
        let counts = a.class_counts();
        assert!(counts.values().all(|&n| n == 5));
        assert_eq!(counts.len(), 3);
        assert_eq!(a.samples(), few_shot_sample(&train, &spec, trial).unwrap().samples());
    }
    assert_ne!(
        few_shot_sample(&train, &spec, 0).unwrap().samples(),
        few_shot_sample(&train, &spec, 1).unwrap().samples()
    );
}

/// Data drawn from the generator a dictionary was trained on compresses
/// better with the dictionary, for inputs of at least 256 bytes.
#[test]
fn dictionary_benefit_on_generator_data() {
    let backend = CompressionBackend::zstd();
    for seed in 0..10 {
        let spec = MotifCorpusSpec {
            seed,
            ..MotifCorpusSpec::default()
        };
        let mut generator = MotifGenerator::new(spec);
        let train = generator.corpus("t", 40);
        let lists = build_all_lists(&train, &SegmentPlan::new(4096, Some(2)), &backend).unwrap();
        for class in 0..3 {
            let mut doc = String::new();
            while doc.len() < 256 {
                doc.push_str(&generator.document(class));
                doc.push('\n');
            }
            let list = &lists[&MotifGenerator::class_label(class)];
            for comp in &list.compressors {
                let with = dict_compressed_size(comp, doc.as_bytes()).unwrap();
                let without = compressed_size(&backend, doc.as_bytes()).unwrap();
                assert!(with < without, "seed {seed} class {class}: {with} vs {without}");
            }
        }
    }
}

#[test]
fn score_totals_are_per_compressor_sums() {
    let train = bundled_train().unwrap();
    let test = bundled_test().unwrap();
    let lists = build_all_lists(&train, &small_plan(), &CompressionBackend::zstd()).unwrap();
    for s in test.samples().iter().take(10) {
        let scores = score_query(&lists, &s.text).unwrap();
        assert_eq!(scores.len(), 3, "every class carried");
        for score in &scores {
            let sum: u64 = lists[&score.class]
                .compressors
                .iter()
                .map(|c| dict_compressed_size(c, &s.text).unwrap() as u64)
                .sum();
            assert_eq!(score.score, sum);
        }
    }
}

#[test]
fn list_building_ignores_sample_interleaving() {
    let train = bundled_train().unwrap();
    // Group by class instead of interleaving; within-class order is kept.
    let mut grouped: Vec<LabeledText> = Vec::new();
    for class in train.classes().iter().rev() {
        grouped.extend(train.indices_of(class).into_iter().map(|i| train.samples()[i].clone()));
    }
    let grouped = Corpus::new("grouped", grouped).unwrap();
    let b = CompressionBackend::zstd();
    let a = build_all_lists(&train, &small_plan(), &b).unwrap();
    let g = build_all_lists(&grouped, &small_plan(), &b).unwrap();
    for (x, y) in a.values().zip(g.values()) {
        assert_eq!(x.class, y.class);
        let px: Vec<_> = x.compressors.iter().map(|c| c.dictionary().clone()).collect();
        let py: Vec<_> = y.compressors.iter().map(|c| c.dictionary().clone()).collect();
        assert_eq!(px, py);
    }
}

/// Class-regularity separation: the best-scoring class is the query's
/// generator class on at least 95% of 200 seeded trials.
#[test]
fn best_candidate_is_generator_class() {
    let b = CompressionBackend::zstd();
    let mut hits = 0;
    for seed in 0..20 {
        let spec = MotifCorpusSpec {
            seed: 500 + seed,
            ..MotifCorpusSpec::default()
        };
        let (train, test) = motif_split(&spec, 4);
        let lists = build_all_lists(&train, &SegmentPlan::default(), &b).unwrap();
        for s in test.samples().iter().take(10) {
            let pair = select_candidates(&score_query(&lists, &s.text).unwrap()).unwrap();
            hits += usize::from(pair.first == s.label);
        }
    }
    assert!(hits >= 190, "{hits}/200");
}

/// The reference model and zstd pick the same best class on repetitive
/// corpora. Threshold: 90% of 120 queries.
#[test]
fn reference_and_zstd_rankings_agree() {
    let plan = SegmentPlan::new(1024, Some(2));
    let mut agree = 0;
    let mut total = 0;
    for seed in 0..6 {
        let spec = MotifCorpusSpec {
            seed: 900 + seed,
            docs_per_class: 20,
            ..MotifCorpusSpec::default()
        };
        let (train, test) = motif_split(&spec, 7);
        let z = build_all_lists(&train, &plan, &CompressionBackend::zstd()).unwrap();
        let r = build_all_lists(&train, &plan, &CompressionBackend::reference_lz()).unwrap();
        for s in test.samples().iter().take(20) {
            let pz = select_candidates(&score_query(&z, &s.text).unwrap()).unwrap();
            let pr = select_candidates(&score_query(&r, &s.text).unwrap()).unwrap();
            agree += usize::from(pz.first == pr.first);
            total += 1;
        }
    }
    assert!(agree * 10 >= total * 9, "{agree}/{total}");
}

#[test]
fn reasoning_stays_inside_the_pair() {
    let train = bundled_train().unwrap();
    let test = bundled_test().unwrap();
    let lists = build_all_lists(&train, &small_plan(), &CompressionBackend::zstd()).unwrap();
    for s in test.samples() {
        let pair = select_candidates(&score_query(&lists, &s.text).unwrap()).unwrap();
        let out = centralized_reason(&train, &pair, &s.text, &Default::default()).unwrap();
        assert!(out.label == pair.first || out.label == pair.second);
        assert_eq!(out.ncd_calls, extract_gold(&train, &pair).unwrap().len());
    }
}

#[test]
fn pipeline_invariants_per_sample() {
    let train = bundled_train().unwrap();
    let test = bundled_test().unwrap();
    let config = PipelineConfig::default().with_threads(2);
    for s in test.samples().iter().take(15) {
        let full = predict_lftc(&train, &s.text, &config).unwrap();
        let cr = predict_ablation_cr(&train, &s.text, &config).unwrap();
        let (p, q) = full.candidate_pair.clone().unwrap();
        let label = full.predicted.clone().unwrap();
        assert!(label == p || label == q);
        assert_eq!(cr.predicted.unwrap(), p);
        let gold = train.samples().iter().filter(|t| t.label == p || t.label == q).count();
        assert_eq!(full.ncd_calls, gold);
    }
}

#[test]
fn accuracy_ignores_test_order() {
    let train = bundled_train().unwrap();
    let test = bundled_test().unwrap();
    let mut reversed: Vec<_> = test.samples().to_vec();
    reversed.reverse();
    let reversed = Corpus::new(test.name(), reversed).unwrap();
    let config = PipelineConfig::default().with_threads(2);
    let a = evaluate(&train, &test, &config).unwrap();
    let b = evaluate(&train, &reversed, &config).unwrap();
    assert_eq!(a.report.accuracy, b.report.accuracy);
    assert_eq!(a.report.per_class, b.report.per_class);
}

#[test]
fn reused_lists_give_identical_predictions() {
    let train = bundled_train().unwrap();
    let test = bundled_test().unwrap();
    let config = PipelineConfig::default().with_threads(1);
    let lists = build_all_lists(&train, &config.plan, &config.mcc_backend).unwrap();
    let fresh = evaluate(&train, &test, &config).unwrap();
    let reused = evaluate_with(&train, &test, &config, Some(lists)).unwrap();
    assert!(fresh
        .predictions
        .iter()
        .zip(&reused.predictions)
        .all(|(a, b)| a.same_outcome(b)));
}

#[test]
fn reports_round_trip_losslessly() {
    let train = bundled_train().unwrap();
    let test = bundled_test().unwrap();
    let eval = evaluate(&train, &test, &PipelineConfig::default()).unwrap();
    let json = eval.report.to_json().unwrap();
    assert_eq!(EvalReport::from_json(&json).unwrap(), eval.report);

    let mut spec = RunSpec::new(Command::Fewshot);
    spec.shots = Some(3);
    spec.trials = 4;
    let few = run_fewshot(&spec).unwrap();
    assert_eq!(EvalReport::from_json(&few.to_json().unwrap()).unwrap(), few);
    assert_eq!(run_fewshot(&spec).unwrap().with_timings_of(&few), few);

    let cmp = run_compare(&RunSpec::new(Command::Compare)).unwrap();
    let back: CompareReport = serde_json::from_str(&serde_json::to_string(&cmp).unwrap()).unwrap();
    assert_eq!(back, cmp);
    assert_eq!(cmp.lftc.split_checksum, cmp.baseline.split_checksum);
}

/// Timing fields aside, a rerun reproduces a report.
trait WithTimings {
    fn with_timings_of(self, other: &EvalReport) -> EvalReport;
}

impl WithTimings for EvalReport {
    fn with_timings_of(mut self, other: &EvalReport) -> EvalReport {
        self.timings = other.timings;
        self
    }
}

#[test]
fn ablations_do_not_beat_full_pipeline_on_bundled_corpus() {
    let train = bundled_train().unwrap();
    let test = bundled_test().unwrap();
    let acc = |v| {
        evaluate(&train, &test, &PipelineConfig::default().with_variant(v))
            .unwrap()
            .report
            .accuracy
    };
    let full = acc(Variant::Lftc);
    assert!(full >= 0.95);
    assert!(acc(Variant::LftcCr) <= full + 0.03);
    assert!(acc(Variant::LftcMcc) <= full + 0.03);
}

#[test]
fn headerless_tsv_with_two_text_columns() {
    let data = "x\ttitle one\tbody one\ny\ttitle two\tbody two\n";
    let options = CsvOptions {
        label_column: "0".parse().unwrap(),
        text_columns: vec!["1".parse().unwrap(), "2".parse().unwrap()],
        has_header: false,
        delimiter: b'\t',
    };
    let c = read_csv(data.as_bytes(), "tsv", &options).unwrap();
    assert_eq!(c.samples()[1].text, b"title two body two");
    let counts: BTreeMap<_, _> = c.class_counts();
    assert_eq!(counts.len(), 2);
}

mod binary {
    use std::process::Command;

    fn lftc(args: &[&str]) -> std::process::Output {
        Command::new(env!("CARGO_BIN_EXE_lftc"))
            .args(args)
            .env_remove("LFTC_THREADS")
            .output()
            .unwrap()
    }

    #[test]
    fn exit_codes() {
        let ok = lftc(&["eval", "--threads", "1"]);
        assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
        let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
        assert!(report["accuracy"].as_f64().unwrap() >= 0.95);

        assert_eq!(lftc(&["eval", "--k", "0"]).status.code(), Some(2));
        assert_eq!(lftc(&["sweep"]).status.code(), Some(2));
        assert_eq!(lftc(&["fewshot", "--shots", "1000"]).status.code(), Some(2));
        assert_eq!(
            lftc(&["eval", "--train", "/no/such", "--test", "/no/such"])
                .status
                .code(),
            Some(2)
        );

        let dir = tempfile::tempdir().unwrap();
        let junk = dir.path().join("junk.bundle");
        std::fs::write(&junk, b"not a bundle").unwrap();
        assert_eq!(
            lftc(&["eval", "--bundle", junk.to_str().unwrap()]).status.code(),
            Some(3)
        );
    }

    #[test]
    fn sweep_writes_csv_and_env_sets_threads() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let status = Command::new(env!("CARGO_BIN_EXE_lftc"))
            .args([
                "sweep",
                "--steps",
                "2048,8192",
                "--levels",
                "1,3",
                "--out",
                out.to_str().unwrap(),
            ])
            .env("LFTC_THREADS", "2")
            .status()
            .unwrap();
        assert!(status.success());
        let csv = std::fs::read_to_string(&out).unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.split(',').nth(7) == Some("2")), "{csv}");
    }

    #[test]
    fn audit_and_bundle_files() {
        let dir = tempfile::tempdir().unwrap();
        let audit = dir.path().join("audit.jsonl");
        let bundle = dir.path().join("lists.bundle");
        let out = dir.path().join("r.json");
        for _ in 0..2 {
            let o = lftc(&[
                "eval",
                "--audit",
                audit.to_str().unwrap(),
                "--bundle",
                bundle.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        assert!(bundle.exists());
        let lines = std::fs::read_to_string(&audit).unwrap();
        assert_eq!(lines.lines().count(), 60);
        let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
        assert!(first["candidate_pair"].is_array());
        assert_eq!(first["class_scores"].as_array().unwrap().len(), 3);
    }
}
