//! Persist compressor lists and reuse them for a second evaluation.
//!
//!     cargo run --release --example bundle_roundtrip

use lftc::bundle::{load_bundle, save_bundle, BundleHeader};
use lftc::classifier::evaluate_with;
use lftc::mcc::build_all_lists;
use lftc::synthetic::{bundled_test, bundled_train};
use lftc::PipelineConfig;

fn main() -> lftc::Result<()> {
    let train = bundled_train()?;
    let test = bundled_test()?;
    let config = PipelineConfig::default();
    let plan = config.effective_plan();

    let lists = build_all_lists(&train, &plan, &config.mcc_backend)?;
    let path = std::env::temp_dir().join("lftc-example.bundle");
    save_bundle(&path, &BundleHeader::new(&config.mcc_backend, &plan, &train), &lists)?;
    println!(
        "wrote {} ({} bytes)",
        path.display(),
        std::fs::metadata(&path).map_or(0, |m| m.len())
    );

    let (header, loaded) = load_bundle(&path)?;
    header.check_matches(&config.mcc_backend, &plan, &train)?;
    let fresh = lftc::evaluate(&train, &test, &config)?;
    let reused = evaluate_with(&train, &test, &config, Some(loaded))?;
    assert!(fresh
        .predictions
        .iter()
        .zip(&reused.predictions)
        .all(|(a, b)| a.same_outcome(b)));
    println!(
        "identical predictions; list build {:.3}s fresh vs {:.3}s from bundle",
        fresh.report.timings.list_build_seconds, reused.report.timings.list_build_seconds
    );
    std::fs::remove_file(&path).ok();
    Ok(())
}
