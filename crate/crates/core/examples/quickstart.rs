//! Classify the bundled synthetic corpus with every pipeline variant.
//!
//!     cargo run --release --example quickstart

use lftc::synthetic::{bundled_test, bundled_train};
use lftc::{evaluate, PipelineConfig, Variant};

fn main() -> lftc::Result<()> {
    let train = bundled_train()?;
    let test = bundled_test()?;
    println!(
        "{} train / {} test, classes {:?}",
        train.len(),
        test.len(),
        train.classes()
    );

    for variant in Variant::ALL {
        let config = PipelineConfig::default().with_variant(variant);
        let eval = evaluate(&train, &test, &config)?;
        let r = &eval.report;
        println!(
            "{:<13} accuracy {:.3}  ncd calls {:>6}  total {:.3}s",
            variant.to_string(),
            r.accuracy,
            r.ncd_calls,
            r.timings.total_seconds
        );
    }

    // One query by hand.
    let config = PipelineConfig::default();
    let classifier = lftc::Classifier::prepare(&train, &config)?;
    let sample = &test.samples()[0];
    let p = classifier.predict(0, &sample.text, &sample.label);
    println!(
        "\nsample 0: truth {} predicted {:?} via pair {:?}",
        p.truth, p.predicted, p.candidate_pair
    );
    Ok(())
}
