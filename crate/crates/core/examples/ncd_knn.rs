//! Normalized compression distance and the nearest-neighbour vote.
//!
//!     cargo run --release --example ncd_knn

use lftc::compression::{ncd, CompressionBackend};
use lftc::cr::{centralized_reason, extract_gold, knn_vote, ncd_distances, KnnConfig};
use lftc::mcc::CandidatePair;
use lftc::synthetic::{bundled_test, bundled_train};

fn main() -> lftc::Result<()> {
    let gz = CompressionBackend::deflate();
    let a = b"compressors measure shared structure between two strings";
    let b = b"compressors measure shared structure between two texts";
    let c = b"an entirely unrelated sentence about boats and weather";
    println!("ncd(a, b) = {:.3}", ncd(&gz, a, b)?);
    println!("ncd(a, c) = {:.3}", ncd(&gz, a, c)?);

    let train = bundled_train()?;
    let test = bundled_test()?;
    let query = &test.samples()[1];
    let pair = CandidatePair {
        first: "class1".into(),
        second: "class2".into(),
        scores: Vec::new(),
    };
    let gold = extract_gold(&train, &pair)?;
    let config = KnnConfig::default();
    let neighbours = ncd_distances(&query.text, &gold, &config)?;
    for k in [1, 3, 5] {
        let vote = knn_vote(&neighbours, k)?;
        println!("k={k}: {} (tie: {})", vote.label, vote.tie);
    }
    let out = centralized_reason(&train, &pair, &query.text, &config)?;
    println!(
        "truth {}, decided {} after {} NCD evaluations over {} gold samples",
        query.label,
        out.label,
        out.ncd_calls,
        gold.len()
    );
    Ok(())
}
