//! Build per-class compressor lists and score one query against them.
//!
//!     cargo run --release --example compressor_lists

use lftc::compression::CompressionBackend;
use lftc::mcc::{build_all_lists, score_query, select_candidates, SegmentPlan};
use lftc::synthetic::{bundled_test, bundled_train};

fn main() -> lftc::Result<()> {
    let train = bundled_train()?;
    let test = bundled_test()?;
    let query = &test.samples()[4];

    // Small segments so every class gets several dictionaries.
    let plan = SegmentPlan::new(2048, Some(4));
    let lists = build_all_lists(&train, &plan, &CompressionBackend::zstd())?;
    for list in lists.values() {
        println!(
            "{}: {} bytes of text, {} segments, kept {}",
            list.class, list.text_len, list.total_segments, list.segment_count
        );
        for span in list.spans() {
            let how = if span.raw_fallback { "raw" } else { "trained" };
            println!(
                "    segment {:>2} [{:>5}, {:>5}) {how}",
                span.segment_index, span.start, span.end
            );
        }
    }

    let scores = score_query(&lists, &query.text)?;
    println!("\nquery labelled {}:", query.label);
    for s in &scores {
        println!("    {:<8} total {:>5}  mean {:>7.1}", s.class, s.score, s.mean());
    }
    let pair = select_candidates(&scores)?;
    println!("candidate pair: {} / {}", pair.first, pair.second);
    Ok(())
}
