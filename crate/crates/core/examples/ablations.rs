//! Each stage's contribution: the full pipeline against its two ablations
//! and the NCD baseline, averaged over freshly generated motif corpora.
//!
//!     cargo run --release --example ablations [-- <seeds>]

use lftc::synthetic::{motif_split, MotifCorpusSpec};
use lftc::{evaluate, PipelineConfig, Variant};

fn main() -> lftc::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let mut mean = [0.0; 4];
    for seed in 0..seeds {
        let spec = MotifCorpusSpec {
            seed,
            ..MotifCorpusSpec::default()
        };
        let (train, test) = motif_split(&spec, 67);
        let mut row = String::new();
        for (i, v) in Variant::ALL.into_iter().enumerate() {
            let acc = evaluate(&train, &test, &PipelineConfig::default().with_variant(v))?
                .report
                .accuracy;
            mean[i] += acc / seeds as f64;
            row += &format!("  {acc:.3}");
        }
        println!("seed {seed}:{row}");
    }
    for (v, m) in Variant::ALL.iter().zip(mean) {
        println!("{:<13} {m:.4}", v.to_string());
    }
    Ok(())
}
