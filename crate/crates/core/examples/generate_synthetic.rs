//! Regenerates the bundled synthetic corpus under `data/`.
//!
//!     cargo run --example generate_synthetic [-- <out-dir>]

use std::path::PathBuf;

use lftc::synthetic::{motif_split, MotifCorpusSpec, BUNDLED_TEST_PER_CLASS};

fn main() -> lftc::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    let (train, test) = motif_split(&MotifCorpusSpec::default(), BUNDLED_TEST_PER_CLASS);
    train.write_csv(dir.join("synthetic_train.csv"))?;
    test.write_csv(dir.join("synthetic_test.csv"))?;
    println!(
        "wrote {} train / {} test documents to {}",
        train.len(),
        test.len(),
        dir.display()
    );
    Ok(())
}
