//! The in-process reference compressor: greedy LZ parse priced by entropy.
//!
//!     cargo run --example reference_lz

use lftc::compression::reference::{ref_compress_size, ref_entropy_coded_size, ref_longest_match, ref_tokenize};
use lftc::compression::{compressed_size, CompressionBackend};

fn main() -> lftc::Result<()> {
    let text = b"the cat sat on the mat; the cat sat on the hat";
    let (len, off) = ref_longest_match(b"", text, 24)?;
    println!("longest match at 24: {len} bytes, {off} back");

    let tokens = ref_tokenize(b"", text, 1 << 15)?;
    println!("{} tokens for {} bytes: {:?}", tokens.len(), text.len(), &tokens[..6]);
    println!("entropy-coded size: {:.1} bits", ref_entropy_coded_size(&tokens)?);

    // A dictionary that already holds the phrase makes the text cheaper.
    let dict = b"the cat sat on the mat";
    let with = ref_compress_size(dict, text, 1 << 15)?;
    let without = ref_compress_size(b"", text, 1 << 15)?;
    println!("size without dictionary {without} bytes, with {with} bytes");

    let b = CompressionBackend::reference_lz();
    println!("as a backend: {} bytes", compressed_size(&b, text)?);
    Ok(())
}
