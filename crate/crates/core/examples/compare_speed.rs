//! Full pipeline against the NCD baseline on the same split and thread count.
//!
//!     cargo run --release --example compare_speed [-- <train.csv> <test.csv>]

use lftc::cli::{run_compare, Command, DataSource, RunSpec};
use lftc::corpus::CsvOptions;

fn main() -> lftc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut spec = RunSpec::new(Command::Compare);
    if let [train, test] = &args[..] {
        spec.data = DataSource::Files {
            train: train.into(),
            test: test.into(),
            csv: CsvOptions::default(),
        };
    }
    let r = run_compare(&spec)?;
    for (name, e) in [("lftc", &r.lftc), ("baseline-ncd", &r.baseline)] {
        let t = &e.timings;
        println!(
            "{name:<13} acc {:.3}  ncd calls {:>7}  lists {:.3}s  cache {:.3}s  mcc {:.3}s  cr {:.3}s  total {:.3}s",
            e.accuracy,
            e.ncd_calls,
            t.list_build_seconds,
            t.cache_build_seconds,
            t.mcc_seconds,
            t.cr_seconds,
            t.total_seconds
        );
    }
    println!("speed ratio (baseline / lftc): {:.2}", r.speed_ratio);
    println!("split checksum {}", &r.split_checksum[..16]);
    Ok(())
}
