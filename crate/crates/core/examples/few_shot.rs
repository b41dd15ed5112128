//! Repeated few-shot trials with a 95% interval over trials.
//!
//!     cargo run --release --example few_shot [-- <shots> <trials>]

use lftc::cli::{run_fewshot, Command, RunSpec};

fn main() -> lftc::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let shots = args.next().and_then(|r| r.ok()).unwrap_or(5);
    let trials = args.next().and_then(|r| r.ok()).unwrap_or(10);

    let mut spec = RunSpec::new(Command::Fewshot);
    spec.shots = Some(shots);
    spec.trials = trials;
    let report = run_fewshot(&spec)?;
    for (i, acc) in report.trials.iter().flatten().enumerate() {
        println!("trial {i}: {acc:.3}");
    }
    match report.ci95 {
        Some(ci) => println!("{shots}-shot accuracy {:.3} ± {:.3}", ci.mean, ci.half_width),
        None => println!("{shots}-shot accuracy {:.3}", report.accuracy),
    }
    Ok(())
}
