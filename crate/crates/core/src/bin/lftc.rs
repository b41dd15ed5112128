use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lftc::cli::{run_compare, run_eval, run_fewshot, run_sweep, Command, DataSource, RunSpec, SweepGrid};
use lftc::compression::{BackendKind, CompressionBackend, DictionaryMode};
use lftc::corpus::{Column, CsvOptions};
use lftc::mcc::Aggregation;
use lftc::{PipelineConfig, Variant};

/// Training-free text classification with compressor lists.
#[derive(Parser)]
#[command(name = "lftc", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one variant on a train/test split.
    Eval(Common),
    /// Repeated seeded few-shot draws from the training split.
    Fewshot(Common),
    /// One evaluation per grid point; CSV summary to --out.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Step sizes to try (comma separated).
        #[arg(long, value_delimiter = ',')]
        steps: Vec<usize>,
        /// List-backend levels to try.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        levels: Vec<i32>,
        /// Compressor caps to try; `all` for no cap.
        #[arg(long, value_delimiter = ',', value_parser = parse_cap)]
        caps: Vec<Cap>,
    },
    /// Full pipeline against the NCD baseline, same split and threads.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Training CSV; omit both --train and --test for the bundled corpus.
    #[arg(long, requires = "test")]
    train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    test: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: Column,
    /// Text column(s); several are joined with a space.
    #[arg(long, value_delimiter = ',', default_value = "text")]
    text_column: Vec<Column>,
    #[arg(long)]
    no_header: bool,
    #[arg(long, default_value_t = ',')]
    delimiter: char,

    #[arg(long, default_value = "lftc")]
    variant: Variant,
    #[arg(long, default_value_t = lftc::mcc::DEFAULT_STEP_SIZE)]
    step_size: usize,
    /// Compressors kept per class; `all` for no cap.
    #[arg(long, default_value = "16", value_parser = parse_cap)]
    max_compressors: Cap,
    #[arg(long, default_value = "trained")]
    dictionary_mode: DictionaryMode,
    #[arg(long, default_value = "mean")]
    aggregation: Aggregation,
    /// List backend (zstd or reference-lz).
    #[arg(long, default_value = "zstd")]
    backend: BackendKind,
    /// List backend level; backend default when omitted.
    #[arg(long, allow_hyphen_values = true)]
    level: Option<i32>,
    #[arg(long)]
    no_adaptive_level: bool,
    /// NCD backend for the reasoning stage and the baseline.
    #[arg(long, default_value = "deflate")]
    ncd_backend: BackendKind,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, env = "LFTC_THREADS")]
    threads: Option<usize>,
    #[arg(long, default_value_t = lftc::cli::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long, default_value_t = lftc::cli::DEFAULT_TRIALS)]
    trials: usize,

    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-prediction JSON lines.
    #[arg(long)]
    audit: Option<PathBuf>,
    /// Compressor-list bundle, reused when present and written otherwise.
    #[arg(long)]
    bundle: Option<PathBuf>,
}

/// Compressor cap; `None` keeps every segment.
#[derive(Clone, Copy)]
struct Cap(Option<usize>);

fn parse_cap(s: &str) -> Result<Cap, String> {
    match s {
        "all" | "none" => Ok(Cap(None)),
        _ => s.parse().map(|c| Cap(Some(c))).map_err(|e| format!("{e}")),
    }
}

impl Common {
    fn spec(self, command: Command) -> Result<RunSpec, String> {
        let mut config = PipelineConfig::default().with_variant(self.variant);
        config.plan.step_size = self.step_size;
        config.plan.max_compressors = self.max_compressors.0;
        config.plan.dictionary_mode = self.dictionary_mode;
        config.plan.aggregation = self.aggregation;
        config.mcc_backend = CompressionBackend::new(self.backend).with_adaptive_level(!self.no_adaptive_level);
        if let Some(level) = self.level {
            config.mcc_backend.level = level;
        }
        config.knn.k = self.k;
        config.knn.backend = CompressionBackend::new(self.ncd_backend);
        if let Some(t) = self.threads {
            config.threads = t;
        }
        let delimiter = u8::try_from(self.delimiter).map_err(|_| "delimiter must be ASCII".to_owned())?;
        let data = match (self.train, self.test) {
            (Some(train), Some(test)) => DataSource::Files {
                train,
                test,
                csv: CsvOptions {
                    label_column: self.label_column,
                    text_columns: self.text_column,
                    has_header: !self.no_header,
                    delimiter,
                },
            },
            _ => DataSource::Bundled,
        };
        let mut spec = RunSpec::new(command);
        spec.data = data;
        spec.config = config;
        spec.seed = self.seed;
        spec.shots = self.shots;
        spec.trials = self.trials;
        spec.out = self.out;
        spec.audit = self.audit;
        spec.bundle = self.bundle;
        Ok(spec)
    }
}

fn run(cli: Cli) -> lftc::Result<String> {
    let spec = |common: Common, command| common.spec(command).map_err(lftc::Error::Validation);
    match cli.command {
        Cmd::Eval(c) => {
            let s = spec(c, Command::Eval)?;
            let r = run_eval(&s)?;
            Ok(if s.out.is_some() { summary(&r) } else { r.to_json()? })
        }
        Cmd::Fewshot(c) => {
            let s = spec(c, Command::Fewshot)?;
            let r = run_fewshot(&s)?;
            Ok(if s.out.is_some() { summary(&r) } else { r.to_json()? })
        }
        Cmd::Compare(c) => {
            let s = spec(c, Command::Compare)?;
            let r = run_compare(&s)?;
            Ok(if s.out.is_some() {
                format!(
                    "lftc {:.4} ({:.3}s)  baseline-ncd {:.4} ({:.3}s)  speed ratio {:.2}",
                    r.lftc.accuracy,
                    r.lftc.timings.total_seconds,
                    r.baseline.accuracy,
                    r.baseline.timings.total_seconds,
                    r.speed_ratio
                )
            } else {
                serde_json::to_string_pretty(&r)?
            })
        }
        Cmd::Sweep {
            common,
            steps,
            levels,
            caps,
        } => {
            let mut s = spec(common, Command::Sweep)?;
            s.grid = SweepGrid {
                step_sizes: steps,
                levels,
                max_compressors: caps.into_iter().map(|c| c.0).collect(),
            };
            let reports = run_sweep(&s)?;
            Ok(lftc::report::csv_summary(&reports).trim_end().to_owned())
        }
    }
}

fn summary(r: &lftc::report::EvalReport) -> String {
    let ci = r.ci95.map(|c| format!(" ± {:.4}", c.half_width)).unwrap_or_default();
    format!(
        "{} {} accuracy {:.4}{ci} on {} samples in {:.3}s",
        r.dataset, r.variant, r.accuracy, r.n_test, r.timings.total_seconds
    )
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lftc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
