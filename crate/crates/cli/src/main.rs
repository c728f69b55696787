//! `gaitbow` command-line driver.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gaitbow::{Error, ErrorKind};

#[derive(Parser, Debug)]
#[command(
    name = "gaitbow",
    version,
    about = "Gait recognition with bag-of-words accelerometer features"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Overrides layered on top of the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct GlobalArgs {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Codebook size.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// bow, stat or both.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Evaluate only the last fold.
    #[arg(long, global = true)]
    pub single_split: bool,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Corpus root `<data>/<subject>/<session>.csv`.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic cohort to the output directory.
    Synth {
        #[arg(long, default_value_t = 10)]
        subjects: usize,
        #[arg(long, default_value_t = 120.0)]
        seconds: f64,
    },
    /// Extract window features from the corpus into features.csv.
    Features,
    /// Scan WCSS over a range of k into elbow.csv.
    Elbow {
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        /// Defaults to `<out>/features.csv`.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Fit the codebook into codebook.json.
    Vocab {
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Encode every subject's windows as segment histograms.
    Encode {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        codebook: Option<PathBuf>,
    },
    /// Cross-validate the classifiers on the corpus.
    Eval,
    /// Accuracy gap between a bow and a statistical report.
    Compare {
        #[arg(long)]
        bow: Option<PathBuf>,
        #[arg(long)]
        stat: Option<PathBuf>,
    },
    /// Render report.txt and elbow.svg from existing outputs.
    Report,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Data => 2,
        ErrorKind::Config => 3,
        ErrorKind::Internal => 1,
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = one_line(&e.to_string());
            eprintln!("error kind=config tag=usage message={msg:?}");
            return ExitCode::from(exit_code(ErrorKind::Config));
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = e.kind();
            let name = match kind {
                ErrorKind::Data => "data",
                ErrorKind::Config => "config",
                ErrorKind::Internal => "internal",
            };
            eprintln!(
                "error kind={name} tag={} message={:?}",
                e.tag(),
                one_line(&e.to_string())
            );
            ExitCode::from(exit_code(kind))
        }
    }
}

fn run(cli: Cli) -> Result<String, Error> {
    let cfg = commands::load_config(&cli.global)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if cfg.jobs > 0 {
        pool = pool.num_threads(cfg.jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synth { subjects, seconds } => commands::synth(&cfg, subjects, seconds),
        Command::Features => commands::features(&cfg),
        Command::Elbow {
            k_min,
            k_max,
            features,
        } => commands::elbow(&cfg, k_min, k_max, features),
        Command::Vocab { features } => commands::vocab(&cfg, features),
        Command::Encode { features, codebook } => commands::encode(&cfg, features, codebook),
        Command::Eval => commands::eval(&cfg),
        Command::Compare { bow, stat } => commands::compare(&cfg, bow, stat),
        Command::Report => commands::report(&cfg),
    })
}
