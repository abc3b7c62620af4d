//! `xltime`: train and evaluate cross-lingual temporal expression
//! taggers from declarative run configurations.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use xltime_cli::{
    cmd_build, cmd_convert, cmd_evaluate, cmd_report, cmd_train, load_input, CliError,
    InputFormat, ModeChoice, Overrides,
};

#[derive(Parser)]
#[command(
    name = "xltime",
    version,
    about = "Cross-lingual temporal expression extraction pipeline",
    propagate_version = true
)]
struct Cli {
    /// Run configuration or manifest file (JSON).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Forbid network use; translations must come from the cache.
    #[arg(long, global = true)]
    offline: bool,

    /// Override the base training seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Override the output directory (convert: required output).
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a corpus directory to CoNLL files plus statistics.
    Convert {
        /// Directory of input documents.
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        /// Input format.
        #[arg(long, value_enum)]
        format: InputFormat,
        /// Language code recorded on the converted sentences.
        #[arg(long, value_name = "CODE")]
        language: String,
    },
    /// Build the task datasets: one primary and one secondary per source
    /// language.
    Build,
    /// Train seeded runs on the built tasks; write checkpoints, logs,
    /// reports, and the manifest.
    Train,
    /// Score checkpoints on the target test set.
    Evaluate {
        /// Checkpoint directories (default: the manifest's recorded runs).
        #[arg(long, value_name = "DIR")]
        checkpoint: Vec<PathBuf>,
        /// Which match modes to score.
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeChoice,
    },
    /// Print the scores recorded in a run manifest.
    Report {
        /// Emit JSON instead of a text table.
        #[arg(long)]
        json: bool,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        offline: cli.offline,
        seed: cli.seed,
        output: cli.output,
    };
    let config_path = |c: &Option<PathBuf>| -> Result<PathBuf, CliError> {
        c.clone()
            .ok_or_else(|| CliError::Usage("--config <FILE> is required".to_string()))
    };

    match cli.command {
        Command::Convert {
            input,
            format,
            language,
        } => {
            let output = overrides.output.ok_or_else(|| {
                CliError::Usage("convert needs --output <DIR> for the CoNLL files".to_string())
            })?;
            let outcome = cmd_convert(&input, format, &language, &output)?;
            let stats = &outcome.stats;
            println!(
                "converted {} files: {} documents, {} sentences, {} tokens → {}",
                outcome.files,
                stats.documents,
                stats.sequences,
                stats.tokens,
                output.display()
            );
            println!(
                "expressions {} (dates {}, times {}, durations {}, sets {})",
                stats.expressions, stats.dates, stats.times, stats.durations, stats.sets
            );
        }
        Command::Build => {
            let loaded = load_input(&config_path(&cli.config)?, &overrides)?;
            let outcome = cmd_build(&loaded.config)?;
            for (tag, path) in &outcome.task_files {
                println!("{tag} → {}", path.display());
            }
            if outcome.skipped > 0 {
                println!("skipped {} untranslatable sentences", outcome.skipped);
            }
            println!("manifest: {}", outcome.manifest_path.display());
        }
        Command::Train => {
            let loaded = load_input(&config_path(&cli.config)?, &overrides)?;
            let summary = cmd_train(&loaded)?;
            for (record, epoch) in summary.records.iter().zip(&summary.best_epochs) {
                println!(
                    "seed {}: without-type F1 {:.4}, with-type F1 {:.4} (best epoch {})",
                    record.seed, record.without_type.f1, record.with_type.f1, epoch
                );
            }
            if let (Some(without), Some(with)) =
                (&summary.mean_without_type, &summary.mean_with_type)
            {
                println!(
                    "mean over {} runs: without-type F1 {:.4}, with-type F1 {:.4}",
                    without.runs, without.f1, with.f1
                );
            }
            if summary.reproduced == Some(true) {
                println!("reproduced the recorded scores exactly");
            }
            println!("manifest: {}", summary.manifest_path.display());
        }
        Command::Evaluate { checkpoint, mode } => {
            let loaded = load_input(&config_path(&cli.config)?, &overrides)?;
            let outcome = cmd_evaluate(&loaded, &checkpoint, mode)?;
            for (path, reports) in &outcome.per_checkpoint {
                println!("checkpoint {}", path.display());
                for report in reports {
                    print!("{}", report.text_table());
                }
            }
            for mean in &outcome.means {
                println!(
                    "mean ({} runs, {}): F1 {:.4}, precision {:.4}, recall {:.4}",
                    mean.runs,
                    mean.mode.as_str(),
                    mean.f1,
                    mean.precision,
                    mean.recall
                );
            }
            println!("report: {}", outcome.report_path.display());
        }
        Command::Report { json } => {
            let loaded = load_input(&config_path(&cli.config)?, &overrides)?;
            print!("{}", cmd_report(&loaded, json)?);
        }
    }
    Ok(())
}
