use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use deliverytime_core::models::Family;
use deliverytime_runner::config::{load_config, ExperimentConfig};
use deliverytime_runner::error::{validation, Result};
use deliverytime_runner::experiment::{params_summary, run_ablation, run_compare, run_experiment};
use deliverytime_runner::predict::run_predict;
use deliverytime_runner::report::{render_compare, write_ablation, write_experiment};
use deliverytime_runner::summarize::run_summarize;
use deliverytime_runner::synth::{run_synth, SynthMode};

#[derive(Parser)]
#[command(
    name = "deliverytime",
    about = "Delivery-time model experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment: tune every family, rank on the hold-out.
    Train {
        /// Experiment config (JSON); missing keys take their defaults.
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-tune one family with each feature group removed in turn.
    Ablate {
        config: PathBuf,
        /// Model family to ablate.
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired t-test between two families on the shared hold-out.
    Compare {
        config: PathBuf,
        /// First family.
        #[arg(long)]
        a: String,
        /// Second family.
        #[arg(long)]
        b: String,
    },
    /// Score a CSV (training schema minus the target) with a saved model.
    Predict {
        /// model.<family>.json from a training run.
        #[arg(long)]
        model: PathBuf,
        /// encodings.json from the same run.
        #[arg(long)]
        encodings: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Profile a raw dataset: cleaning tallies, category tables, correlations.
    Summarize { csv: PathBuf },
    /// Generate a synthetic dataset in the raw CSV schema.
    Synth {
        #[arg(long)]
        rows: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        /// realistic | traffic_only
        #[arg(long, default_value = "realistic")]
        mode: String,
    },
}

fn parse_family(name: &str) -> Result<Family> {
    Family::ALL
        .iter()
        .copied()
        .find(|f| f.name() == name)
        .ok_or_else(|| {
            let known: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
            validation(format!(
                "unknown model family {name:?}; expected one of {}",
                known.join(", ")
            ))
        })
}

fn load(config: &PathBuf, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut config = load_config(config)?;
    if let Some(dir) = out {
        config.output_dir = dir;
    }
    Ok(config)
}

fn cmd_train(config_path: &PathBuf, out: Option<PathBuf>) -> Result<()> {
    let config = load(config_path, out)?;
    let run = run_experiment(&config)?;
    let paths = write_experiment(
        &config.output_dir,
        &run.report,
        &run.models,
        &run.data.encodings,
        &run.data.parse_rejects,
    )?;

    println!(
        "trained {} families on {} rows ({} train / {} hold-out)",
        run.report.leaderboard.len(),
        run.report.rows_used,
        run.report.n_train,
        run.report.n_holdout,
    );
    println!(
        "\n{:<14} {:>10} {:>8} {:>12} {:>8}  best params",
        "model", "mse", "r2", "cv_mean_mse", "fit_s"
    );
    for row in &run.report.leaderboard {
        println!(
            "{:<14} {:>10.4} {:>8.4} {:>12.4} {:>8.2}  {}",
            row.family.name(),
            row.holdout.mse,
            row.holdout.r2,
            row.cv_mean_mse,
            row.fit_seconds,
            params_summary(&row.best_params),
        );
    }
    println!(
        "\nwrote {} files to {}",
        paths.len(),
        config.output_dir.display()
    );
    Ok(())
}

fn cmd_ablate(config_path: &PathBuf, model: &str, out: Option<PathBuf>) -> Result<()> {
    let family = parse_family(model)?;
    let config = load(config_path, out)?;
    let report = run_ablation(&config, family)?;
    let path = write_ablation(&config.output_dir, &report)?;

    println!(
        "{} baseline: mse {:.4}, r2 {:.4}",
        family.name(),
        report.baseline.mse,
        report.baseline.r2
    );
    println!(
        "\n{:<14} {:>8} {:>10} {:>8} {:>10} {:>12}",
        "dropped group", "cols", "mse", "r2", "delta_r2", "pct_delta_mse"
    );
    for variant in &report.groups {
        println!(
            "{:<14} {:>8} {:>10.4} {:>8.4} {:>+10.4} {:>+12.2}",
            variant.group,
            variant.dropped_columns,
            variant.metrics.mse,
            variant.metrics.r2,
            variant.delta_r2,
            variant.pct_delta_mse,
        );
    }
    println!("\nwrote {}", path.display());
    Ok(())
}

fn cmd_compare(config_path: &PathBuf, a: &str, b: &str) -> Result<()> {
    let family_a = parse_family(a)?;
    let family_b = parse_family(b)?;
    let config = load(config_path, None)?;
    let report = run_compare(&config, family_a, family_b)?;
    print!("{}", render_compare(&report)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Train { config, out } => cmd_train(config, out.clone()),
        Command::Ablate { config, model, out } => cmd_ablate(config, model, out.clone()),
        Command::Compare { config, a, b } => cmd_compare(config, a, b),
        Command::Predict {
            model,
            encodings,
            input,
            output,
        } => {
            let outcome = run_predict(model, encodings, input, output)?;
            println!(
                "scored {} of {} rows ({} rejected); wrote {} and {}",
                outcome.predicted_rows,
                outcome.total_rows,
                outcome.rejected_rows,
                outcome.output.display(),
                outcome.rejects_path.display(),
            );
            Ok(())
        }
        Command::Summarize { csv } => {
            print!("{}", run_summarize(csv)?);
            Ok(())
        }
        Command::Synth {
            rows,
            seed,
            output,
            mode,
        } => {
            let mode = SynthMode::parse(mode)?;
            run_synth(*rows, *seed, mode, output)?;
            println!("wrote {} synthetic rows to {}", rows, output.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
