//! `nodecount`: generate data, run cross-validated classifier grids, propagate
//! classification errors into ETA error, and inspect generator overlap.
//!
//! Exit codes: 0 on success (including runs with solver warnings), 2 for
//! invalid configuration or usage, 3 for bad input data.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nodecount_core::eta::{
    load_grid, weighted_error, ErrorMatrix, PredictionDistribution, PRINTED_TOLERANCE,
};
use nodecount_core::{
    calibration_report, generate, load_csv, run, save_csv, CalibrationReport, ExperimentConfig,
    GeneratorConfig, NodeCount, RunOptions,
};

use config::{load_config, Failure};

#[derive(Parser)]
#[command(
    name = "nodecount",
    version,
    about = "Infer the number of WiFi receivers from transfer times"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic measurement campaign to CSV.
    Generate(GenerateArgs),
    /// Run the cross-validated classifier grid and write report.json plus ROC files.
    Evaluate(EvaluateArgs),
    /// Weight per-class ETA errors by the prediction distribution.
    Delta(DeltaArgs),
    /// Report how much the ETA distributions of the classes overlap.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator config (JSON, or TOML by extension); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the repetitions per configuration.
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Experiment config (JSON, or TOML by extension); the default grid when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and roc/.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the fold and subsample seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the available cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write an SVG chart next to every ROC CSV.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct DeltaArgs {
    /// 4x4 CSV of mean ETA errors (row: true N, column: predicted N); bundled table when omitted.
    #[arg(long)]
    errors: Option<PathBuf>,
    /// 4x4 CSV of error standard deviations, propagated to an sd of delta.
    #[arg(long)]
    errors_sd: Option<PathBuf>,
    /// 4x4 CSV of P[predicted | true]; bundled table when omitted.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Generator config to sample from (defaults when neither this nor --data is given).
    #[arg(long, conflicts_with = "data")]
    config: Option<PathBuf>,
    /// Existing dataset CSV to analyse instead.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Overrides the generator seed.
    #[arg(long, conflicts_with = "data")]
    seed: Option<u64>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Delta(args) => cmd_delta(args),
        Command::Calibrate(args) => cmd_calibrate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn generator_config(path: Option<&PathBuf>, seed: Option<u64>) -> Result<GeneratorConfig, Failure> {
    let mut cfg: GeneratorConfig = match path {
        Some(p) => load_config(p)?,
        None => GeneratorConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    let mut cfg = generator_config(args.config.as_ref(), args.seed)?;
    if let Some(r) = args.repetitions {
        cfg.repetitions = r;
    }
    cfg.validate().map_err(Failure::config)?;
    let dataset = generate(&cfg).map_err(Failure::from)?;
    save_csv(&dataset, &args.out).map_err(Failure::from)?;
    eprintln!("wrote {} rows to {}", dataset.len(), args.out.display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let mut cfg: ExperimentConfig = match &args.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(Failure::config)?;
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    let report = run(
        &cfg,
        &args.out,
        RunOptions {
            jobs,
            svg: args.svg,
        },
    )
    .map_err(Failure::from)?;
    for cell in &report.cells {
        for w in &cell.warnings {
            eprintln!(
                "warning: {} / {} / {}: {w}",
                cell.classifier,
                cell.features.name(),
                cell.subsample
            );
        }
        println!(
            "{:<22} {:<20} {:<14} macro F1 {:.3} ± {:.3}",
            cell.classifier,
            cell.features.name(),
            cell.subsample,
            cell.macro_f1,
            cell.macro_f1_sd
        );
    }
    eprintln!(
        "report written to {}",
        args.out.join("report.json").display()
    );
    Ok(())
}

fn cmd_delta(args: DeltaArgs) -> Result<(), Failure> {
    let errors = match &args.errors {
        Some(p) => {
            let sd = args
                .errors_sd
                .as_ref()
                .map(load_grid)
                .transpose()
                .map_err(Failure::from)?;
            ErrorMatrix::new(load_grid(p).map_err(Failure::from)?, sd).map_err(Failure::data)?
        }
        None => {
            let mut reference = ErrorMatrix::reference();
            if let Some(p) = &args.errors_sd {
                reference.sd = Some(load_grid(p).map_err(Failure::from)?);
            }
            reference
        }
    };
    let dist = match &args.dist {
        Some(p) => PredictionDistribution::from_rounded(
            load_grid(p).map_err(Failure::from)?,
            PRINTED_TOLERANCE,
        )
        .map_err(Failure::data)?,
        None => PredictionDistribution::reference(),
    };
    let result = weighted_error(&errors, &dist);
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&result).map_err(Failure::internal)?
        );
        return Ok(());
    }
    println!("δ = {{{}}}", join(&result.delta, 2));
    if let Some(sd) = result.delta_sd {
        println!("sd(δ) = {{{}}}", join(&sd, 2));
    }
    Ok(())
}

fn join(values: &[f64], decimals: usize) -> String {
    values
        .iter()
        .map(|v| format!("{v:.decimals$}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), Failure> {
    let dataset = match &args.data {
        Some(p) => load_csv(p).map_err(Failure::from)?,
        None => {
            let cfg = generator_config(args.config.as_ref(), args.seed)?;
            cfg.validate().map_err(Failure::config)?;
            generate(&cfg).map_err(Failure::from)?
        }
    };
    let report = calibration_report(&dataset).map_err(Failure::data)?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(Failure::internal)?
        );
    } else {
        print_calibration(&report);
    }
    Ok(())
}

fn print_calibration(report: &CalibrationReport) {
    println!("pair   pooled   within-cell");
    for p in &report.pairs {
        println!("{}-{}    {:.4}   {:.4}", p.a, p.b, p.pooled, p.within_cell);
    }
    println!("confusability per class:");
    for n in NodeCount::ALL {
        println!("  N={n}  {:.4}", report.confusability[n.index()]);
    }
    println!(
        "most separable N={}, least separable N={}",
        report.most_separable(),
        report.least_separable()
    );
}
