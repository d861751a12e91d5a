//! Command-line front end for the psychometric evaluation engine.
//!
//! Every subcommand emits a versioned report document; `--format` picks the
//! stdout rendering, while `--out-dir` additionally persists the JSON and
//! text forms (plus scree plot data when a factor analysis ran). Exit codes:
//! 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod commands;
mod config;
mod render;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};

use commands::{exit_code, load_input, run_report, small_sample_advisory, LoadedData};
use config::{Config, UsageError};
use report::EvaluationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "psychometrics",
    version,
    about = "Psychometric test evaluation: item analysis, factor structure, \
             standard scores, reliability, validity, and fairness",
    after_help = "Configuration file keys can be overridden through \
                  environment variables named PSYCHOMETRICS_<SECTION>_<KEY>, \
                  for example PSYCHOMETRICS_EFA_ROTATION=varimax."
)]
struct Cli {
    /// Configuration file (TOML); defaults apply when omitted
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Primary response data (CSV with a participant_id column)
    #[arg(long, global = true, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Second administration or parallel form, aligned by participant id
    #[arg(long, global = true, value_name = "FILE")]
    input2: Option<PathBuf>,

    /// Directory for report artifacts; created when missing
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Override the configured random seed (factor analysis and simulation)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Stdout rendering of the report
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Facility, variance, and discrimination for every item
    ItemAnalysis,
    /// Factor retention advice, extraction, and rotation
    Efa,
    /// z, T, stanine, and sten scores against a norm reference
    Standardize,
    /// Internal consistency, stability, and rater agreement
    Reliability,
    /// Criterion and construct validity coefficients
    Validity,
    /// Differential item functioning across groups
    Dif,
    /// Generate synthetic datasets from a seeded model
    Simulate,
    /// Full pipeline: items, factors, standardization, reliability,
    /// validity, fairness
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ItemAnalysis => "item-analysis",
            Command::Efa => "efa",
            Command::Standardize => "standardize",
            Command::Reliability => "reliability",
            Command::Validity => "validity",
            Command::Dif => "dif",
            Command::Simulate => "simulate",
            Command::Report => "report",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
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
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.efa.seed = seed;
        cfg.simulate.seed = seed;
    }

    let require_input = || -> Result<&Path> {
        cli.input
            .as_deref()
            .ok_or_else(|| UsageError("--input is required for this command".to_string()).into())
    };

    let mut extra_files: Vec<(String, String)> = Vec::new();
    let report = match &cli.command {
        Command::ItemAnalysis => {
            let data = load_input(require_input()?, &cfg)?;
            let mut r = new_report(&cli.command, &cfg, &data);
            r.item_analysis = Some(commands::run_item_analysis(&data.scored, &cfg)?);
            r
        }
        Command::Efa => {
            let data = load_input(require_input()?, &cfg)?;
            let mut r = new_report(&cli.command, &cfg, &data);
            r.efa = Some(commands::run_efa(&data.scored, &cfg, &mut r.advisories)?);
            r
        }
        Command::Standardize => {
            let data = load_input(require_input()?, &cfg)?;
            let mut r = new_report(&cli.command, &cfg, &data);
            r.standardization = Some(commands::run_standardize(&data.scored, &cfg)?);
            r
        }
        Command::Reliability => {
            if let Some(kind) = cfg.reliability.interrater {
                let mut r = EvaluationReport::new(cli.command.name(), cfg.clone());
                r.reliability = Some(commands::run_interrater(require_input()?, kind)?);
                r
            } else {
                let data = load_input(require_input()?, &cfg)?;
                let retest = load_second(&cli, &cfg)?;
                let mut r = new_report(&cli.command, &cfg, &data);
                r.reliability = Some(commands::run_reliability(
                    &data.scored,
                    retest.as_ref().map(|d| &d.scored),
                    &cfg,
                )?);
                r
            }
        }
        Command::Validity => {
            let data = load_input(require_input()?, &cfg)?;
            let mut r = new_report(&cli.command, &cfg, &data);
            r.validity = commands::run_validity(&data.scored, &data.matrix, &cfg)?;
            if r.validity.is_none() {
                return Err(UsageError(
                    "no validity analysis configured: set validity.predictive_column, \
                     validity.concurrent_column, or validity.convergent_column with \
                     validity.discriminant_column"
                        .to_string(),
                )
                .into());
            }
            r
        }
        Command::Dif => {
            let data = load_input(require_input()?, &cfg)?;
            let mut r = new_report(&cli.command, &cfg, &data);
            r.fairness = Some(commands::run_dif(&data.scored, &cfg, &mut r.advisories)?);
            r
        }
        Command::Simulate => {
            if cli.out_dir.is_none() {
                return Err(UsageError(
                    "--out-dir is required for simulate (data files are written there)".to_string(),
                )
                .into());
            }
            let out = commands::run_simulate(&cfg)?;
            extra_files = out.files;
            let mut r = EvaluationReport::new(cli.command.name(), cfg.clone());
            r.simulation = Some(out.section);
            r
        }
        Command::Report => {
            let data = load_input(require_input()?, &cfg)?;
            let retest = load_second(&cli, &cfg)?;
            run_report(&data, retest.as_ref().map(|d| &d.scored), &cfg)?
        }
    };

    if let Some(dir) = &cli.out_dir {
        write_artifacts(dir, &report, &extra_files)?;
    }
    match cli.format {
        OutputFormat::Json => println!("{}", machine_json(&report)?),
        OutputFormat::Text => print!("{}", render::render_text(&report)),
    }
    Ok(())
}

fn new_report(command: &Command, cfg: &Config, data: &LoadedData) -> EvaluationReport {
    let mut r = EvaluationReport::new(command.name(), cfg.clone());
    r.dataset = Some(data.summary.clone());
    if let Some(a) = small_sample_advisory(data.summary.participants) {
        r.advisories.push(a);
    }
    r
}

fn load_second(cli: &Cli, cfg: &Config) -> Result<Option<LoadedData>> {
    cli.input2
        .as_deref()
        .map(|p| load_input(p, cfg))
        .transpose()
}

/// Canonical machine form: pretty JSON with a trailing newline. Contains no
/// timestamps or environment detail, so identical inputs, configuration,
/// and seed produce byte-identical output.
fn machine_json(report: &EvaluationReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

fn write_artifacts(
    dir: &Path,
    report: &EvaluationReport,
    extra_files: &[(String, String)],
) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, contents: &str| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    };
    write("report.json", &machine_json(report)?)?;
    write("report.txt", &render::render_text(report))?;
    if let Some(efa) = &report.efa {
        write("scree.csv", &render::scree_csv(&efa.advice))?;
        write("scree.svg", &render::scree_svg(&efa.advice))?;
    }
    for (name, contents) in extra_files {
        write(name, contents)?;
    }
    Ok(())
}
