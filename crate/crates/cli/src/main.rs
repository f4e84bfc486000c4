//! `behav`: validate, extract, explore and analyze behavioral sensor data.
//!
//! Exit codes: 0 success, 1 data error, 2 usage or configuration error.

mod config;
mod pipeline;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use behav_core::analysis::Method;
use behav_core::ingest::{generate_sample, score_map_csv, write_csv};
use behav_core::Sensor;
use clap::{Args, Parser, Subcommand};

use config::{Format, PipelineConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration (exit 2).
    Usage(String),
    /// Input data failed validation or processing (exit 1).
    Data(String),
}

impl CliError {
    pub fn from_core(e: behav_core::Error) -> CliError {
        use behav_core::Error as E;
        match e {
            E::Config(_) | E::Io { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }

    pub fn context(self, what: String) -> CliError {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{what}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{what}: {m}")),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Data(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "behav", version, about = "Behavioral sensor feature pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for per-user extraction.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    /// Output formats, overriding the config (comma separated: csv,json,svg).
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every source against the schema and report counts.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Write per-sensor and joined feature tables.
    Extract {
        #[command(flatten)]
        common: Common,
        /// Keep only these features (comma separated).
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<String>>,
    },
    /// Write counts, punchcards, missingness and line summaries.
    Explore {
        #[command(flatten)]
        common: Common,
    },
    /// Write the correlation matrix of the joined features.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<String>>,
        #[arg(long, default_value = "pearson")]
        method: Method,
    },
    /// Generate a synthetic sample dataset and a matching config.
    Sample {
        /// Directory to write into.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        users: usize,
        #[arg(long, default_value_t = 28)]
        days: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn load(common: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(&common.config)?;
    if let Some(f) = &common.format {
        cfg.formats = f.iter().copied().collect();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { common } => validate(&load(&common)?),
        Command::Extract { common, features } => {
            let cfg = load(&common)?;
            let sources = pipeline::load_sources(&cfg)?;
            let mut ex = pipeline::extract(&cfg, &sources, common.jobs.into())?;
            if let Some(f) = &features {
                ex.select(f)?;
            }
            let written = pipeline::write_extraction(&cfg, &ex)?;
            report_written(&written);
            Ok(())
        }
        Command::Explore { common } => {
            let cfg = load(&common)?;
            let sources = pipeline::load_sources(&cfg)?;
            let ex = pipeline::extract(&cfg, &sources, common.jobs.into())?;
            let written = pipeline::explore(&cfg, &sources, Some(&ex))?;
            report_written(&written);
            Ok(())
        }
        Command::Analyze {
            common,
            features,
            method,
        } => {
            let cfg = load(&common)?;
            let sources = pipeline::load_sources(&cfg)?;
            let mut ex = pipeline::extract(&cfg, &sources, common.jobs.into())?;
            if let Some(f) = &features {
                ex.select(f)?;
            }
            let m = pipeline::analyze(&ex, method)?;
            let written = pipeline::write_analysis(&cfg, &m)?;
            report_written(&written);
            Ok(())
        }
        Command::Sample {
            out,
            users,
            days,
            seed,
        } => sample(&out, users, days, seed),
    }
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn validate(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut failures = Vec::new();
    for (i, entry) in cfg.sources.iter().enumerate() {
        let checked = behav_core::ingest::read_source(&entry.spec).and_then(|t| {
            check_payload(entry.sensor, &t, cfg)?;
            Ok(t)
        });
        match checked {
            Ok(t) => {
                let range = t
                    .time_range()
                    .map(|(a, b)| format!("{a} .. {b}"))
                    .unwrap_or_else(|| "empty".into());
                println!(
                    "ok    source {i} ({}, {}): {} rows, {} users, {range}",
                    entry.sensor,
                    entry.spec.path.display(),
                    t.len(),
                    t.users().len()
                );
            }
            Err(e) => {
                let e = pipeline::source_error(i, entry, e);
                println!("error {e}");
                failures.push(e);
            }
        }
    }
    match failures.into_iter().max_by_key(|e| e.code()) {
        None => Ok(()),
        Some(worst) => Err(worst),
    }
}

/// Converts the table to its sensor's record type to catch domain errors.
fn check_payload(
    sensor: Sensor,
    t: &behav_core::ObservationTable,
    cfg: &PipelineConfig,
) -> behav_core::Result<()> {
    use behav_core::{comm, location, tracker, usage};
    match sensor {
        Sensor::Location => location::LocationFix::from_table(t).map(drop),
        Sensor::Screen => usage::ScreenEvent::from_table(t).map(drop),
        Sensor::Battery => usage::BatterySample::from_table(t).map(drop),
        Sensor::App => usage::AppEvent::from_table(t, &cfg.usage).map(drop),
        Sensor::Call => comm::CallRecord::from_table(t).map(drop),
        Sensor::Sms => comm::MessageRecord::from_table(t).map(drop),
        Sensor::Audio => comm::AudioSnippet::from_table(t).map(drop),
        Sensor::Steps => tracker::StepSample::from_table(t).map(drop),
        Sensor::Survey => tracker::SurveyAnswer::from_table(t).map(drop),
    }
}

const APP_GROUPS: &[(&str, &str)] = &[
    ("com.whatsapp", "communication"),
    ("com.android.dialer", "communication"),
    ("com.google.android.gm", "communication"),
    ("com.instagram.android", "social"),
    ("com.android.chrome", "browsing"),
    ("com.spotify.music", "entertainment"),
];

fn sample(out: &Path, users: usize, days: usize, seed: u64) -> Result<(), CliError> {
    if users == 0 || days == 0 {
        return Err(CliError::Usage("--users and --days must be positive".into()));
    }
    pipeline::create_dir(out)?;
    let io = |p: &Path, e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", p.display()));
    let mut toml = String::from(
        "# Sample pipeline over synthetic data.\nversion = 1\noutput_dir = \"output\"\nformats = [\"csv\", \"json\", \"svg\"]\n\n[window]\nwidth = 86400\nalignment = \"local_midnight\"\ntimezone_offset = 120\n\n[survey]\nscore_map = \"score_map.csv\"\n\n[usage.app_group_map]\n",
    );
    for (app, group) in APP_GROUPS {
        toml.push_str(&format!("\"{app}\" = \"{group}\"\n"));
    }
    for sensor in Sensor::ALL {
        let table = generate_sample(sensor, users, days, seed);
        let path = out.join(format!("{sensor}.csv"));
        write_csv(&table, &path).map_err(CliError::from_core)?;
        println!("wrote {}", path.display());
        toml.push_str(&format!(
            "\n[[sources]]\nsensor = \"{sensor}\"\nkind = \"csv\"\npath = \"{sensor}.csv\"\ntime_format = \"epoch_ms\"\n"
        ));
    }
    let map = out.join("score_map.csv");
    std::fs::write(&map, score_map_csv()).map_err(|e| io(&map, e))?;
    let cfg = out.join("pipeline.toml");
    std::fs::write(&cfg, toml).map_err(|e| io(&cfg, e))?;
    println!("wrote {}", map.display());
    println!("wrote {}", cfg.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("behav: {e}");
            ExitCode::from(e.code())
        }
    }
}
