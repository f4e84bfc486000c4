//! Pipeline configuration file (TOML).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use behav_core::comm::AudioConfig;
use behav_core::exploration::PunchcardRows;
use behav_core::ingest::{SourceKind, SourceSpec};
use behav_core::location::LocationConfig;
use behav_core::usage::UsageConfig;
use behav_core::{Sensor, Timestamp, WindowSpec};
use serde::Deserialize;

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;
pub const OUTPUT_ENV: &str = "BEHAV_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (expected csv, json or svg)")),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct SourceEntry {
    pub sensor: Sensor,
    #[serde(flatten)]
    pub spec: SourceSpec,
    /// Numeric column drawn as a line series by `explore`.
    #[serde(default)]
    pub line_column: Option<String>,
    /// Column tallied as categories by `explore`.
    #[serde(default)]
    pub category_column: Option<String>,
}

impl SourceEntry {
    pub fn line_column(&self) -> Option<&str> {
        self.line_column.as_deref().or(match self.sensor {
            Sensor::Battery => Some("level"),
            Sensor::Call => Some("duration"),
            Sensor::Audio => Some("db"),
            Sensor::Steps => Some("steps"),
            _ => None,
        })
    }

    pub fn category_column(&self) -> Option<&str> {
        self.category_column.as_deref().or(match self.sensor {
            Sensor::Screen | Sensor::Battery => Some("status"),
            Sensor::App => Some("app"),
            Sensor::Call | Sensor::Sms => Some("direction"),
            Sensor::Survey => Some("answer"),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyConfig {
    pub score_map: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExploreConfig {
    #[serde(default)]
    pub punchcard_rows: PunchcardRows,
    /// Fixed span for missingness, ISO-8601; both or neither.
    pub missingness_start: Option<String>,
    pub missingness_end: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    output_dir: Option<PathBuf>,
    formats: Option<Vec<Format>>,
    window: Option<WindowSpec>,
    #[serde(default)]
    location: LocationConfig,
    #[serde(default)]
    usage: UsageConfig,
    #[serde(default)]
    audio: AudioConfig,
    #[serde(default)]
    survey: SurveyConfig,
    #[serde(default)]
    explore: ExploreConfig,
    sources: Vec<SourceEntry>,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub sources: Vec<SourceEntry>,
    pub window: WindowSpec,
    pub location: LocationConfig,
    pub usage: UsageConfig,
    pub audio: AudioConfig,
    pub score_map: Option<PathBuf>,
    pub punchcard_rows: PunchcardRows,
    pub missingness_span: Option<(Timestamp, Timestamp)>,
    pub output_dir: PathBuf,
    pub formats: BTreeSet<Format>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses a config; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<PipelineConfig, CliError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        if raw.version != CONFIG_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                raw.version
            )));
        }
        let window = raw.window.unwrap_or(WindowSpec::daily(0));
        let config_err = |e: behav_core::Error| CliError::Usage(e.to_string());
        window.check().map_err(config_err)?;
        raw.location.check().map_err(config_err)?;
        raw.usage.check().map_err(config_err)?;
        raw.audio.check().map_err(config_err)?;

        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let mut seen = BTreeSet::new();
        let mut sources = raw.sources;
        if sources.is_empty() {
            return Err(CliError::Usage("config lists no sources".into()));
        }
        for (i, s) in sources.iter_mut().enumerate() {
            if !seen.insert(s.sensor) {
                return Err(CliError::Usage(format!(
                    "source {i}: sensor `{}` is configured twice",
                    s.sensor
                )));
            }
            s.spec.path = resolve(&s.spec.path);
            s.spec.check().map_err(|e| CliError::Usage(format!("source {i}: {e}")))?;
            if !s.spec.path.is_file() {
                return Err(CliError::Usage(format!(
                    "source {i} ({}): file {} does not exist",
                    s.sensor,
                    s.spec.path.display()
                )));
            }
            if s.spec.kind == SourceKind::Csv && s.spec.table_name.is_some() {
                return Err(CliError::Usage(format!("source {i}: table_name is only for sqlite")));
            }
        }
        let score_map = raw.survey.score_map.as_deref().map(resolve);
        if seen.contains(&Sensor::Survey) && score_map.is_none() {
            return Err(CliError::Usage("survey source needs [survey] score_map".into()));
        }
        if let Some(p) = &score_map {
            if !p.is_file() {
                return Err(CliError::Usage(format!("score map {} does not exist", p.display())));
            }
        }
        let missingness_span = match (&raw.explore.missingness_start, &raw.explore.missingness_end) {
            (None, None) => None,
            (Some(a), Some(b)) => {
                let parse = |s: &str| {
                    Timestamp::parse_iso8601(s)
                        .ok_or_else(|| CliError::Usage(format!("cannot parse time `{s}`")))
                };
                Some((parse(a)?, parse(b)?))
            }
            _ => {
                return Err(CliError::Usage(
                    "missingness_start and missingness_end go together".into(),
                ))
            }
        };
        let output_dir = match std::env::var_os(OUTPUT_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => resolve(raw.output_dir.as_deref().unwrap_or(Path::new("output"))),
        };
        let formats = raw
            .formats
            .unwrap_or_else(|| vec![Format::Csv, Format::Json, Format::Svg])
            .into_iter()
            .collect();
        Ok(PipelineConfig {
            sources,
            window,
            location: raw.location,
            usage: raw.usage,
            audio: raw.audio,
            score_map,
            punchcard_rows: raw.explore.punchcard_rows,
            missingness_span,
            output_dir,
            formats,
        })
    }
}
