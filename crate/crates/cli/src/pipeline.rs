//! The batch stages behind each subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use behav_core::analysis::{correlate, join_features, CorrelationMatrix, Method};
use behav_core::comm::{
    extract_audio_features, extract_call_features, extract_sms_features, AudioSnippet, CallRecord,
    MessageRecord,
};
use behav_core::exploration::{
    categorical_counts, count_summary, feature_series, line_series, missingness, punchcard,
    render_bar, render_heatmap, render_line, series_to_json, write_counts_csv, write_series_csv,
    CategoryCount, ExplorationGrid, SeriesSummary, Statistic, SvgStyle,
};
use behav_core::ingest::read_source;
use behav_core::location::{extract_location_features, LocationFix};
use behav_core::tracker::{
    extract_step_features, extract_survey_features, score_survey, ScoreMap, StepSample,
    SurveyAnswer,
};
use behav_core::usage::{
    extract_app_features_with_groups, extract_battery_features, extract_screen_features, AppEvent,
    BatterySample, ScreenEvent,
};
use behav_core::{EventList, FeatureTable, ObservationTable, Sensor};
use rayon::prelude::*;

use crate::config::{Format, PipelineConfig, SourceEntry};
use crate::CliError;

pub struct Loaded {
    pub entry: SourceEntry,
    pub table: ObservationTable,
}

/// Reads and validates every source, in config order.
pub fn load_sources(config: &PipelineConfig) -> Result<Vec<Loaded>, CliError> {
    config
        .sources
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let table = read_source(&entry.spec).map_err(|e| source_error(i, entry, e))?;
            Ok(Loaded {
                entry: entry.clone(),
                table,
            })
        })
        .collect()
}

pub fn source_error(i: usize, entry: &SourceEntry, e: behav_core::Error) -> CliError {
    CliError::from_core(e).context(format!(
        "source {i} ({}, {})",
        entry.sensor,
        entry.spec.path.display()
    ))
}

/// Feature tables (and companion event lists) of one run.
#[derive(Default)]
pub struct Extraction {
    pub tables: Vec<(Sensor, FeatureTable)>,
    pub screen_off: Option<EventList>,
    pub shutdowns: Option<EventList>,
}

impl Extraction {
    /// Every feature name, per sensor in config order.
    pub fn names(&self) -> Vec<&str> {
        self.tables
            .iter()
            .flat_map(|(_, t)| t.names().iter().map(String::as_str))
            .collect()
    }

    /// Keeps only `wanted` columns; sensors left without columns are dropped.
    pub fn select(&mut self, wanted: &[String]) -> Result<(), CliError> {
        let known: BTreeSet<&str> = self.names().into_iter().collect();
        let unknown: Vec<&String> = wanted.iter().filter(|w| !known.contains(w.as_str())).collect();
        if !unknown.is_empty() {
            let list: Vec<&str> = known.iter().copied().collect();
            return Err(CliError::Usage(format!(
                "unknown feature(s) {}; valid names: {}",
                unknown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
                list.join(", ")
            )));
        }
        let mut kept = Vec::new();
        for (sensor, table) in self.tables.drain(..) {
            let names: Vec<&String> = table.names().iter().filter(|n| wanted.contains(n)).collect();
            if !names.is_empty() {
                let t = table.select(&names).map_err(CliError::from_core)?;
                kept.push((sensor, t));
            }
        }
        self.tables = kept;
        Ok(())
    }

    pub fn joined(&self) -> Result<FeatureTable, CliError> {
        let parts: Vec<(&str, &FeatureTable)> =
            self.tables.iter().map(|(s, t)| (s.name(), t)).collect();
        join_features(&parts).map_err(CliError::from_core)
    }
}

fn by_user<T: Clone>(items: &[T], user: impl Fn(&T) -> &str) -> Vec<Vec<T>> {
    let mut parts: BTreeMap<&str, Vec<T>> = BTreeMap::new();
    for it in items {
        parts.entry(user(it)).or_default().push(it.clone());
    }
    parts.into_values().collect()
}

/// Runs `f` on each user's records in parallel and stacks the results.
fn per_user<T, R, F>(
    pool: &rayon::ThreadPool,
    items: &[T],
    user: impl Fn(&T) -> &str,
    f: F,
) -> behav_core::Result<Vec<R>>
where
    T: Clone + Send + Sync,
    R: Send,
    F: Fn(&[T]) -> behav_core::Result<R> + Sync,
{
    let parts = by_user(items, user);
    pool.install(|| parts.par_iter().map(|p| f(p)).collect())
}

fn stack(names: Vec<String>, parts: Vec<FeatureTable>) -> behav_core::Result<FeatureTable> {
    let mut all = vec![FeatureTable::new(names)];
    all.extend(parts);
    FeatureTable::concat(&all)
}

fn merge_events(parts: Vec<EventList>) -> EventList {
    EventList {
        events: parts.into_iter().flat_map(|p| p.events).collect(),
    }
}

fn catalog(sensor: Sensor) -> Vec<String> {
    sensor.catalog().iter().map(|s| s.to_string()).collect()
}

/// Extracts features for every loaded source. Work is split per user on a
/// pool of `jobs` threads; the merged result does not depend on `jobs`.
pub fn extract(
    config: &PipelineConfig,
    sources: &[Loaded],
    jobs: usize,
) -> Result<Extraction, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let window = &config.window;
    let screen_events: Option<Vec<ScreenEvent>> = sources
        .iter()
        .find(|s| s.entry.sensor == Sensor::Screen)
        .map(|s| ScreenEvent::from_table(&s.table))
        .transpose()
        .map_err(CliError::from_core)?;

    let mut out = Extraction::default();
    for (i, src) in sources.iter().enumerate() {
        let sensor = src.entry.sensor;
        let err = |e| source_error(i, &src.entry, e);
        let table = match sensor {
            Sensor::Location => {
                let fixes = LocationFix::from_table(&src.table).map_err(err)?;
                let parts = per_user(&pool, &fixes, |f| &f.user, |p| {
                    extract_location_features(p, window, &config.location)
                })
                .map_err(err)?;
                stack(catalog(sensor), parts)
            }
            Sensor::Screen => {
                let events = screen_events.as_deref().unwrap_or_default();
                let parts = per_user(&pool, events, |e| &e.user, |p| {
                    extract_screen_features(p, window, &config.usage)
                })
                .map_err(err)?;
                let (tables, offs): (Vec<_>, Vec<_>) =
                    parts.into_iter().map(|s| (s.features, s.off_events)).unzip();
                out.screen_off = Some(merge_events(offs));
                stack(catalog(sensor), tables)
            }
            Sensor::Battery => {
                let samples = BatterySample::from_table(&src.table).map_err(err)?;
                let parts = per_user(&pool, &samples, |s| &s.user, |p| {
                    extract_battery_features(p, window)
                })
                .map_err(err)?;
                let (tables, shut): (Vec<_>, Vec<_>) =
                    parts.into_iter().map(|s| (s.features, s.shutdowns)).unzip();
                out.shutdowns = Some(merge_events(shut));
                stack(catalog(sensor), tables)
            }
            Sensor::App => {
                let events = AppEvent::from_table(&src.table, &config.usage).map_err(err)?;
                let groups: BTreeSet<&str> = events.iter().map(|e| e.group.as_str()).collect();
                let screen_by_user: BTreeMap<&str, Vec<ScreenEvent>> = screen_events
                    .iter()
                    .flatten()
                    .fold(BTreeMap::new(), |mut m, e| {
                        m.entry(e.user.as_str()).or_insert_with(Vec::new).push(e.clone());
                        m
                    });
                let names = behav_core::usage::app_feature_names(groups.iter().copied());
                let parts = per_user(&pool, &events, |e| &e.user, |p| {
                    let screen = screen_events
                        .as_ref()
                        .map(|_| screen_by_user.get(p[0].user.as_str()).map_or(&[][..], |v| v));
                    extract_app_features_with_groups(
                        p,
                        screen,
                        window,
                        &config.usage,
                        groups.iter().copied(),
                    )
                })
                .map_err(err)?;
                stack(names, parts)
            }
            Sensor::Call => {
                let calls = CallRecord::from_table(&src.table).map_err(err)?;
                let parts = per_user(&pool, &calls, |c| &c.user, |p| {
                    extract_call_features(p, window)
                })
                .map_err(err)?;
                stack(catalog(sensor), parts)
            }
            Sensor::Sms => {
                let msgs = MessageRecord::from_table(&src.table).map_err(err)?;
                let parts = per_user(&pool, &msgs, |m| &m.user, |p| extract_sms_features(p, window))
                    .map_err(err)?;
                stack(catalog(sensor), parts)
            }
            Sensor::Audio => {
                let snippets = AudioSnippet::from_table(&src.table).map_err(err)?;
                let parts = per_user(&pool, &snippets, |s| &s.user, |p| {
                    extract_audio_features(p, window, &config.audio)
                })
                .map_err(err)?;
                stack(catalog(sensor), parts)
            }
            Sensor::Steps => {
                let samples = StepSample::from_table(&src.table).map_err(err)?;
                let parts = per_user(&pool, &samples, |s| &s.user, |p| {
                    extract_step_features(p, window.timezone_offset)
                })
                .map_err(err)?;
                stack(catalog(sensor), parts)
            }
            Sensor::Survey => {
                let path = config.score_map.as_deref().expect("checked when loading the config");
                let map = ScoreMap::load(path).map_err(CliError::from_core)?;
                let answers = SurveyAnswer::from_table(&src.table).map_err(err)?;
                let parts = per_user(&pool, &answers, |a| &a.user, |p| {
                    extract_survey_features(&score_survey(p, &map)?, window.timezone_offset)
                })
                .map_err(err)?;
                stack(catalog(sensor), parts)
            }
        }
        .map_err(err)?;
        out.tables.push((sensor, table));
    }
    Ok(out)
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> behav_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(CliError::from_core)?;
    Ok(buf)
}

/// Writes the feature files; returns the paths written.
pub fn write_extraction(
    config: &PipelineConfig,
    ex: &Extraction,
) -> Result<Vec<PathBuf>, CliError> {
    let dir = &config.output_dir;
    create_dir(dir)?;
    let json = config.formats.contains(&Format::Json);
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<(), CliError> {
        let path = dir.join(name);
        write_file(&path, &bytes)?;
        written.push(path);
        Ok(())
    };
    for (sensor, table) in &ex.tables {
        put(format!("features_{sensor}.csv"), table.to_csv_string().into_bytes())?;
        if json {
            let text = table.to_json().map_err(CliError::from_core)?;
            put(format!("features_{sensor}.json"), text.into_bytes())?;
        }
    }
    let all = ex.joined()?;
    put("features_all.csv".into(), all.to_csv_string().into_bytes())?;
    if json {
        put("features_all.json".into(), all.to_json().map_err(CliError::from_core)?.into_bytes())?;
    }
    for (name, events) in [("events_screen_off.csv", &ex.screen_off), ("events_shutdown.csv", &ex.shutdowns)] {
        if let Some(ev) = events {
            let mut buf = Vec::new();
            ev.write_csv(&mut buf)
                .map_err(|e| CliError::Usage(format!("cannot write {name}: {e}")))?;
            put(name.into(), buf)?;
        }
    }
    Ok(written)
}

struct ExploreWriter<'a> {
    dir: PathBuf,
    formats: &'a BTreeSet<Format>,
    written: Vec<PathBuf>,
}

impl ExploreWriter<'_> {
    fn put(&mut self, name: &str, ext: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        let path = self.dir.join(format!("{name}.{ext}"));
        write_file(&path, &bytes)?;
        self.written.push(path);
        Ok(())
    }

    fn svg(&mut self, name: &str, render: behav_core::Result<String>) -> Result<(), CliError> {
        if !self.formats.contains(&Format::Svg) {
            return Ok(());
        }
        match render {
            Ok(doc) => self.put(name, "svg", doc.into_bytes()),
            Err(behav_core::Error::EmptyInput) => {
                eprintln!("note: {name}: nothing to draw, no SVG written");
                Ok(())
            }
            Err(e) => Err(CliError::from_core(e)),
        }
    }

    fn grid(&mut self, name: &str, grid: &ExplorationGrid) -> Result<(), CliError> {
        if self.formats.contains(&Format::Csv) {
            let bytes = to_bytes(|b| grid.write_csv(b))?;
            self.put(name, "csv", bytes)?;
        }
        if self.formats.contains(&Format::Json) {
            let text = grid.to_json().map_err(CliError::from_core)?;
            self.put(name, "json", text.into_bytes())?;
        }
        self.svg(name, render_heatmap(grid, &SvgStyle::titled(name)))
    }

    fn series(&mut self, name: &str, series: &[SeriesSummary]) -> Result<(), CliError> {
        if self.formats.contains(&Format::Csv) {
            let bytes = to_bytes(|b| write_series_csv(series, b))?;
            self.put(name, "csv", bytes)?;
        }
        if self.formats.contains(&Format::Json) {
            let text = series_to_json(series).map_err(CliError::from_core)?;
            self.put(name, "json", text.into_bytes())?;
        }
        self.svg(name, render_line(series, &SvgStyle::titled(name)))
    }

    fn counts(&mut self, name: &str, counts: &[CategoryCount]) -> Result<(), CliError> {
        if self.formats.contains(&Format::Csv) {
            let bytes = to_bytes(|b| write_counts_csv(counts, b))?;
            self.put(name, "csv", bytes)?;
        }
        if self.formats.contains(&Format::Json) {
            let text = serde_json::to_string_pretty(counts).map_err(|e| CliError::Data(e.to_string()))?;
            self.put(name, "json", text.into_bytes())?;
        }
        self.svg(name, render_bar(counts, &SvgStyle::titled(name)))
    }
}

/// Writes exploration summaries under `<output_dir>/explore`.
pub fn explore(
    config: &PipelineConfig,
    sources: &[Loaded],
    extraction: Option<&Extraction>,
) -> Result<Vec<PathBuf>, CliError> {
    let mut w = ExploreWriter {
        dir: config.output_dir.join("explore"),
        formats: &config.formats,
        written: Vec::new(),
    };
    create_dir(&w.dir)?;
    let window = &config.window;
    for (i, src) in sources.iter().enumerate() {
        let s = src.entry.sensor.name();
        let t = &src.table;
        let err = |e| source_error(i, &src.entry, e);

        let summary = count_summary(t, window).map_err(err)?;
        if config.formats.contains(&Format::Csv) {
            let bytes = to_bytes(|b| write_series_csv(&summary.series, b))?;
            w.put(&format!("{s}_counts"), "csv", bytes)?;
        }
        if config.formats.contains(&Format::Json) {
            let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Data(e.to_string()))?;
            w.put(&format!("{s}_counts"), "json", text.into_bytes())?;
        }
        let totals: Vec<CategoryCount> = summary
            .totals
            .iter()
            .map(|(u, n)| CategoryCount {
                group: None,
                value: u.clone(),
                count: *n as usize,
            })
            .collect();
        w.svg(&format!("{s}_counts"), render_bar(&totals, &SvgStyle::titled(format!("{s} observations per user"))))?;

        if let Some(col) = src.entry.category_column() {
            let counts = categorical_counts(t, col, None).map_err(err)?;
            w.counts(&format!("{s}_categories"), &counts)?;
        }

        let grid = punchcard(t, None, config.punchcard_rows, window.timezone_offset).map_err(err)?;
        w.grid(&format!("{s}_punchcard"), &grid)?;

        let miss = missingness(t, window, config.missingness_span).map_err(err)?;
        w.grid(&format!("{s}_missingness"), &miss.grid)?;
        if config.formats.contains(&Format::Csv) {
            let bytes = to_bytes(|b| miss.write_fraction_csv(b))?;
            w.put(&format!("{s}_missing_fraction"), "csv", bytes)?;
        }

        if let Some(col) = src.entry.line_column() {
            let series = line_series(t, col, window, Statistic::Mean).map_err(err)?;
            w.series(&format!("{s}_line"), &series)?;
        }
    }
    if let Some(ex) = extraction {
        if let Some((_, loc)) = ex.tables.iter().find(|(s, _)| *s == Sensor::Location) {
            if loc.index_of("dist_total").is_some() {
                let series = feature_series(loc, "dist_total").map_err(CliError::from_core)?;
                w.series("location_dist_total", &series)?;
            }
        }
    }
    Ok(w.written)
}

/// Correlation matrix over the joined features.
pub fn analyze(ex: &Extraction, method: Method) -> Result<CorrelationMatrix, CliError> {
    correlate(&ex.joined()?, method).map_err(CliError::from_core)
}

pub fn write_analysis(config: &PipelineConfig, m: &CorrelationMatrix) -> Result<Vec<PathBuf>, CliError> {
    let dir = config.output_dir.join("analysis");
    create_dir(&dir)?;
    let mut csv = Vec::new();
    m.write_csv(&mut csv)
        .map_err(|e| CliError::Usage(format!("cannot write correlation.csv: {e}")))?;
    let csv_path = dir.join("correlation.csv");
    write_file(&csv_path, &csv)?;
    let json_path = dir.join("correlation.json");
    write_file(&json_path, m.to_json().map_err(CliError::from_core)?.as_bytes())?;
    Ok(vec![csv_path, json_path])
}
