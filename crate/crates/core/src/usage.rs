//! Screen, battery and application-usage features.
//!
//! Status codes follow the AWARE convention: screen `0` off, `1` on, `2`
//! locked, `3` unlocked; battery `-1` shutdown, `-2` reboot.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{EventList, FeatureTable, RowBuilder};
use crate::schema::{window_runs, ObservationTable, Timestamp, WindowSpec};
use crate::stats::{self, Summary};

pub const SCREEN_FEATURES: &[&str] = &[
    "screen_event_count",
    "screen_off_count",
    "dur_sum",
    "dur_min",
    "dur_max",
    "dur_median",
    "dur_mean",
    "dur_std",
    "first_unlock",
];

pub const BATTERY_FEATURES: &[&str] = &[
    "occurrence",
    "gap_mean",
    "gap_max",
    "charge_diff_mean",
    "charge_diff_min",
    "shutdown_count",
];

pub const SCREEN_OFF: i64 = 0;
pub const SCREEN_ON: i64 = 1;
pub const SCREEN_LOCKED: i64 = 2;
pub const SCREEN_UNLOCKED: i64 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScreenEvent {
    pub user: String,
    pub time: Timestamp,
    pub status: i64,
}

impl ScreenEvent {
    pub fn from_table(table: &ObservationTable) -> Result<Vec<ScreenEvent>> {
        let keys = table.keys()?;
        let status = table.numbers("status")?;
        keys.into_iter()
            .zip(status)
            .enumerate()
            .map(|(row, ((user, time), s))| {
                if s.fract() != 0.0 || !(0.0..=3.0).contains(&s) {
                    return Err(Error::invalid("status", row, "screen status must be 0, 1, 2 or 3"));
                }
                Ok(ScreenEvent {
                    user: user.to_string(),
                    time,
                    status: s as i64,
                })
            })
            .collect()
    }

    fn opens(&self) -> bool {
        matches!(self.status, SCREEN_ON | SCREEN_UNLOCKED)
    }

    fn closes(&self) -> bool {
        matches!(self.status, SCREEN_OFF | SCREEN_LOCKED)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatterySample {
    pub user: String,
    pub time: Timestamp,
    pub level: f64,
    pub status: Option<i64>,
}

impl BatterySample {
    pub fn from_table(table: &ObservationTable) -> Result<Vec<BatterySample>> {
        let keys = table.keys()?;
        let level = table.numbers("level")?;
        let status = table.opt_numbers("status")?;
        keys.into_iter()
            .enumerate()
            .map(|(row, (user, time))| {
                if !(0.0..=100.0).contains(&level[row]) {
                    return Err(Error::invalid("level", row, "battery level outside [0, 100]"));
                }
                Ok(BatterySample {
                    user: user.to_string(),
                    time,
                    level: level[row],
                    status: status[row].map(|s| s as i64),
                })
            })
            .collect()
    }

    pub fn is_shutdown(&self) -> bool {
        matches!(self.status, Some(-1) | Some(-2))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppEvent {
    pub user: String,
    pub time: Timestamp,
    pub app: String,
    pub group: String,
}

impl AppEvent {
    /// Groups come from `config.app_group_map`, then a `group` column if the
    /// table has one, then `"other"`.
    pub fn from_table(table: &ObservationTable, config: &UsageConfig) -> Result<Vec<AppEvent>> {
        let keys = table.keys()?;
        let apps = table.strings("app")?;
        let groups = table.opt_strings("group")?;
        keys.into_iter()
            .enumerate()
            .map(|(row, (user, time))| {
                let app = apps[row];
                if app.is_empty() {
                    return Err(Error::invalid("app", row, "empty application name"));
                }
                let group = config
                    .app_group_map
                    .get(app)
                    .map(String::as_str)
                    .or(groups[row])
                    .unwrap_or("other");
                Ok(AppEvent {
                    user: user.to_string(),
                    time,
                    app: app.to_string(),
                    group: group.to_string(),
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsageConfig {
    /// Seconds; longer screen sessions are discarded.
    pub session_max: i64,
    /// Seconds; cap on the time credited to one foreground event.
    pub app_timeout: i64,
    pub app_group_map: BTreeMap<String, String>,
}

impl Default for UsageConfig {
    fn default() -> Self {
        UsageConfig {
            session_max: 10 * 3600,
            app_timeout: 600,
            app_group_map: BTreeMap::new(),
        }
    }
}

impl UsageConfig {
    pub fn check(&self) -> Result<()> {
        if self.session_max <= 0 || self.app_timeout <= 0 {
            return Err(Error::Config("usage durations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Session {
    pub user: String,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Session {
    pub fn duration_secs(&self) -> f64 {
        (self.end.millis() - self.start.millis()) as f64 / 1000.0
    }
}

fn sorted<T: Clone>(items: &[T], key: impl Fn(&T, &T) -> std::cmp::Ordering) -> Vec<T> {
    let mut v = items.to_vec();
    v.sort_by(key);
    v
}

fn sorted_screen(events: &[ScreenEvent]) -> Vec<ScreenEvent> {
    sorted(events, |a, b| {
        (&a.user, a.time, a.status).cmp(&(&b.user, b.time, b.status))
    })
}

/// Pairs each on/unlock with the next off/lock of the same user. Repeated
/// openers inside a session are ignored; unclosed sessions and sessions
/// longer than `session_max` are dropped.
pub fn screen_sessions(events: &[ScreenEvent], config: &UsageConfig) -> Vec<Session> {
    sessions_sorted(&sorted_screen(events), config)
}

fn sessions_sorted(events: &[ScreenEvent], config: &UsageConfig) -> Vec<Session> {
    let mut out = Vec::new();
    let mut open: Option<&ScreenEvent> = None;
    for e in events {
        if open.is_some_and(|o| o.user != e.user) {
            open = None;
        }
        if e.opens() {
            open.get_or_insert(e);
        } else if e.closes() {
            if let Some(o) = open.take() {
                let s = Session {
                    user: o.user.clone(),
                    start: o.time,
                    end: e.time,
                };
                if s.duration_secs() <= config.session_max as f64 {
                    out.push(s);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScreenFeatures {
    pub features: FeatureTable,
    /// Every screen-off event.
    pub off_events: EventList,
}

pub fn extract_screen_features(
    events: &[ScreenEvent],
    window: &WindowSpec,
    config: &UsageConfig,
) -> Result<ScreenFeatures> {
    config.check()?;
    let events = sorted_screen(events);
    let sessions = sessions_sorted(&events, config);

    let mut durations: BTreeMap<(&str, Timestamp), Vec<f64>> = BTreeMap::new();
    for s in &sessions {
        durations
            .entry((s.user.as_str(), window.window_start(s.start)))
            .or_default()
            .push(s.duration_secs());
    }

    let mut table = FeatureTable::new(SCREEN_FEATURES.iter().copied());
    for (user, start, range) in window_runs(&events, window, |e| (e.user.as_str(), e.time)) {
        let evs = &events[range];
        let durs = durations
            .get(&(user.as_str(), start))
            .map(Vec::as_slice)
            .unwrap_or_default();
        let summary = Summary::of(durs);
        let first_unlock = evs
            .iter()
            .find(|e| e.status == SCREEN_UNLOCKED)
            .or_else(|| evs.iter().find(|e| e.status == SCREEN_ON))
            .map(|e| e.time.millis() as f64);
        let mut row = RowBuilder::new(SCREEN_FEATURES);
        row.set("screen_event_count", evs.len() as f64)
            .set(
                "screen_off_count",
                evs.iter().filter(|e| e.status == SCREEN_OFF).count() as f64,
            )
            .set("dur_sum", durs.iter().sum::<f64>())
            .set("dur_min", summary.min)
            .set("dur_max", summary.max)
            .set("dur_median", summary.median)
            .set("dur_mean", summary.mean)
            .set("dur_std", summary.std)
            .set("first_unlock", first_unlock);
        table.insert(user, start, row.finish())?;
    }

    let off_events = EventList {
        events: events
            .iter()
            .filter(|e| e.status == SCREEN_OFF)
            .map(|e| (e.user.clone(), e.time))
            .collect(),
    };
    Ok(ScreenFeatures {
        features: table,
        off_events,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatteryFeatures {
    pub features: FeatureTable,
    /// Samples with a shutdown or reboot status.
    pub shutdowns: EventList,
}

/// Sample counts, sampling gaps, level deltas and shutdowns per window. Gaps
/// and deltas are taken between consecutive samples inside the window.
pub fn extract_battery_features(samples: &[BatterySample], window: &WindowSpec) -> Result<BatteryFeatures> {
    let samples = sorted(samples, |a, b| {
        (&a.user, a.time, a.status)
            .cmp(&(&b.user, b.time, b.status))
            .then(a.level.total_cmp(&b.level))
    });
    let mut table = FeatureTable::new(BATTERY_FEATURES.iter().copied());
    for (user, start, range) in window_runs(&samples, window, |s| (s.user.as_str(), s.time)) {
        let s = &samples[range];
        let gaps: Vec<f64> = s
            .windows(2)
            .map(|w| (w[1].time.millis() - w[0].time.millis()) as f64 / 1000.0)
            .collect();
        let deltas: Vec<f64> = s.windows(2).map(|w| w[1].level - w[0].level).collect();
        let mut row = RowBuilder::new(BATTERY_FEATURES);
        row.set("occurrence", s.len() as f64)
            .set("gap_mean", stats::mean(&gaps))
            .set("gap_max", stats::max(&gaps))
            .set("charge_diff_mean", stats::mean(&deltas))
            .set("charge_diff_min", stats::min(&deltas))
            .set(
                "shutdown_count",
                s.iter().filter(|x| x.is_shutdown()).count() as f64,
            );
        table.insert(user, start, row.finish())?;
    }
    let shutdowns = EventList {
        events: samples
            .iter()
            .filter(|s| s.is_shutdown())
            .map(|s| (s.user.clone(), s.time))
            .collect(),
    };
    Ok(BatteryFeatures {
        features: table,
        shutdowns,
    })
}

/// Lowercase alphanumerics, everything else `_`.
pub fn snake_case(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

/// `app_count_<group>`, `app_duration_<group>` for each group, groups sorted.
pub fn app_feature_names<'a>(groups: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let groups: BTreeSet<String> = groups.into_iter().map(snake_case).collect();
    groups
        .iter()
        .flat_map(|g| [format!("app_count_{g}"), format!("app_duration_{g}")])
        .collect()
}

/// Seconds credited to each event: time to the next event of the same user,
/// capped at `app_timeout` and at the next screen off/lock if screen events are
/// given. A user's last event gets 0.
pub fn app_durations(
    events: &[AppEvent],
    screen: Option<&[ScreenEvent]>,
    config: &UsageConfig,
) -> Vec<f64> {
    let mut offs: BTreeMap<&str, Vec<Timestamp>> = BTreeMap::new();
    for e in screen.unwrap_or_default() {
        if e.closes() {
            offs.entry(e.user.as_str()).or_default().push(e.time);
        }
    }
    for v in offs.values_mut() {
        v.sort_unstable();
    }
    let timeout = config.app_timeout as f64;
    events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let Some(next) = events.get(i + 1).filter(|n| n.user == e.user) else {
                return 0.0;
            };
            let mut d = ((next.time.millis() - e.time.millis()) as f64 / 1000.0).min(timeout);
            if let Some(o) = offs.get(e.user.as_str()) {
                let k = o.partition_point(|&t| t < e.time);
                if let Some(off) = o.get(k) {
                    d = d.min((off.millis() - e.time.millis()) as f64 / 1000.0);
                }
            }
            d
        })
        .collect()
}

/// Foreground event count and duration per app group and window.
pub fn extract_app_features(
    events: &[AppEvent],
    screen: Option<&[ScreenEvent]>,
    window: &WindowSpec,
    config: &UsageConfig,
) -> Result<FeatureTable> {
    let groups: BTreeSet<&str> = events.iter().map(|e| e.group.as_str()).collect();
    extract_app_features_with_groups(events, screen, window, config, groups)
}

/// As [`extract_app_features`], with the column set fixed by `groups` (which
/// must cover every event's group). Lets per-user partitions share one layout.
pub fn extract_app_features_with_groups<'a>(
    events: &[AppEvent],
    screen: Option<&[ScreenEvent]>,
    window: &WindowSpec,
    config: &UsageConfig,
    groups: impl IntoIterator<Item = &'a str>,
) -> Result<FeatureTable> {
    config.check()?;
    let events = sorted(events, |a, b| {
        (&a.user, a.time, &a.app, &a.group).cmp(&(&b.user, b.time, &b.app, &b.group))
    });
    let durations = app_durations(&events, screen, config);
    let names = app_feature_names(groups);
    let mut table = FeatureTable::new(names.clone());
    for (user, start, range) in window_runs(&events, window, |e| (e.user.as_str(), e.time)) {
        let mut values = vec![Some(0.0); names.len()];
        for i in range {
            let g = snake_case(&events[i].group);
            let c = names
                .iter()
                .position(|n| *n == format!("app_count_{g}"))
                .ok_or_else(|| Error::UnknownColumn(format!("app_count_{g}")))?;
            values[c] = values[c].map(|v| v + 1.0);
            values[c + 1] = values[c + 1].map(|v| v + durations[i]);
        }
        table.insert(user, start, values)?;
    }
    Ok(table)
}
