//! Call, SMS and ambient-audio features.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, RowBuilder};
use crate::schema::{window_runs, Column, ObservationTable, Timestamp, WindowSpec};
use crate::stats::Summary;

pub const CALL_FEATURES: &[&str] = &[
    "call_count",
    "call_dur_total",
    "call_dur_mean",
    "call_dur_median",
    "call_dur_std",
    "call_out_in_ratio",
    "missed_count",
];

pub const SMS_FEATURES: &[&str] = &["sms_count", "sms_in_count", "sms_out_count"];

pub const AUDIO_FEATURES: &[&str] = &[
    "count_silent",
    "count_speech",
    "count_loud",
    "count_other",
    "freq_min",
    "freq_max",
    "freq_mean",
    "freq_median",
    "freq_std",
    "db_min",
    "db_max",
    "db_mean",
    "db_median",
    "db_std",
];

/// Call direction; the integer codes are `1`, `2` and `3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Incoming = 1,
    Outgoing = 2,
    Missed = 3,
}

impl Direction {
    /// Accepts the integer code or the lowercase name.
    pub fn parse(text: &str) -> Option<Direction> {
        match text.trim().to_ascii_lowercase().as_str() {
            "1" | "1.0" | "incoming" | "in" => Some(Direction::Incoming),
            "2" | "2.0" | "outgoing" | "out" => Some(Direction::Outgoing),
            "3" | "3.0" | "missed" => Some(Direction::Missed),
            _ => None,
        }
    }
}

fn directions(table: &ObservationTable) -> Result<Vec<Direction>> {
    let col: &Column = table
        .column("direction")
        .ok_or_else(|| Error::Schema("direction".into()))?;
    (0..col.len())
        .map(|row| {
            col.text_at(row)
                .as_deref()
                .and_then(Direction::parse)
                .ok_or_else(|| Error::invalid("direction", row, "unknown direction"))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CallRecord {
    pub user: String,
    pub time: Timestamp,
    pub direction: Direction,
    /// Seconds.
    pub duration: f64,
}

impl CallRecord {
    pub fn from_table(table: &ObservationTable) -> Result<Vec<CallRecord>> {
        let keys = table.keys()?;
        let dirs = directions(table)?;
        let durations = table.numbers("duration")?;
        keys.into_iter()
            .enumerate()
            .map(|(row, (user, time))| {
                let duration = durations[row];
                if !duration.is_finite() || duration < 0.0 {
                    return Err(Error::invalid("duration", row, "negative call duration"));
                }
                if dirs[row] == Direction::Missed && duration != 0.0 {
                    return Err(Error::invalid("duration", row, "missed call with nonzero duration"));
                }
                Ok(CallRecord {
                    user: user.to_string(),
                    time,
                    direction: dirs[row],
                    duration,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageRecord {
    pub user: String,
    pub time: Timestamp,
    /// `true` for incoming.
    pub incoming: bool,
}

impl MessageRecord {
    pub fn from_table(table: &ObservationTable) -> Result<Vec<MessageRecord>> {
        let keys = table.keys()?;
        let dirs = directions(table)?;
        keys.into_iter()
            .enumerate()
            .map(|(row, (user, time))| match dirs[row] {
                Direction::Missed => Err(Error::invalid("direction", row, "messages cannot be missed")),
                d => Ok(MessageRecord {
                    user: user.to_string(),
                    time,
                    incoming: d == Direction::Incoming,
                }),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AudioSnippet {
    pub user: String,
    pub time: Timestamp,
    pub db: f64,
    pub freq: f64,
}

impl AudioSnippet {
    pub fn from_table(table: &ObservationTable) -> Result<Vec<AudioSnippet>> {
        let keys = table.keys()?;
        let db = table.numbers("db")?;
        let freq = table.numbers("freq")?;
        keys.into_iter()
            .enumerate()
            .map(|(row, (user, time))| {
                if !db[row].is_finite() {
                    return Err(Error::invalid("db", row, "non-finite level"));
                }
                if !freq[row].is_finite() || freq[row] < 0.0 {
                    return Err(Error::invalid("freq", row, "frequency must be non-negative"));
                }
                Ok(AudioSnippet {
                    user: user.to_string(),
                    time,
                    db: db[row],
                    freq: freq[row],
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioConfig {
    pub silent_db: f64,
    pub loud_db: f64,
    /// Inclusive Hz range.
    pub speech_band: (f64, f64),
}

impl Default for AudioConfig {
    fn default() -> Self {
        AudioConfig {
            silent_db: 50.0,
            loud_db: 70.0,
            speech_band: (65.0, 255.0),
        }
    }
}

impl AudioConfig {
    pub fn check(&self) -> Result<()> {
        if self.silent_db.partial_cmp(&self.loud_db) != Some(Ordering::Less) {
            return Err(Error::Config("silent_db must be below loud_db".into()));
        }
        if self.speech_band.0.partial_cmp(&self.speech_band.1) != Some(Ordering::Less) {
            return Err(Error::Config("speech band must be increasing".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AudioClass {
    Silent,
    Speech,
    Loud,
    Other,
}

/// Silent below `silent_db`, else loud above `loud_db`, else speech inside
/// the speech band, else other.
pub fn classify_snippet(s: &AudioSnippet, config: &AudioConfig) -> AudioClass {
    if s.db < config.silent_db {
        AudioClass::Silent
    } else if s.db > config.loud_db {
        AudioClass::Loud
    } else if (config.speech_band.0..=config.speech_band.1).contains(&s.freq) {
        AudioClass::Speech
    } else {
        AudioClass::Other
    }
}

pub fn extract_call_features(calls: &[CallRecord], window: &WindowSpec) -> Result<FeatureTable> {
    let mut calls = calls.to_vec();
    calls.sort_by(|a, b| {
        (&a.user, a.time, a.direction)
            .cmp(&(&b.user, b.time, b.direction))
            .then(a.duration.total_cmp(&b.duration))
    });
    let mut table = FeatureTable::new(CALL_FEATURES.iter().copied());
    for (user, start, range) in window_runs(&calls, window, |c| (c.user.as_str(), c.time)) {
        let c = &calls[range];
        let count = |d| c.iter().filter(|x| x.direction == d).count() as f64;
        let durs: Vec<f64> = c
            .iter()
            .filter(|x| x.direction != Direction::Missed)
            .map(|x| x.duration)
            .collect();
        let s = Summary::of(&durs);
        let incoming = count(Direction::Incoming);
        let ratio = (incoming > 0.0).then(|| count(Direction::Outgoing) / incoming);
        let mut row = RowBuilder::new(CALL_FEATURES);
        row.set("call_count", c.len() as f64)
            .set("call_dur_total", durs.iter().sum::<f64>())
            .set("call_dur_mean", s.mean)
            .set("call_dur_median", s.median)
            .set("call_dur_std", s.std)
            .set("call_out_in_ratio", ratio)
            .set("missed_count", count(Direction::Missed));
        table.insert(user, start, row.finish())?;
    }
    Ok(table)
}

pub fn extract_sms_features(messages: &[MessageRecord], window: &WindowSpec) -> Result<FeatureTable> {
    let mut counts: BTreeMap<(String, Timestamp), (f64, f64)> = BTreeMap::new();
    for m in messages {
        let c = counts
            .entry((m.user.clone(), window.window_start(m.time)))
            .or_default();
        if m.incoming {
            c.0 += 1.0;
        } else {
            c.1 += 1.0;
        }
    }
    let mut table = FeatureTable::new(SMS_FEATURES.iter().copied());
    for ((user, start), (inc, out)) in counts {
        table.insert(user, start, vec![Some(inc + out), Some(inc), Some(out)])?;
    }
    Ok(table)
}

pub fn extract_audio_features(
    snippets: &[AudioSnippet],
    window: &WindowSpec,
    config: &AudioConfig,
) -> Result<FeatureTable> {
    config.check()?;
    let mut snippets = snippets.to_vec();
    snippets.sort_by(|a, b| {
        (&a.user, a.time)
            .cmp(&(&b.user, b.time))
            .then(a.db.total_cmp(&b.db))
            .then(a.freq.total_cmp(&b.freq))
    });
    let mut table = FeatureTable::new(AUDIO_FEATURES.iter().copied());
    for (user, start, range) in window_runs(&snippets, window, |s| (s.user.as_str(), s.time)) {
        let s = &snippets[range];
        let count = |class| s.iter().filter(|x| classify_snippet(x, config) == class).count() as f64;
        let freq = Summary::of(&s.iter().map(|x| x.freq).collect::<Vec<_>>());
        let db = Summary::of(&s.iter().map(|x| x.db).collect::<Vec<_>>());
        let mut row = RowBuilder::new(AUDIO_FEATURES);
        row.set("count_silent", count(AudioClass::Silent))
            .set("count_speech", count(AudioClass::Speech))
            .set("count_loud", count(AudioClass::Loud))
            .set("count_other", count(AudioClass::Other))
            .set("freq_min", freq.min)
            .set("freq_max", freq.max)
            .set("freq_mean", freq.mean)
            .set("freq_median", freq.median)
            .set("freq_std", freq.std)
            .set("db_min", db.min)
            .set("db_max", db.max)
            .set("db_mean", db.mean)
            .set("db_median", db.median)
            .set("db_std", db.std);
        table.insert(user, start, row.finish())?;
    }
    Ok(table)
}
