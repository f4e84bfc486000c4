//! Fitness-tracker step features and survey scores.
//!
//! Both produce one row per user. The row's `window_start` is the local
//! midnight of the user's first observation.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureTable, RowBuilder};
use crate::schema::{user_runs, ObservationTable, Timestamp};
use crate::stats::{self, Summary};

pub const STEP_FEATURES: &[&str] = &[
    "steps_daily_mean",
    "steps_daily_std",
    "steps_daily_min",
    "steps_daily_max",
    "hour_dist_0",
    "hour_dist_1",
    "hour_dist_2",
    "hour_dist_3",
    "hour_dist_4",
    "hour_dist_5",
    "hour_dist_6",
    "hour_dist_7",
    "hour_dist_8",
    "hour_dist_9",
    "hour_dist_10",
    "hour_dist_11",
    "hour_dist_12",
    "hour_dist_13",
    "hour_dist_14",
    "hour_dist_15",
    "hour_dist_16",
    "hour_dist_17",
    "hour_dist_18",
    "hour_dist_19",
    "hour_dist_20",
    "hour_dist_21",
    "hour_dist_22",
    "hour_dist_23",
];

pub const SURVEY_FEATURES: &[&str] = &["score_min", "score_max", "score_mean", "score_std"];

/// Steps counted over one sampling interval (not a cumulative counter).
#[derive(Clone, Debug, PartialEq)]
pub struct StepSample {
    pub user: String,
    pub time: Timestamp,
    pub steps: f64,
}

impl StepSample {
    pub fn from_table(table: &ObservationTable) -> Result<Vec<StepSample>> {
        let keys = table.keys()?;
        let steps = table.numbers("steps")?;
        keys.into_iter()
            .enumerate()
            .map(|(row, (user, time))| {
                if !steps[row].is_finite() || steps[row] < 0.0 {
                    return Err(Error::invalid("steps", row, "step count must be non-negative"));
                }
                Ok(StepSample {
                    user: user.to_string(),
                    time,
                    steps: steps[row],
                })
            })
            .collect()
    }
}

/// Daily-total statistics and the share of steps per local hour of day.
/// Days without samples are not counted.
pub fn extract_step_features(samples: &[StepSample], tz_offset_min: i32) -> Result<FeatureTable> {
    let mut samples = samples.to_vec();
    samples.sort_by(|a, b| {
        (&a.user, a.time)
            .cmp(&(&b.user, b.time))
            .then(a.steps.total_cmp(&b.steps))
    });
    let mut table = FeatureTable::new(STEP_FEATURES.iter().copied());
    for range in user_runs(&samples, |s| s.user.as_str()) {
        let s = &samples[range];
        let mut daily: BTreeMap<Timestamp, f64> = BTreeMap::new();
        let mut hourly = [0.0; 24];
        for x in s {
            *daily.entry(x.time.local_midnight(tz_offset_min)).or_default() += x.steps;
            hourly[x.time.local_hour(tz_offset_min) as usize] += x.steps;
        }
        let totals: Vec<f64> = daily.values().copied().collect();
        let sum: f64 = hourly.iter().sum();
        let summary = Summary::of(&totals);
        let mut row = RowBuilder::new(STEP_FEATURES);
        row.set("steps_daily_mean", summary.mean)
            .set("steps_daily_std", summary.std)
            .set("steps_daily_min", summary.min)
            .set("steps_daily_max", summary.max);
        for (h, v) in hourly.iter().enumerate() {
            row.set(STEP_FEATURES[4 + h], (sum > 0.0).then(|| v / sum));
        }
        table.insert(
            s[0].user.clone(),
            s[0].time.local_midnight(tz_offset_min),
            row.finish(),
        )?;
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurveyAnswer {
    pub user: String,
    pub time: Timestamp,
    pub instance_id: Option<String>,
    pub question_id: String,
    pub answer: String,
}

impl SurveyAnswer {
    pub fn from_table(table: &ObservationTable) -> Result<Vec<SurveyAnswer>> {
        let keys = table.keys()?;
        let instances = table.opt_strings("instance_id")?;
        let questions = table.strings("question_id")?;
        let answers = table.strings("answer")?;
        Ok(keys
            .into_iter()
            .enumerate()
            .map(|(row, (user, time))| SurveyAnswer {
                user: user.to_string(),
                time,
                instance_id: instances[row].map(str::to_string),
                question_id: questions[row].to_string(),
                answer: answers[row].to_string(),
            })
            .collect())
    }

    /// The explicit instance id, or `@<epoch ms>` of the submission.
    pub fn instance_key(&self) -> String {
        match &self.instance_id {
            Some(id) => id.clone(),
            None => format!("@{}", self.time.millis()),
        }
    }
}

/// `(question prefix, answer) → score`, resolved by the longest matching
/// prefix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreMap {
    entries: BTreeMap<(String, String), i64>,
}

impl ScoreMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prefix: impl Into<String>, answer: impl Into<String>, score: i64) {
        self.entries.insert((prefix.into(), answer.into()), score);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, question_id: &str, answer: &str) -> Option<i64> {
        self.entries
            .iter()
            .filter(|((p, a), _)| a == answer && question_id.starts_with(p.as_str()))
            .max_by_key(|((p, _), _)| p.len())
            .map(|(_, &s)| s)
    }

    /// Reads a `prefix,answer,score` CSV.
    pub fn read_csv<R: Read>(reader: R, path: &Path) -> Result<ScoreMap> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers().map_err(csv_err)?.clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Schema(name.to_string()))
        };
        let (p, a, s) = (find("prefix")?, find("answer")?, find("score")?);
        let mut map = ScoreMap::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let score = rec[s].trim().parse::<i64>().map_err(|e| Error::Parse {
                row,
                column: "score".into(),
                message: e.to_string(),
            })?;
            map.insert(&rec[p], &rec[a], score);
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<ScoreMap> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurveyScore {
    pub user: String,
    pub instance: String,
    /// Earliest answer time of the instance.
    pub time: Timestamp,
    pub score: i64,
}

/// Sums mapped answer scores per (user, instance). Fails on the first
/// unmapped answer in (user, instance, question) order, and on a question
/// answered twice within one instance.
pub fn score_survey(answers: &[SurveyAnswer], map: &ScoreMap) -> Result<Vec<SurveyScore>> {
    let mut grouped: BTreeMap<(&str, String), BTreeMap<&str, &SurveyAnswer>> = BTreeMap::new();
    for (row, a) in answers.iter().enumerate() {
        let inst = grouped
            .entry((a.user.as_str(), a.instance_key()))
            .or_default();
        if inst.insert(a.question_id.as_str(), a).is_some() {
            return Err(Error::invalid(
                "question_id",
                row,
                format!("question answered twice in instance {}", a.instance_key()),
            ));
        }
    }
    grouped
        .into_iter()
        .map(|((user, instance), qs)| {
            let mut score = 0;
            for a in qs.values() {
                score += map
                    .lookup(&a.question_id, &a.answer)
                    .ok_or_else(|| Error::UnmappedAnswer {
                        instance_id: instance.clone(),
                        question_id: a.question_id.clone(),
                        answer: a.answer.clone(),
                    })?;
            }
            let time = qs.values().map(|a| a.time).min().expect("non-empty instance");
            Ok(SurveyScore {
                user: user.to_string(),
                instance,
                time,
                score,
            })
        })
        .collect()
}

/// Score range, mean and spread per user.
pub fn extract_survey_features(scores: &[SurveyScore], tz_offset_min: i32) -> Result<FeatureTable> {
    let mut by_user: BTreeMap<&str, Vec<&SurveyScore>> = BTreeMap::new();
    for s in scores {
        by_user.entry(s.user.as_str()).or_default().push(s);
    }
    let mut table = FeatureTable::new(SURVEY_FEATURES.iter().copied());
    for (user, list) in by_user {
        let values: Vec<f64> = list.iter().map(|s| s.score as f64).collect();
        let first = list.iter().map(|s| s.time).min().expect("non-empty");
        let mut row = RowBuilder::new(SURVEY_FEATURES);
        row.set("score_min", stats::min(&values))
            .set("score_max", stats::max(&values))
            .set("score_mean", stats::mean(&values))
            .set("score_std", stats::std_dev(&values));
        table.insert(user, first.local_midnight(tz_offset_min), row.finish())?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: i64 = 3_600_000;

    fn step(ms: i64, steps: f64) -> StepSample {
        StepSample {
            user: "u".into(),
            time: Timestamp::from_millis(ms).unwrap(),
            steps,
        }
    }

    fn answer(inst: &str, q: &str, a: &str) -> SurveyAnswer {
        SurveyAnswer {
            user: "u".into(),
            time: Timestamp::from_millis(1000).unwrap(),
            instance_id: Some(inst.into()),
            question_id: q.into(),
            answer: a.into(),
        }
    }

    fn phq() -> ScoreMap {
        let mut m = ScoreMap::new();
        for (i, a) in ["never", "several days", "more than half", "nearly every day"]
            .iter()
            .enumerate()
        {
            m.insert("phq", *a, i as i64);
        }
        m
    }

    #[test]
    fn two_equal_days() {
        let t = extract_step_features(&[step(9 * H, 100.0), step(33 * H, 100.0)], 0).unwrap();
        let get = |n| t.get("u", Timestamp::EPOCH, n);
        assert_eq!(get("steps_daily_mean"), Some(100.0));
        assert_eq!(get("steps_daily_std"), Some(0.0));
        assert_eq!(get("steps_daily_min"), Some(100.0));
        assert_eq!(get("steps_daily_max"), Some(100.0));
        assert_eq!(get("hour_dist_9"), Some(1.0));
        assert_eq!(get("hour_dist_10"), Some(0.0));
        assert!(extract_step_features(&[], 0).unwrap().is_empty());
    }

    #[test]
    fn timezone_moves_hours_and_days() {
        // 23:00 UTC is 01:00 on the next local day at +120, the same day as
        // 10:00 UTC.
        let t = extract_step_features(&[step(23 * H, 50.0), step(24 * H + 10 * H, 50.0)], 120)
            .unwrap();
        let row = &t.rows()[0];
        assert_eq!(row.window_start.millis(), 22 * H);
        let get = |n| t.get("u", row.window_start, n);
        assert_eq!(get("hour_dist_1"), Some(0.5));
        assert_eq!(get("hour_dist_12"), Some(0.5));
        assert_eq!(get("steps_daily_mean"), Some(100.0));
        assert_eq!(get("steps_daily_std"), None);
    }

    #[test]
    fn zero_steps_leave_distribution_absent() {
        let t = extract_step_features(&[step(0, 0.0)], 0).unwrap();
        assert_eq!(t.get("u", Timestamp::EPOCH, "hour_dist_0"), None);
        assert_eq!(t.get("u", Timestamp::EPOCH, "steps_daily_mean"), Some(0.0));
    }

    #[test]
    fn summed_instance() {
        let answers = [
            answer("i1", "phq_1", "several days"),
            answer("i1", "phq_2", "more than half"),
            answer("i1", "phq_3", "more than half"),
        ];
        let scores = score_survey(&answers, &phq()).unwrap();
        assert_eq!(scores.len(), 1);
        assert_eq!(scores[0].score, 5);
    }

    #[test]
    fn unmapped_answer() {
        match score_survey(&[answer("i1", "phq_1", "sometimes")], &phq()) {
            Err(Error::UnmappedAnswer {
                instance_id,
                question_id,
                answer,
            }) => {
                assert_eq!((instance_id.as_str(), question_id.as_str()), ("i1", "phq_1"));
                assert_eq!(answer, "sometimes");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_question_is_rejected() {
        let a = [answer("i1", "phq_1", "never"), answer("i1", "phq_1", "never")];
        assert!(score_survey(&a, &phq()).is_err());
    }

    #[test]
    fn longest_prefix_wins() {
        let mut m = phq();
        m.insert("phq_9", "never", 3);
        assert_eq!(m.lookup("phq_9", "never"), Some(3));
        assert_eq!(m.lookup("phq_1", "never"), Some(0));
        assert_eq!(m.lookup("gad_1", "never"), None);
    }

    #[test]
    fn timestamp_fallback_groups_instances() {
        let mut a = answer("x", "phq_1", "nearly every day");
        a.instance_id = None;
        let mut b = a.clone();
        b.question_id = "phq_2".into();
        let mut c = a.clone();
        c.time = Timestamp::from_millis(5000).unwrap();
        let scores = score_survey(&[a, b, c], &phq()).unwrap();
        assert_eq!(scores.len(), 2);
        assert_eq!(scores[0].instance, "@1000");
        assert_eq!(scores[0].score, 6);
        assert_eq!(scores[1].score, 3);
    }

    #[test]
    fn survey_statistics() {
        let mk = |instance: &str, score| SurveyScore {
            user: "u".into(),
            instance: instance.into(),
            time: Timestamp::from_millis(1000).unwrap(),
            score,
        };
        let t = extract_survey_features(&[mk("a", 5), mk("b", 7)], 0).unwrap();
        let get = |n| t.get("u", Timestamp::EPOCH, n);
        assert_eq!(get("score_min"), Some(5.0));
        assert_eq!(get("score_max"), Some(7.0));
        assert_eq!(get("score_mean"), Some(6.0));
        assert_eq!(get("score_std"), Some(std::f64::consts::SQRT_2));
        let one = extract_survey_features(&[mk("a", 5)], 0).unwrap();
        assert_eq!(one.get("u", Timestamp::EPOCH, "score_std"), None);
    }

    #[test]
    fn score_map_csv() {
        let text = "prefix,answer,score\nphq,never,0\nphq,often,2\n";
        let m = ScoreMap::read_csv(text.as_bytes(), Path::new("map.csv")).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.lookup("phq_4", "often"), Some(2));
        let bad = "prefix,answer,score\nphq,never,x\n";
        assert!(matches!(
            ScoreMap::read_csv(bad.as_bytes(), Path::new("m.csv")),
            Err(Error::Parse { row: 0, .. })
        ));
    }
}
