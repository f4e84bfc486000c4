//! Property tests for the per-module invariants.

use std::collections::BTreeSet;

use behav_core::analysis::{correlate, join_features, pearson, spearman, Method};
use behav_core::comm::{extract_call_features, CallRecord, Direction};
use behav_core::exploration::{categorical_counts, missingness};
use behav_core::ingest::{read_csv_from, SourceSpec, TimeFormat};
use behav_core::location::{
    bin_fixes, cluster_places, extract_location_features, is_static, split_static_moving,
    LocationConfig, LocationFix,
};
use behav_core::schema::group_scan;
use behav_core::tracker::{extract_step_features, score_survey, ScoreMap, StepSample, SurveyAnswer};
use behav_core::usage::{
    app_durations, extract_battery_features, extract_screen_features, AppEvent, BatterySample,
    ScreenEvent, UsageConfig,
};
use behav_core::{validate, Alignment, Column, FeatureTable, ObservationTable, Timestamp, WindowSpec};
use proptest::prelude::*;

const T0: i64 = 1_600_000_000_000;
const MIN: i64 = 60_000;
const DAY: i64 = 86_400_000;

fn ts(ms: i64) -> Timestamp {
    Timestamp::from_millis(ms).unwrap()
}

fn day() -> WindowSpec {
    WindowSpec::new(86_400, Alignment::Epoch, 0).unwrap()
}

/// `(user index, ms offset, value)` rows as a table with an integer payload.
fn table(rows: &[(usize, i64, i64)]) -> ObservationTable {
    ObservationTable::from_columns([
        (
            "user",
            Column::Str(rows.iter().map(|r| Some(format!("u{}", r.0))).collect()),
        ),
        ("time", Column::Time(rows.iter().map(|r| Some(ts(T0 + r.1))).collect())),
        ("value", Column::Int(rows.iter().map(|r| Some(r.2)).collect())),
    ])
    .unwrap()
}

fn row_multiset(t: &ObservationTable) -> Vec<(String, i64, i64)> {
    let value = t.column("value").unwrap();
    let mut rows: Vec<_> = (0..t.len())
        .map(|i| {
            (
                t.user_at(i).unwrap().to_string(),
                t.time_at(i).unwrap().millis(),
                value.f64_at(i).unwrap() as i64,
            )
        })
        .collect();
    rows.sort();
    rows
}

fn rows_strategy() -> impl Strategy<Value = Vec<(usize, i64, i64)>> {
    prop::collection::vec((0..3usize, 0..(5 * DAY), -100..100i64), 0..60)
}

fn window_strategy() -> impl Strategy<Value = WindowSpec> {
    (1..2_000_000i64, any::<bool>(), -720..=840i32).prop_map(|(w, local, tz)| {
        let alignment = if local { Alignment::LocalMidnight } else { Alignment::Epoch };
        WindowSpec::new(w, alignment, tz).unwrap()
    })
}

fn fixes_strategy() -> impl Strategy<Value = Vec<LocationFix>> {
    // A walk between three nearby places, one fix every 1-15 minutes.
    prop::collection::vec((1..15i64, 0..3usize, -2e-4..2e-4f64, -2e-4..2e-4f64), 1..150).prop_map(
        |steps| {
            let places = [(52.37, 4.89), (52.39, 4.87), (52.35, 4.93)];
            let mut t = T0;
            steps
                .into_iter()
                .map(|(gap, p, dlat, dlon)| {
                    t += gap * MIN;
                    LocationFix {
                        user: "u".into(),
                        time: ts(t),
                        lat: places[p].0 + dlat,
                        lon: places[p].1 + dlon,
                        speed: None,
                    }
                })
                .collect()
        },
    )
}

fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    // Deterministic Fisher-Yates with a small LCG.
    let mut out = items.to_vec();
    let mut s = seed | 1;
    for i in (1..out.len()).rev() {
        s = s.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        out.swap(i, (s >> 33) as usize % (i + 1));
    }
    out
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

proptest! {
    #[test]
    fn validate_is_idempotent(rows in rows_strategy()) {
        let once = validate(&table(&rows)).unwrap();
        prop_assert_eq!(validate(&once).unwrap(), once);
    }

    #[test]
    fn validate_only_permutes_rows(rows in rows_strategy()) {
        let t = table(&rows);
        let v = validate(&t).unwrap();
        prop_assert_eq!(row_multiset(&v), row_multiset(&t));
        for i in 1..v.len() {
            let a = (v.user_at(i - 1).unwrap(), v.time_at(i - 1).unwrap());
            let b = (v.user_at(i).unwrap(), v.time_at(i).unwrap());
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn windows_tile_time(t in 0..4_000_000_000_000i64, w in window_strategy()) {
        let start = w.window_start(ts(t)).millis();
        prop_assert!(start <= t && t < start + w.width_ms());
        if start >= 0 {
            prop_assert_eq!(w.window_start(ts(start)).millis(), start);
        }
    }

    #[test]
    fn group_scan_ignores_row_order(rows in rows_strategy(), seed in any::<u64>()) {
        let sum = |t: &ObservationTable, idx: &[usize]| -> i64 {
            let col = t.column("value").unwrap();
            idx.iter().map(|&i| col.f64_at(i).unwrap() as i64).sum()
        };
        let a = group_scan(&table(&rows), &["user"], sum).unwrap();
        let b = group_scan(&table(&shuffled(&rows, seed)), &["user"], sum).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for ((ka, va), (kb, vb)) in a.iter().zip(&b) {
            prop_assert_eq!(format!("{ka:?}"), format!("{kb:?}"));
            prop_assert_eq!(va, vb);
        }
    }

    #[test]
    fn csv_ingest_keeps_the_row_multiset(rows in rows_strategy()) {
        let mut text = String::from("user,time,value\n");
        for (u, t, v) in &rows {
            text.push_str(&format!("u{u},{},{v}\n", T0 + t));
        }
        let spec = SourceSpec::csv("rows.csv").with_time_format(TimeFormat::EpochMs);
        let read = read_csv_from(text.as_bytes(), &spec).unwrap();
        prop_assert_eq!(row_multiset(&read), row_multiset(&table(&rows)));
    }

    #[test]
    fn place_counts_are_consistent(fixes in fixes_strategy()) {
        let cfg = LocationConfig::default();
        let (static_bins, _) = split_static_moving(&bin_fixes(&fixes, &cfg), &cfg);
        let c = cluster_places(&static_bins, &cfg, 0);
        let clustered = c.labels.iter().filter(|&&l| l >= 0).count();
        prop_assert_eq!(c.places.iter().map(|p| p.bin_count).sum::<usize>(), clustered);
        prop_assert!(c.places.iter().filter(|p| p.is_home).count() <= 1);

        let f = extract_location_features(&fixes, &day(), &cfg).unwrap();
        for row in f.rows() {
            let get = |n: &str| row.values[f.index_of(n).unwrap()].unwrap();
            for k in 1..5 {
                let (this, next) = (get(&format!("n_top{k}")), get(&format!("n_top{}", k + 1)));
                prop_assert!(this >= next);
            }
            if get("n_sig_places") <= 1.0 {
                prop_assert_eq!(get("n_transitions"), 0.0);
            }
            let e = get("entropy_normalized");
            prop_assert!((0.0..=1.0).contains(&e));
            prop_assert_eq!(e == 0.0, get("n_sig_places") <= 1.0);
        }
    }

    #[test]
    fn clustering_ignores_input_order(fixes in fixes_strategy(), seed in any::<u64>()) {
        let cfg = LocationConfig::default();
        let (static_bins, _) = split_static_moving(&bin_fixes(&fixes, &cfg), &cfg);
        let shuffled_bins = shuffled(&static_bins, seed);
        let a = cluster_places(&static_bins, &cfg, 0);
        let b = cluster_places(&shuffled_bins, &cfg, 0);
        prop_assert_eq!(&a.places, &b.places);
        for (i, bin) in shuffled_bins.iter().enumerate() {
            let j = static_bins.iter().position(|x| x == bin).unwrap();
            prop_assert_eq!(b.labels[i], a.labels[j]);
        }
    }

    #[test]
    fn longitude_shift_changes_nothing(fixes in fixes_strategy(), shift in -50.0..50.0f64) {
        let cfg = LocationConfig::default();
        let moved: Vec<LocationFix> = fixes
            .iter()
            .map(|f| LocationFix { lon: f.lon + shift, ..f.clone() })
            .collect();
        let a = extract_location_features(&fixes, &day(), &cfg).unwrap();
        let b = extract_location_features(&moved, &day(), &cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        let names = ["dist_total", "speed_average", "speed_max", "speed_variance",
            "n_sig_places", "n_top1", "n_top2", "n_transitions", "entropy_normalized"];
        for (ra, rb) in a.rows().iter().zip(b.rows()) {
            for n in names {
                let i = a.index_of(n).unwrap();
                match (ra.values[i], rb.values[i]) {
                    (Some(x), Some(y)) => prop_assert!(close(x, y, 1e-6), "{n}: {x} vs {y}"),
                    (x, y) => prop_assert_eq!(x, y, "{}", n),
                }
            }
        }
    }

    #[test]
    fn static_count_grows_with_threshold(fixes in fixes_strategy(), lo in 0.01..5.0f64, extra in 0.0..5.0f64) {
        let cfg = LocationConfig::default();
        let bins = bin_fixes(&fixes, &cfg);
        let count = |threshold: f64| {
            let c = LocationConfig { speed_threshold: threshold, ..cfg.clone() };
            bins.iter().filter(|b| is_static(b, &c)).count()
        };
        prop_assert!(count(lo) <= count(lo + extra));
    }

    #[test]
    fn session_time_fits_in_window(events in prop::collection::vec((0..(3 * DAY), 0..4i64), 0..80)) {
        let events: Vec<ScreenEvent> = events
            .into_iter()
            .map(|(t, status)| ScreenEvent { user: "u".into(), time: ts(T0 + t), status })
            .collect();
        let cfg = UsageConfig::default();
        let f = extract_screen_features(&events, &day(), &cfg).unwrap().features;
        let limit = 86_400.0 + cfg.session_max as f64;
        for v in f.column("dur_sum").unwrap().into_iter().flatten() {
            prop_assert!((0.0..=limit).contains(&v));
        }
    }

    #[test]
    fn battery_counts_and_discharge(drops in prop::collection::vec((1..30i64, 0.0..3.0f64), 1..100)) {
        let mut level = 100.0;
        let mut t = T0;
        let samples: Vec<BatterySample> = drops
            .into_iter()
            .map(|(gap, d)| {
                t += gap * MIN;
                level = (level - d).max(0.0);
                BatterySample { user: "u".into(), time: ts(t), level, status: None }
            })
            .collect();
        let f = extract_battery_features(&samples, &day()).unwrap().features;
        let total: f64 = f.column("occurrence").unwrap().into_iter().flatten().sum();
        prop_assert_eq!(total, samples.len() as f64);
        for v in f.column("charge_diff_min").unwrap().into_iter().flatten() {
            prop_assert!(v <= 0.0);
        }
        for v in f.column("charge_diff_mean").unwrap().into_iter().flatten() {
            prop_assert!(v <= 0.0);
        }
    }

    #[test]
    fn app_durations_are_bounded(
        apps in prop::collection::vec((0..(2 * DAY), 0..3usize), 0..60),
        screen in prop::collection::vec((0..(2 * DAY), 0..4i64), 0..30),
        timeout in 1..2_000i64,
    ) {
        let names = ["a", "b", "c"];
        let events: Vec<AppEvent> = apps
            .iter()
            .map(|&(t, a)| AppEvent {
                user: "u".into(),
                time: ts(T0 + t),
                app: names[a].into(),
                group: "other".into(),
            })
            .collect();
        let screen: Vec<ScreenEvent> = screen
            .iter()
            .map(|&(t, status)| ScreenEvent { user: "u".into(), time: ts(T0 + t), status })
            .collect();
        let cfg = UsageConfig { app_timeout: timeout, ..UsageConfig::default() };
        let mut sorted = events.clone();
        sorted.sort_by(|x, y| (x.time, &x.app).cmp(&(y.time, &y.app)));
        for with_screen in [None, Some(screen.as_slice())] {
            for d in app_durations(&sorted, with_screen, &cfg) {
                prop_assert!(d >= 0.0 && d <= timeout as f64, "{d}");
            }
        }
    }

    #[test]
    fn call_totals_and_ratio(calls in prop::collection::vec((0..DAY, 1..4u8, 0..900u32), 1..40), at in 0..DAY) {
        let records: Vec<CallRecord> = calls
            .iter()
            .map(|&(t, d, secs)| {
                let direction = match d {
                    1 => Direction::Incoming,
                    2 => Direction::Outgoing,
                    _ => Direction::Missed,
                };
                let duration = if direction == Direction::Missed { 0.0 } else { f64::from(secs) };
                CallRecord { user: "u".into(), time: ts(T0 - T0 % DAY + t), direction, duration }
            })
            .collect();
        let f = extract_call_features(&records, &day()).unwrap();
        prop_assert_eq!(f.len(), 1);
        let start = f.rows()[0].window_start;
        let total: f64 = records
            .iter()
            .filter(|c| c.direction != Direction::Missed)
            .map(|c| c.duration)
            .sum();
        prop_assert_eq!(f.get("u", start, "call_dur_total"), Some(total));

        let mut more = records.clone();
        more.push(CallRecord {
            user: "u".into(),
            time: ts(start.millis() + at),
            direction: Direction::Outgoing,
            duration: 10.0,
        });
        let g = extract_call_features(&more, &day()).unwrap();
        if let (Some(before), Some(after)) =
            (f.get("u", start, "call_out_in_ratio"), g.get("u", start, "call_out_in_ratio"))
        {
            prop_assert!(after >= before);
        }
    }

    #[test]
    fn step_hour_shares_sum_to_one(samples in prop::collection::vec((0..(3 * DAY), 0..2_000u32), 1..80)) {
        let samples: Vec<StepSample> = samples
            .into_iter()
            .map(|(t, s)| StepSample { user: "u".into(), time: ts(T0 + t), steps: f64::from(s) })
            .collect();
        let f = extract_step_features(&samples, 60).unwrap();
        let row = &f.rows()[0];
        let get = |n: &str| row.values[f.index_of(n).unwrap()];
        let shares: Vec<f64> = (0..24).filter_map(|h| get(&format!("hour_dist_{h}"))).collect();
        if samples.iter().any(|s| s.steps > 0.0) {
            prop_assert_eq!(shares.len(), 24);
            prop_assert!(shares.iter().all(|s| (0.0..=1.0).contains(s)));
            prop_assert!((shares.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        let (lo, mid, hi) = (get("steps_daily_min"), get("steps_daily_mean"), get("steps_daily_max"));
        prop_assert!(lo <= mid && mid <= hi);
    }

    #[test]
    fn survey_scores_ignore_answer_order(picks in prop::collection::vec(0..4usize, 1..5), seed in any::<u64>()) {
        let options = ["never", "sometimes", "often", "always"];
        let mut map = ScoreMap::new();
        for (i, o) in options.iter().enumerate() {
            map.insert("q", *o, i as i64);
        }
        let answers: Vec<SurveyAnswer> = picks
            .iter()
            .enumerate()
            .map(|(i, &p)| SurveyAnswer {
                user: "u".into(),
                time: ts(T0 + i as i64 * 1_000),
                instance_id: Some("s1".into()),
                question_id: format!("q{i}"),
                answer: options[p].into(),
            })
            .collect();
        let a = score_survey(&answers, &map).unwrap();
        let b = score_survey(&shuffled(&answers, seed), &map).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a[0].score, picks.iter().sum::<usize>() as i64);
    }

    #[test]
    fn categorical_counts_sum_to_rows(rows in rows_strategy()) {
        let t = validate(&table(&rows)).unwrap();
        let counts = categorical_counts(&t, "value", Some("user")).unwrap();
        prop_assert_eq!(counts.iter().map(|c| c.count).sum::<usize>(), t.len());
    }

    #[test]
    fn extra_observation_never_raises_missingness(
        rows in rows_strategy(),
        extra in (0..3usize, 0..(5 * DAY)),
        w in window_strategy(),
    ) {
        let span = Some((ts(T0), ts(T0 + 5 * DAY)));
        let before = missingness(&validate(&table(&rows)).unwrap(), &w, span).unwrap();
        let mut more = rows.clone();
        more.push((extra.0, extra.1, 0));
        let after = missingness(&validate(&table(&more)).unwrap(), &w, span).unwrap();
        for (user, f) in &before.missing_fraction {
            let g = after.missing_fraction.iter().find(|x| &x.0 == user).unwrap().1;
            prop_assert!(g <= *f, "{user}: {f} -> {g}");
        }
    }

    #[test]
    fn pearson_ignores_positive_affine_maps(
        xy in prop::collection::vec((-50..50i32, -50..50i32), 3..40),
        a in 0.1..10.0f64,
        b in -100.0..100.0f64,
    ) {
        let x: Vec<f64> = xy.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = xy.iter().map(|p| f64::from(p.1)).collect();
        let moved: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        match (pearson(&x, &y), pearson(&moved, &y)) {
            (Some(r), Some(s)) => prop_assert!((r - s).abs() <= 1e-12, "{r} vs {s}"),
            (r, s) => prop_assert_eq!(r, s),
        }
    }

    #[test]
    fn spearman_ignores_monotone_maps(xy in prop::collection::vec((-50..50i32, -50..50i32), 3..40)) {
        let x: Vec<f64> = xy.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = xy.iter().map(|p| f64::from(p.1)).collect();
        let moved: Vec<f64> = x.iter().map(|v| v * v * v + (v / 7.0).exp()).collect();
        prop_assert_eq!(spearman(&x, &y), spearman(&moved, &y));
    }

    #[test]
    fn correlation_matrix_is_symmetric(cells in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, -10..10i32), 4), 0..30)) {
        let mut t = FeatureTable::new(["a", "b", "c", "d"]);
        for (i, row) in cells.iter().enumerate() {
            t.insert("u", ts(T0 + i as i64 * DAY), row.iter().map(|v| v.map(f64::from)).collect()).unwrap();
        }
        for method in [Method::Pearson, Method::Spearman] {
            let m = correlate(&t, method).unwrap();
            for i in 0..4 {
                if let Some(d) = m.get(i, i) {
                    prop_assert_eq!(d, 1.0);
                }
                for j in 0..4 {
                    prop_assert_eq!(m.get(i, j), m.get(j, i));
                }
            }
        }
    }

    #[test]
    fn join_rows_are_the_key_union(
        a in prop::collection::btree_set((0..3usize, 0..10i64), 0..20),
        b in prop::collection::btree_set((0..3usize, 0..10i64), 0..20),
    ) {
        let build = |keys: &BTreeSet<(usize, i64)>| {
            let mut t = FeatureTable::new(["v"]);
            for (u, d) in keys {
                t.insert(format!("u{u}"), ts(T0 + d * DAY), vec![Some(*d as f64)]).unwrap();
            }
            t
        };
        let joined = join_features(&[("x", &build(&a)), ("y", &build(&b))]).unwrap();
        prop_assert_eq!(joined.len(), a.union(&b).count());
        prop_assert_eq!(joined.names(), &["v_x".to_string(), "v_y".to_string()]);
    }
}
