//! Deterministic synthetic datasets, one generator per sensor.
//!
//! Every generator starts at [`SAMPLE_START_MS`] (a Thursday, so 7-day epoch
//! windows line up with sample weeks) and writes times in UTC.
//!
//! Value ranges:
//! - location: fixes every 5 min (10 % dropped) around a home near
//!   60.17 N 24.94 E, a workplace ~4 km away and three leisure places.
//!   Days in `[days * 5 / 8, days * 7 / 8)` are travel days with roughly
//!   200 km of driving each; the last travel day ends at home. With 56 days this is
//!   weeks 6 and 7.
//! - screen: 15–40 sessions per day between 07:00 and 23:00, AWARE codes.
//! - battery: a sample every 10 min, 0–100 %, charging overnight, roughly one
//!   shutdown (`-1`) every ten days.
//! - app: 40–90 foreground events per day over six apps.
//! - call: 0–5 calls per day, direction 1/2/3, missed calls last 0 s.
//! - sms: 0–8 messages per day, `incoming` / `outgoing`.
//! - audio: one snippet every 10 min, 30–85 dB, 40–400 Hz.
//! - steps: hourly counts 07:00–22:00, 0–1500 steps.
//! - survey: one four-question instance every third day at 20:00, answers
//!   scored by [`score_map_csv`].

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schema::{validate, Column, ObservationTable, Timestamp};
use crate::sensor::Sensor;

/// 2020-01-02T00:00:00Z.
pub const SAMPLE_START_MS: i64 = 1_577_923_200_000;

const MIN_MS: i64 = 60_000;
const HOUR_MS: i64 = 3_600_000;
const DAY_MS: i64 = 86_400_000;

const APPS: [&str; 6] = [
    "com.whatsapp",
    "com.android.chrome",
    "com.spotify.music",
    "com.google.android.gm",
    "com.instagram.android",
    "com.android.dialer",
];

const ANSWERS: [&str; 4] = [
    "not at all",
    "several days",
    "more than half the days",
    "nearly every day",
];

/// Score map for the sample survey, as `prefix,answer,score` CSV.
pub fn score_map_csv() -> String {
    let mut s = String::from("prefix,answer,score\n");
    for (i, a) in ANSWERS.iter().enumerate() {
        s.push_str(&format!("phq,{a},{i}\n"));
    }
    s
}

enum Buf {
    Int(Vec<Option<i64>>),
    Float(Vec<Option<f64>>),
    Str(Vec<Option<String>>),
}

struct Builder {
    users: Vec<Option<String>>,
    times: Vec<Option<Timestamp>>,
    cols: Vec<(&'static str, Buf)>,
}

enum Cell {
    I(i64),
    F(f64),
    S(String),
}

impl Builder {
    fn new(cols: &[(&'static str, u8)]) -> Self {
        Builder {
            users: Vec::new(),
            times: Vec::new(),
            cols: cols
                .iter()
                .map(|&(n, k)| {
                    let b = match k {
                        b'i' => Buf::Int(Vec::new()),
                        b'f' => Buf::Float(Vec::new()),
                        _ => Buf::Str(Vec::new()),
                    };
                    (n, b)
                })
                .collect(),
        }
    }

    fn push(&mut self, user: &str, t: i64, cells: Vec<Cell>) {
        self.users.push(Some(user.to_string()));
        self.times.push(Timestamp::from_millis(t));
        for ((_, buf), cell) in self.cols.iter_mut().zip(cells) {
            match (buf, cell) {
                (Buf::Int(v), Cell::I(x)) => v.push(Some(x)),
                (Buf::Float(v), Cell::F(x)) => v.push(Some(x)),
                (Buf::Str(v), Cell::S(x)) => v.push(Some(x)),
                _ => unreachable!("cell kind matches column kind"),
            }
        }
    }

    fn finish(self) -> ObservationTable {
        let mut cols = vec![
            ("user", Column::Str(self.users)),
            ("time", Column::Time(self.times)),
        ];
        for (name, buf) in self.cols {
            cols.push((
                name,
                match buf {
                    Buf::Int(v) => Column::Int(v),
                    Buf::Float(v) => Column::Float(v),
                    Buf::Str(v) => Column::Str(v),
                },
            ));
        }
        let table = ObservationTable::from_columns(cols).expect("generator columns agree");
        validate(&table).expect("generator output is valid")
    }
}

/// Synthetic observations for `n_users` users over `days` days.
///
/// # Panics
/// If `n_users` or `days` is zero.
pub fn generate_sample(sensor: Sensor, n_users: usize, days: usize, seed: u64) -> ObservationTable {
    assert!(n_users >= 1 && days >= 1, "need at least one user and one day");
    let mut b = match sensor {
        Sensor::Location => Builder::new(&[("lat", b'f'), ("lon", b'f')]),
        Sensor::Screen => Builder::new(&[("status", b'i')]),
        Sensor::Battery => Builder::new(&[("level", b'i'), ("status", b'i')]),
        Sensor::App => Builder::new(&[("app", b's')]),
        Sensor::Call => Builder::new(&[("direction", b'i'), ("duration", b'i')]),
        Sensor::Sms => Builder::new(&[("direction", b's')]),
        Sensor::Audio => Builder::new(&[("db", b'f'), ("freq", b'f')]),
        Sensor::Steps => Builder::new(&[("steps", b'i')]),
        Sensor::Survey => Builder::new(&[
            ("instance_id", b's'),
            ("question_id", b's'),
            ("answer", b's'),
        ]),
    };
    for u in 0..n_users {
        let user = format!("user_{:02}", u + 1);
        let user_seed = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((u as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03))
            ^ sensor as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(user_seed);
        match sensor {
            Sensor::Location => location(&mut b, &user, days, &mut rng),
            Sensor::Screen => screen(&mut b, &user, days, &mut rng),
            Sensor::Battery => battery(&mut b, &user, days, &mut rng),
            Sensor::App => app(&mut b, &user, days, &mut rng),
            Sensor::Call => call(&mut b, &user, days, &mut rng),
            Sensor::Sms => sms(&mut b, &user, days, &mut rng),
            Sensor::Audio => audio(&mut b, &user, days, &mut rng),
            Sensor::Steps => steps(&mut b, &user, days, &mut rng),
            Sensor::Survey => survey(&mut b, &user, days, &mut rng),
        }
    }
    b.finish()
}

type Place = (f64, f64);

/// Piecewise itinerary for one day: stays and straight-line moves, hours local.
enum Leg {
    Stay(f64, f64, Place),
    Move(f64, f64, Place, Place),
}

fn position(legs: &[Leg], hour: f64) -> Place {
    for leg in legs {
        match *leg {
            Leg::Stay(a, b, p) if hour >= a && hour < b => return p,
            Leg::Move(a, b, from, to) if hour >= a && hour < b => {
                let f = (hour - a) / (b - a);
                return (from.0 + (to.0 - from.0) * f, from.1 + (to.1 - from.1) * f);
            }
            _ => {}
        }
    }
    match legs.last() {
        Some(Leg::Stay(_, _, p)) | Some(Leg::Move(_, _, _, p)) => *p,
        None => (0.0, 0.0),
    }
}

fn location(b: &mut Builder, user: &str, days: usize, rng: &mut ChaCha8Rng) {
    let home = (60.17 + rng.gen_range(-0.02..0.02), 24.94 + rng.gen_range(-0.04..0.04));
    let work = (home.0 + rng.gen_range(0.025..0.035), home.1 + rng.gen_range(0.03..0.05));
    let leisure: Vec<Place> = (0..3)
        .map(|_| (home.0 + rng.gen_range(-0.03..0.03), home.1 + rng.gen_range(-0.06..0.06)))
        .collect();
    let travel = (days * 5 / 8)..(days * 7 / 8);
    let mut hotel = home;

    for day in 0..days {
        let weekday = (day + 3) % 7; // day 0 is a Thursday; 0 = Monday
        let legs = if travel.contains(&day) {
            let east = if hotel.1 > home.1 + 1.5 { -1.0 } else { 1.0 };
            let site = (
                hotel.0 + rng.gen_range(-0.8..0.8),
                hotel.1 + east * rng.gen_range(1.0..1.6),
            );
            let next = if day + 1 == travel.end {
                home
            } else {
                (site.0 + rng.gen_range(-0.3..0.3), site.1 + rng.gen_range(-0.3..0.3))
            };
            let legs = vec![
                Leg::Stay(0.0, 8.0, hotel),
                Leg::Move(8.0, 11.0, hotel, site),
                Leg::Stay(11.0, 15.0, site),
                Leg::Move(15.0, 18.0, site, next),
                Leg::Stay(18.0, 24.0, next),
            ];
            hotel = next;
            legs
        } else if weekday < 5 {
            let mut legs = vec![
                Leg::Stay(0.0, 8.0, home),
                Leg::Move(8.0, 8.5, home, work),
                Leg::Stay(8.5, 16.5, work),
                Leg::Move(16.5, 17.0, work, home),
            ];
            if rng.gen_bool(0.4) {
                let p = *leisure.choose(rng).expect("leisure places");
                legs.push(Leg::Stay(17.0, 18.0, home));
                legs.push(Leg::Move(18.0, 18.25, home, p));
                legs.push(Leg::Stay(18.25, 20.0, p));
                legs.push(Leg::Move(20.0, 20.25, p, home));
                legs.push(Leg::Stay(20.25, 24.0, home));
            } else {
                legs.push(Leg::Stay(17.0, 24.0, home));
            }
            legs
        } else {
            let p = *leisure.choose(rng).expect("leisure places");
            vec![
                Leg::Stay(0.0, 11.0, home),
                Leg::Move(11.0, 11.5, home, p),
                Leg::Stay(11.5, 15.0, p),
                Leg::Move(15.0, 15.5, p, home),
                Leg::Stay(15.5, 24.0, home),
            ]
        };

        let day_start = SAMPLE_START_MS + day as i64 * DAY_MS;
        for slot in 0..288 {
            if rng.gen_bool(0.1) {
                continue;
            }
            let offset = slot * 5 * MIN_MS + rng.gen_range(0..30_000);
            let hour = offset as f64 / HOUR_MS as f64;
            let (lat, lon) = position(&legs, hour);
            let lat = lat + rng.gen_range(-4e-5..4e-5);
            let lon = lon + rng.gen_range(-8e-5..8e-5);
            b.push(user, day_start + offset, vec![Cell::F(round6(lat)), Cell::F(round6(lon))]);
        }
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn screen(b: &mut Builder, user: &str, days: usize, rng: &mut ChaCha8Rng) {
    for day in 0..days {
        let day_start = SAMPLE_START_MS + day as i64 * DAY_MS;
        let n = rng.gen_range(15..40);
        let mut t = day_start + 7 * HOUR_MS;
        let end = day_start + 23 * HOUR_MS;
        for _ in 0..n {
            t += rng.gen_range(MIN_MS..60 * MIN_MS);
            if t >= end {
                break;
            }
            b.push(user, t, vec![Cell::I(1)]);
            if rng.gen_bool(0.7) {
                b.push(user, t + 2_000, vec![Cell::I(3)]);
            }
            t += rng.gen_range(10_000..20 * MIN_MS);
            let closer = if rng.gen_bool(0.1) { 2 } else { 0 };
            b.push(user, t, vec![Cell::I(closer)]);
        }
    }
}

fn battery(b: &mut Builder, user: &str, days: usize, rng: &mut ChaCha8Rng) {
    let mut level: f64 = rng.gen_range(60.0..100.0);
    let mut t = SAMPLE_START_MS;
    let end = SAMPLE_START_MS + days as i64 * DAY_MS;
    while t < end {
        let hour = (t - SAMPLE_START_MS).rem_euclid(DAY_MS) / HOUR_MS;
        let charging = !(7..23).contains(&hour);
        if rng.gen_bool(0.0007) {
            b.push(user, t, vec![Cell::I(level.round() as i64), Cell::I(-1)]);
            t += 30 * MIN_MS;
            continue;
        }
        level = if charging {
            (level + rng.gen_range(1.0..4.0)).min(100.0)
        } else {
            (level - rng.gen_range(0.2..1.2)).max(0.0)
        };
        let status = match (charging, level >= 100.0) {
            (true, true) => 5,
            (true, false) => 2,
            (false, _) => 3,
        };
        b.push(user, t, vec![Cell::I(level.round() as i64), Cell::I(status)]);
        t += 10 * MIN_MS + rng.gen_range(-30_000..30_000);
    }
}

fn app(b: &mut Builder, user: &str, days: usize, rng: &mut ChaCha8Rng) {
    for day in 0..days {
        let mut t = SAMPLE_START_MS + day as i64 * DAY_MS + 7 * HOUR_MS;
        for _ in 0..rng.gen_range(40..90) {
            t += rng.gen_range(10_000..30 * MIN_MS);
            let app = APPS.choose(rng).expect("apps");
            b.push(user, t, vec![Cell::S(app.to_string())]);
        }
    }
}

fn call(b: &mut Builder, user: &str, days: usize, rng: &mut ChaCha8Rng) {
    for day in 0..days {
        let day_start = SAMPLE_START_MS + day as i64 * DAY_MS;
        let mut times: Vec<i64> = (0..rng.gen_range(0..6))
            .map(|_| day_start + rng.gen_range(8 * HOUR_MS..22 * HOUR_MS))
            .collect();
        times.sort_unstable();
        for t in times {
            let direction = match rng.gen_range(0..20) {
                0..=7 => 1,
                8..=16 => 2,
                _ => 3,
            };
            let duration = if direction == 3 { 0 } else { rng.gen_range(10..900) };
            b.push(user, t, vec![Cell::I(direction), Cell::I(duration)]);
        }
    }
}

fn sms(b: &mut Builder, user: &str, days: usize, rng: &mut ChaCha8Rng) {
    for day in 0..days {
        let day_start = SAMPLE_START_MS + day as i64 * DAY_MS;
        for _ in 0..rng.gen_range(0..9) {
            let t = day_start + rng.gen_range(7 * HOUR_MS..24 * HOUR_MS);
            let dir = if rng.gen_bool(0.55) { "incoming" } else { "outgoing" };
            b.push(user, t, vec![Cell::S(dir.to_string())]);
        }
    }
}

fn audio(b: &mut Builder, user: &str, days: usize, rng: &mut ChaCha8Rng) {
    for day in 0..days {
        let day_start = SAMPLE_START_MS + day as i64 * DAY_MS;
        for slot in 0..144 {
            let t = day_start + slot * 10 * MIN_MS + rng.gen_range(0..60_000);
            let night = !(7..23).contains(&(slot / 6));
            let db = if night {
                rng.gen_range(30.0..52.0)
            } else {
                rng.gen_range(42.0..85.0)
            };
            let freq = rng.gen_range(40.0..400.0);
            b.push(user, t, vec![Cell::F(round6(db)), Cell::F(round6(freq))]);
        }
    }
}

fn steps(b: &mut Builder, user: &str, days: usize, rng: &mut ChaCha8Rng) {
    for day in 0..days {
        let day_start = SAMPLE_START_MS + day as i64 * DAY_MS;
        for hour in 7..23 {
            b.push(
                user,
                day_start + hour * HOUR_MS,
                vec![Cell::I(rng.gen_range(0..1500))],
            );
        }
    }
}

fn survey(b: &mut Builder, user: &str, days: usize, rng: &mut ChaCha8Rng) {
    for (k, day) in (0..days).step_by(3).enumerate() {
        let t = SAMPLE_START_MS + day as i64 * DAY_MS + 20 * HOUR_MS;
        let instance = format!("{user}_s{k:03}");
        for q in 1..=4 {
            let answer = ANSWERS.choose(rng).expect("answers");
            b.push(
                user,
                t,
                vec![
                    Cell::S(instance.clone()),
                    Cell::S(format!("phq_{q}")),
                    Cell::S(answer.to_string()),
                ],
            );
        }
    }
}
