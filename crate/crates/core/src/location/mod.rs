//! GPS features: distance and speed over time-binned fixes, and
//! significant places found by density clustering of the static bins.
//!
//! The pipeline per user is
//! 1. [`bin_fixes`]: one representative (median lat/lon) per non-empty bin,
//!    with a speed from the previous representative;
//! 2. [`split_static_moving`]: bins slower than the threshold are static;
//! 3. [`cluster_places`]: DBSCAN over the static bins of the whole span;
//! 4. [`extract_location_features`]: per-window aggregation.
//!
//! Longitudes are used as given, so data crossing the antimeridian is not
//! supported.

mod dbscan;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, RowBuilder};
use crate::schema::{ObservationTable, Timestamp, WindowSpec};
use crate::stats;

pub use dbscan::{dbscan, NOISE};

pub const FEATURES: &[&str] = &[
    "dist_total",
    "variance",
    "log_variance",
    "speed_average",
    "speed_variance",
    "speed_max",
    "n_bins",
    "n_static",
    "n_moving",
    "n_static_bins",
    "max_dist_home",
    "n_sig_places",
    "n_rare_places",
    "n_transitions",
    "n_top1",
    "n_top2",
    "n_top3",
    "n_top4",
    "n_top5",
    "entropy_normalized",
];

const TOP_N: [&str; 5] = ["n_top1", "n_top2", "n_top3", "n_top4", "n_top5"];

#[derive(Clone, Debug, PartialEq)]
pub struct LocationFix {
    pub user: String,
    pub time: Timestamp,
    pub lat: f64,
    pub lon: f64,
    /// Reported speed in m/s, if the source has one. Not used for binning.
    pub speed: Option<f64>,
}

impl LocationFix {
    /// Reads `lat`, `lon` and optional `speed` from a validated table.
    pub fn from_table(table: &ObservationTable) -> Result<Vec<LocationFix>> {
        let keys = table.keys()?;
        let lat = table.numbers("lat")?;
        let lon = table.numbers("lon")?;
        let speed = table.opt_numbers("speed")?;
        keys.into_iter()
            .enumerate()
            .map(|(row, (user, time))| {
                if !(-90.0..=90.0).contains(&lat[row]) {
                    return Err(Error::invalid("lat", row, "latitude outside [-90, 90]"));
                }
                if !(-180.0..=180.0).contains(&lon[row]) {
                    return Err(Error::invalid("lon", row, "longitude outside [-180, 180]"));
                }
                Ok(LocationFix {
                    user: user.to_string(),
                    time,
                    lat: lat[row],
                    lon: lon[row],
                    speed: speed[row],
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocationConfig {
    /// Bin width in seconds.
    pub bin_width: i64,
    /// m/s; bins slower than this are static.
    pub speed_threshold: f64,
    pub cluster_radius_m: f64,
    pub cluster_min_points: usize,
    /// Clusters with fewer bins are rarely visited.
    pub rare_min_bins: usize,
    /// Seconds; longer gaps between bins carry no distance or speed.
    pub max_gap: i64,
    /// Local hours `[start, end)` counted as night for home detection.
    /// `start > end` wraps around midnight.
    pub home_hours: (u32, u32),
    pub earth_radius_km: f64,
}

impl Default for LocationConfig {
    fn default() -> Self {
        LocationConfig {
            bin_width: 600,
            speed_threshold: 0.277,
            cluster_radius_m: 50.0,
            cluster_min_points: 5,
            rare_min_bins: 10,
            max_gap: 12 * 3600,
            home_hours: (0, 6),
            earth_radius_km: 6371.0,
        }
    }
}

impl LocationConfig {
    pub fn check(&self) -> Result<()> {
        let positive = self.bin_width > 0
            && self.speed_threshold > 0.0
            && self.cluster_radius_m > 0.0
            && self.cluster_min_points > 0
            && self.rare_min_bins > 0
            && self.max_gap > 0
            && self.earth_radius_km > 0.0;
        if !positive {
            return Err(Error::Config("location parameters must be positive".into()));
        }
        let (a, b) = self.home_hours;
        if a > 24 || b > 24 || a == b {
            return Err(Error::Config(format!("invalid home_hours {a}-{b}")));
        }
        Ok(())
    }

    fn is_night(&self, hour: u32) -> bool {
        let (a, b) = self.home_hours;
        if a < b {
            (a..b).contains(&hour)
        } else {
            hour >= a || hour < b
        }
    }
}

/// Great-circle distance in km on a sphere of radius 6371 km.
pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    haversine_km_with_radius(a, b, 6371.0)
}

pub fn haversine_km_with_radius(a: (f64, f64), b: (f64, f64), radius_km: f64) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let h = ((lat2 - lat1) / 2.0).sin().powi(2)
        + lat1.cos() * lat2.cos() * ((lon2 - lon1) / 2.0).sin().powi(2);
    2.0 * radius_km * h.sqrt().min(1.0).asin()
}

/// One representative fix per non-empty bin.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedFix {
    pub user: String,
    pub bin_start: Timestamp,
    /// Bin midpoint.
    pub time: Timestamp,
    pub lat: f64,
    pub lon: f64,
    /// m/s from the previous representative; absent for a user's first bin
    /// and after gaps longer than `max_gap`.
    pub speed: Option<f64>,
    pub n_fixes: usize,
}

impl BinnedFix {
    pub fn position(&self) -> (f64, f64) {
        (self.lat, self.lon)
    }
}

/// Bins fixes per user into fixed-width bins aligned to the epoch. Output is
/// sorted by `(user, bin_start)` whatever the input order.
pub fn bin_fixes(fixes: &[LocationFix], config: &LocationConfig) -> Vec<BinnedFix> {
    let width = config.bin_width * 1000;
    let mut bins: BTreeMap<(&str, i64), Vec<&LocationFix>> = BTreeMap::new();
    for f in fixes {
        bins.entry((f.user.as_str(), f.time.millis().div_euclid(width)))
            .or_default()
            .push(f);
    }
    let mut out: Vec<BinnedFix> = Vec::with_capacity(bins.len());
    for ((user, idx), members) in bins {
        let lats: Vec<f64> = members.iter().map(|f| f.lat).collect();
        let lons: Vec<f64> = members.iter().map(|f| f.lon).collect();
        let bin_start = Timestamp::from_millis_unchecked(idx * width);
        let mut bin = BinnedFix {
            user: user.to_string(),
            bin_start,
            time: bin_start.plus_millis(width / 2),
            lat: stats::median(&lats).unwrap_or_default(),
            lon: stats::median(&lons).unwrap_or_default(),
            speed: None,
            n_fixes: members.len(),
        };
        if let Some(prev) = out.last().filter(|p| p.user == user) {
            let dt = (bin.time.millis() - prev.time.millis()) as f64 / 1000.0;
            if dt <= config.max_gap as f64 {
                let metres =
                    haversine_km_with_radius(prev.position(), bin.position(), config.earth_radius_km)
                        * 1000.0;
                bin.speed = Some(metres / dt);
            }
        }
        out.push(bin);
    }
    out
}

/// Static iff slower than the threshold; bins without a speed are static.
pub fn is_static(bin: &BinnedFix, config: &LocationConfig) -> bool {
    bin.speed.is_none_or(|s| s < config.speed_threshold)
}

/// Partitions bins into `(static, moving)`, keeping order.
pub fn split_static_moving(
    binned: &[BinnedFix],
    config: &LocationConfig,
) -> (Vec<BinnedFix>, Vec<BinnedFix>) {
    binned.iter().cloned().partition(|b| is_static(b, config))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignificantPlace {
    pub cluster_id: usize,
    /// Mean latitude and longitude of the member bins.
    pub centroid: (f64, f64),
    pub bin_count: usize,
    pub first_visit: Timestamp,
    pub is_home: bool,
    pub is_rare: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    /// Ordered by descending `bin_count`, ties by earlier first visit;
    /// `cluster_id` is the position in this list.
    pub places: Vec<SignificantPlace>,
    /// One label per input bin: a `cluster_id`, or [`NOISE`].
    pub labels: Vec<i64>,
}

impl Clustering {
    pub fn home(&self) -> Option<&SignificantPlace> {
        self.places.iter().find(|p| p.is_home)
    }
}

/// Clusters one user's static bins. Labels do not depend on input order.
pub fn cluster_places(static_bins: &[BinnedFix], config: &LocationConfig, tz_offset_min: i32) -> Clustering {
    // Canonical visiting order: time, then position.
    let mut order: Vec<usize> = (0..static_bins.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&static_bins[a], &static_bins[b]);
        x.time
            .cmp(&y.time)
            .then(x.lat.total_cmp(&y.lat))
            .then(x.lon.total_cmp(&y.lon))
    });
    let ordered: Vec<BinnedFix> = order.iter().map(|&i| static_bins[i].clone()).collect();
    let points: Vec<(f64, f64)> = ordered.iter().map(BinnedFix::position).collect();
    let raw = dbscan(
        &points,
        config.cluster_radius_m / 1000.0,
        config.cluster_min_points,
        config.earth_radius_km,
    );
    // Centroid sums run in canonical order too, so they are bit-identical.
    let mut clustering = relabel(&ordered, raw, config, tz_offset_min);
    let mut labels = vec![NOISE; static_bins.len()];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = clustering.labels[pos];
    }
    clustering.labels = labels;
    clustering
}

/// Orders raw cluster ids by size and first visit and derives place attributes.
pub(crate) fn relabel(
    bins: &[BinnedFix],
    raw: Vec<i64>,
    config: &LocationConfig,
    tz_offset_min: i32,
) -> Clustering {
    struct Acc {
        count: usize,
        first: Timestamp,
        lat_sum: f64,
        lon_sum: f64,
        night: usize,
    }
    let mut acc: BTreeMap<i64, Acc> = BTreeMap::new();
    for (b, &l) in bins.iter().zip(&raw) {
        if l < 0 {
            continue;
        }
        let a = acc.entry(l).or_insert(Acc {
            count: 0,
            first: b.time,
            lat_sum: 0.0,
            lon_sum: 0.0,
            night: 0,
        });
        a.count += 1;
        a.first = a.first.min(b.time);
        a.lat_sum += b.lat;
        a.lon_sum += b.lon;
        if config.is_night(b.time.local_hour(tz_offset_min)) {
            a.night += 1;
        }
    }
    let mut ids: Vec<i64> = acc.keys().copied().collect();
    ids.sort_by(|x, y| {
        let (a, b) = (&acc[x], &acc[y]);
        b.count.cmp(&a.count).then(a.first.cmp(&b.first))
    });
    let rank: BTreeMap<i64, usize> = ids.iter().enumerate().map(|(r, &id)| (id, r)).collect();

    let home = ids
        .iter()
        .enumerate()
        .filter(|(_, id)| acc[id].night > 0)
        .max_by(|(ra, a), (rb, b)| acc[a].night.cmp(&acc[b].night).then(rb.cmp(ra)))
        .map(|(r, _)| r);

    let places = ids
        .iter()
        .enumerate()
        .map(|(r, id)| {
            let a = &acc[id];
            SignificantPlace {
                cluster_id: r,
                centroid: (a.lat_sum / a.count as f64, a.lon_sum / a.count as f64),
                bin_count: a.count,
                first_visit: a.first,
                is_home: home == Some(r),
                is_rare: a.count < config.rare_min_bins,
            }
        })
        .collect();
    let labels = raw
        .into_iter()
        .map(|l| if l < 0 { NOISE } else { rank[&l] as i64 })
        .collect();
    Clustering { places, labels }
}

/// Normalized Shannon entropy of cluster shares: `-Σ p ln p / ln k`, 0 when
/// `k <= 1`.
pub fn normalized_entropy(counts: &[usize]) -> f64 {
    let counts: Vec<f64> = counts.iter().filter(|&&c| c > 0).map(|&c| c as f64).collect();
    if counts.len() <= 1 {
        return 0.0;
    }
    let total: f64 = counts.iter().sum();
    let h: f64 = counts
        .iter()
        .map(|c| {
            let p = c / total;
            -p * p.ln()
        })
        .sum();
    (h / (counts.len() as f64).ln()).clamp(0.0, 1.0)
}

/// All location features per `(user, window)` with at least one fix.
pub fn extract_location_features(
    fixes: &[LocationFix],
    window: &WindowSpec,
    config: &LocationConfig,
) -> Result<FeatureTable> {
    config.check()?;
    window.check()?;
    let mut table = FeatureTable::new(FEATURES.iter().copied());

    let mut by_user: BTreeMap<&str, Vec<&LocationFix>> = BTreeMap::new();
    for f in fixes {
        by_user.entry(f.user.as_str()).or_default().push(f);
    }
    for (user, mut user_fixes) in by_user {
        user_fixes.sort_by(|a, b| {
            a.time
                .cmp(&b.time)
                .then(a.lat.total_cmp(&b.lat))
                .then(a.lon.total_cmp(&b.lon))
        });
        let owned: Vec<LocationFix> = user_fixes.iter().map(|f| (*f).clone()).collect();
        let bins = bin_fixes(&owned, config);

        let static_idx: Vec<usize> = (0..bins.len()).filter(|&i| is_static(&bins[i], config)).collect();
        let static_bins: Vec<BinnedFix> = static_idx.iter().map(|&i| bins[i].clone()).collect();
        let clustering = cluster_places(&static_bins, config, window.timezone_offset);
        // Cluster label per bin; `None` for moving bins.
        let mut labels: Vec<Option<i64>> = vec![None; bins.len()];
        for (k, &i) in static_idx.iter().enumerate() {
            labels[i] = Some(clustering.labels[k]);
        }
        let home = clustering.home().map(|p| p.centroid);

        let mut windows: BTreeMap<Timestamp, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (i, b) in bins.iter().enumerate() {
            windows.entry(window.window_start(b.time)).or_default().0.push(i);
        }
        for (i, f) in owned.iter().enumerate() {
            windows.entry(window.window_start(f.time)).or_default().1.push(i);
        }

        for (start, (bin_ids, fix_ids)) in windows {
            if fix_ids.is_empty() {
                continue;
            }
            let mut row = RowBuilder::new(FEATURES);
            let reps: Vec<&BinnedFix> = bin_ids.iter().map(|&i| &bins[i]).collect();

            let dist: f64 = reps
                .windows(2)
                .filter(|w| (w[1].time.millis() - w[0].time.millis()) <= config.max_gap * 1000)
                .map(|w| {
                    haversine_km_with_radius(w[0].position(), w[1].position(), config.earth_radius_km)
                })
                .sum();
            row.set("dist_total", dist);

            let lats: Vec<f64> = reps.iter().map(|b| b.lat).collect();
            let lons: Vec<f64> = reps.iter().map(|b| b.lon).collect();
            if let (Some(vlat), Some(vlon)) = (stats::variance(&lats), stats::variance(&lons)) {
                let var = vlat + vlon;
                row.set("variance", var);
                if var > 0.0 {
                    row.set("log_variance", var.ln());
                }
            }

            let speeds: Vec<f64> = reps.iter().filter_map(|b| b.speed).collect();
            row.set("speed_average", stats::mean(&speeds))
                .set("speed_variance", stats::variance(&speeds))
                .set("speed_max", stats::max(&speeds));

            let n_static = bin_ids.iter().filter(|&&i| labels[i].is_some()).count();
            row.set("n_bins", reps.len() as f64)
                .set("n_static", n_static as f64)
                .set("n_moving", (reps.len() - n_static) as f64)
                .set("n_static_bins", n_static as f64);

            if let Some(home) = home {
                let far = fix_ids
                    .iter()
                    .map(|&i| {
                        let f = &owned[i];
                        haversine_km_with_radius(home, (f.lat, f.lon), config.earth_radius_km)
                    })
                    .fold(0.0, f64::max);
                row.set("max_dist_home", far);
            }

            let clustered: Vec<i64> = bin_ids
                .iter()
                .filter_map(|&i| labels[i])
                .filter(|&l| l >= 0)
                .collect();
            let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
            for &l in &clustered {
                *counts.entry(l).or_default() += 1;
            }
            let rare = counts
                .keys()
                .filter(|&&l| clustering.places[l as usize].is_rare)
                .count();
            let transitions = clustered.windows(2).filter(|w| w[0] != w[1]).count();
            let mut sizes: Vec<usize> = counts.values().copied().collect();
            sizes.sort_unstable_by(|a, b| b.cmp(a));
            row.set("n_sig_places", counts.len() as f64)
                .set("n_rare_places", rare as f64)
                .set("n_transitions", transitions as f64);
            for (k, name) in TOP_N.iter().enumerate() {
                row.set(name, sizes.get(k).copied().unwrap_or(0) as f64);
            }
            row.set("entropy_normalized", normalized_entropy(&sizes));

            table.insert(user, start, row.finish())?;
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Alignment;

    const KM_PER_DEG: f64 = 111.194_926_644_558_73;

    fn fix(user: &str, ms: i64, lat: f64, lon: f64) -> LocationFix {
        LocationFix {
            user: user.into(),
            time: Timestamp::from_millis(ms).unwrap(),
            lat,
            lon,
            speed: None,
        }
    }

    fn bin(ms: i64, lat: f64, lon: f64, speed: Option<f64>) -> BinnedFix {
        let t = Timestamp::from_millis(ms).unwrap();
        BinnedFix {
            user: "u".into(),
            bin_start: t,
            time: t,
            lat,
            lon,
            speed,
            n_fixes: 1,
        }
    }

    #[test]
    fn haversine_reference_values() {
        assert_eq!(haversine_km((60.0, 24.0), (60.0, 24.0)), 0.0);
        assert!((haversine_km((0.0, 0.0), (0.0, 1.0)) - 111.195).abs() < 1e-3);
        assert!((haversine_km((0.0, 0.0), (0.0, 1.0)) - KM_PER_DEG).abs() < 1e-9);
        assert!((haversine_km((0.0, 0.0), (90.0, 0.0)) - 10_007.543).abs() < 1e-3);
        assert!(
            (haversine_km((0.0, 0.0), (90.0, 0.0)) - std::f64::consts::PI * 6371.0 / 2.0).abs()
                < 1e-9
        );
    }

    #[test]
    fn six_fixes_in_one_bin() {
        let fixes: Vec<_> = [1.0, 5.0, 2.0, 4.0, 3.0, 9.0]
            .iter()
            .enumerate()
            .map(|(i, &x)| fix("u", i as i64 * 60_000, 60.0 + x * 1e-5, 24.0 - x * 1e-5))
            .collect();
        let bins = bin_fixes(&fixes, &LocationConfig::default());
        assert_eq!(bins.len(), 1);
        assert_eq!(bins[0].n_fixes, 6);
        assert!((bins[0].lat - (60.0 + 3.5e-5)).abs() < 1e-12);
        assert!((bins[0].lon - (24.0 - 3.5e-5)).abs() < 1e-12);
        assert_eq!(bins[0].time.millis(), 300_000);
        assert_eq!(bins[0].speed, None);
    }

    #[test]
    fn speed_between_bins() {
        let one_km = 1.0 / KM_PER_DEG;
        let fixes = vec![fix("u", 0, 0.0, 0.0), fix("u", 600_000, one_km, 0.0)];
        let bins = bin_fixes(&fixes, &LocationConfig::default());
        assert_eq!(bins.len(), 2);
        assert!((bins[1].speed.unwrap() - 1000.0 / 600.0).abs() < 1e-9);
    }

    #[test]
    fn long_gap_has_no_speed() {
        let fixes = vec![fix("u", 0, 0.0, 0.0), fix("u", 24 * 3_600_000, 0.01, 0.0)];
        let bins = bin_fixes(&fixes, &LocationConfig::default());
        assert_eq!(bins[1].speed, None);
    }

    #[test]
    fn static_moving_threshold() {
        let cfg = LocationConfig::default();
        let bins = vec![
            bin(0, 0.0, 0.0, Some(0.1)),
            bin(1, 0.0, 0.0, Some(5.0)),
            bin(2, 0.0, 0.0, Some(0.2)),
        ];
        let (s, m) = split_static_moving(&bins, &cfg);
        assert_eq!((s.len(), m.len()), (2, 1));
        let still: Vec<_> = (0..4).map(|i| bin(i, 0.0, 0.0, Some(0.0))).collect();
        assert_eq!(split_static_moving(&still, &cfg).1.len(), 0);
    }

    #[test]
    fn two_separated_places() {
        let cfg = LocationConfig::default();
        let ten_km = 10.0 / KM_PER_DEG;
        let mut bins: Vec<BinnedFix> = (0..10).map(|i| bin(i * 600_000, 60.0, 24.0, None)).collect();
        bins.extend((10..20).map(|i| bin(i * 600_000, 60.0 + ten_km, 24.0, None)));
        let c = cluster_places(&bins, &cfg, 0);
        assert_eq!(c.places.len(), 2);
        assert_eq!(c.places[0].bin_count, 10);
        assert_eq!(c.places[1].bin_count, 10);
        // Equal sizes: the earlier-visited place comes first.
        assert!(c.labels[..10].iter().all(|&l| l == 0));
        assert!(c.labels[10..].iter().all(|&l| l == 1));
        // Both sets are at night (00:00-03:10 UTC) but the first has the
        // same night count and ranks first.
        assert!(c.places[0].is_home);
        assert!(!c.places[0].is_rare);
    }

    #[test]
    fn below_density_is_all_noise() {
        let bins: Vec<_> = (0..3).map(|i| bin(i, 60.0, 24.0, None)).collect();
        let c = cluster_places(&bins, &LocationConfig::default(), 0);
        assert!(c.places.is_empty());
        assert_eq!(c.labels, vec![NOISE; 3]);
        assert!(c.home().is_none());
    }

    #[test]
    fn home_is_most_night_occupied() {
        let cfg = LocationConfig::default();
        let hour = 3_600_000;
        // Place A: 12 bins at noon. Place B: 6 bins at 02:00.
        let mut bins: Vec<BinnedFix> = (0..12).map(|i| bin(12 * hour + i * 600_000, 60.0, 24.0, None)).collect();
        bins.extend((0..6).map(|i| bin(2 * hour + i * 600_000 + 86_400_000, 61.0, 24.0, None)));
        let c = cluster_places(&bins, &cfg, 0);
        assert_eq!(c.places.len(), 2);
        assert!(!c.places[0].is_home && c.places[1].is_home);
        assert!(c.places[1].is_rare && !c.places[0].is_rare);
        // At +10 h, A sits at 22:00 and B at 12:00 local: no night bins at all.
        let shifted = cluster_places(&bins, &cfg, 600);
        assert!(shifted.home().is_none());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(normalized_entropy(&[5, 5]), 1.0);
        assert!((normalized_entropy(&[3, 1]) - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert_eq!(normalized_entropy(&[7]), 0.0);
        assert_eq!(normalized_entropy(&[]), 0.0);
    }

    #[test]
    fn stationary_user() {
        let fixes: Vec<_> = (0..60).map(|i| fix("u", i * 60_000, 60.0, 24.0)).collect();
        let spec = WindowSpec::new(86_400, Alignment::Epoch, 0).unwrap();
        let t = extract_location_features(&fixes, &spec, &LocationConfig::default()).unwrap();
        assert_eq!(t.len(), 1);
        let get = |n| t.get("u", Timestamp::EPOCH, n);
        assert_eq!(get("dist_total"), Some(0.0));
        assert_eq!(get("n_moving"), Some(0.0));
        assert_eq!(get("n_bins"), Some(6.0));
        assert_eq!(get("entropy_normalized"), Some(0.0));
        assert_eq!(get("variance"), Some(0.0));
        assert_eq!(get("log_variance"), None);
        assert_eq!(get("n_sig_places"), Some(1.0));
        assert_eq!(get("n_top1"), Some(6.0));
        assert_eq!(get("n_top2"), Some(0.0));
        assert_eq!(get("max_dist_home"), Some(0.0));
        assert_eq!(get("n_transitions"), Some(0.0));
        assert_eq!(get("n_rare_places"), Some(1.0));
    }

    #[test]
    fn two_equal_places_give_unit_entropy() {
        let ten_km = 10.0 / KM_PER_DEG;
        let mut fixes: Vec<_> = (0..6).map(|i| fix("u", i * 600_000, 60.0, 24.0)).collect();
        // A 12 h gap keeps the jump out of the speed calculation.
        let later = 13 * 3_600_000;
        fixes.extend((0..6).map(|i| fix("u", later + i * 600_000, 60.0 + ten_km, 24.0)));
        let spec = WindowSpec::new(86_400, Alignment::Epoch, 0).unwrap();
        let t = extract_location_features(&fixes, &spec, &LocationConfig::default()).unwrap();
        let get = |n| t.get("u", Timestamp::EPOCH, n);
        assert_eq!(get("n_sig_places"), Some(2.0));
        assert_eq!(get("entropy_normalized"), Some(1.0));
        assert_eq!(get("n_transitions"), Some(1.0));
        assert_eq!(get("dist_total"), Some(0.0));
    }

    #[test]
    fn out_of_range_coordinates_are_rejected() {
        use crate::schema::Column;
        let t = crate::schema::validate(
            &ObservationTable::from_columns([
                ("user", Column::Str(vec![Some("u".into())])),
                ("time", Column::Time(vec![Timestamp::from_millis(0)])),
                ("lat", Column::Float(vec![Some(91.0)])),
                ("lon", Column::Float(vec![Some(0.0)])),
            ])
            .unwrap(),
        )
        .unwrap();
        assert!(matches!(
            LocationFix::from_table(&t),
            Err(Error::InvalidValue { column, .. }) if column == "lat"
        ));
    }

    #[test]
    fn config_checks() {
        assert!(LocationConfig::default().check().is_ok());
        let bad = LocationConfig {
            bin_width: 0,
            ..Default::default()
        };
        assert!(bad.check().is_err());
        let wrap = LocationConfig {
            home_hours: (22, 6),
            ..Default::default()
        };
        assert!(wrap.check().is_ok());
        assert!(wrap.is_night(23) && wrap.is_night(2) && !wrap.is_night(12));
        let empty = LocationConfig {
            home_hours: (3, 3),
            ..Default::default()
        };
        assert!(empty.check().is_err());
    }
}
