//! Density clustering on the sphere.
//!
//! Points are visited in the order given. A point with at least `min_points`
//! neighbours within `eps_km` (itself included) is a core point; clusters are
//! grown breadth-first from core points and a border point joins the first
//! cluster that reaches it.

use super::haversine_km_with_radius;

pub const NOISE: i64 = -1;
const UNVISITED: i64 = -2;

/// Region queries over points sorted by latitude. Any two points within
/// `eps_km` differ in latitude by at most `eps_km / radius` radians, so only a
/// latitude band has to be scanned.
struct LatitudeIndex<'a> {
    points: &'a [(f64, f64)],
    by_lat: Vec<usize>,
    lats: Vec<f64>,
    eps_km: f64,
    band_deg: f64,
    radius_km: f64,
}

impl<'a> LatitudeIndex<'a> {
    fn new(points: &'a [(f64, f64)], eps_km: f64, radius_km: f64) -> Self {
        let mut by_lat: Vec<usize> = (0..points.len()).collect();
        by_lat.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0).then(a.cmp(&b)));
        let lats = by_lat.iter().map(|&i| points[i].0).collect();
        // Slightly widened so rounding never drops a boundary neighbour.
        let band_deg = (eps_km / radius_km).to_degrees() * (1.0 + 1e-9) + 1e-12;
        LatitudeIndex {
            points,
            by_lat,
            lats,
            eps_km,
            band_deg,
            radius_km,
        }
    }

    /// Indices within `eps_km` of point `p`, in latitude order.
    fn neighbours(&self, p: usize) -> Vec<usize> {
        let (lat, _) = self.points[p];
        let lo = self.lats.partition_point(|&x| x < lat - self.band_deg);
        let hi = self.lats.partition_point(|&x| x <= lat + self.band_deg);
        self.by_lat[lo..hi]
            .iter()
            .copied()
            .filter(|&q| {
                haversine_km_with_radius(self.points[p], self.points[q], self.radius_km)
                    <= self.eps_km
            })
            .collect()
    }
}

/// Cluster labels (`0..k` in order of discovery, [`NOISE`] otherwise).
pub fn dbscan(points: &[(f64, f64)], eps_km: f64, min_points: usize, radius_km: f64) -> Vec<i64> {
    let index = LatitudeIndex::new(points, eps_km, radius_km);
    let mut labels = vec![UNVISITED; points.len()];
    let mut next_id = 0;
    for p in 0..points.len() {
        if labels[p] != UNVISITED {
            continue;
        }
        let seeds = index.neighbours(p);
        if seeds.len() < min_points {
            labels[p] = NOISE;
            continue;
        }
        let id = next_id;
        next_id += 1;
        labels[p] = id;
        let mut queue: std::collections::VecDeque<usize> = seeds.into_iter().collect();
        while let Some(q) = queue.pop_front() {
            if labels[q] == NOISE {
                labels[q] = id;
            }
            if labels[q] != UNVISITED {
                continue;
            }
            labels[q] = id;
            let n = index.neighbours(q);
            if n.len() >= min_points {
                // Points already in a cluster would be skipped when popped.
                queue.extend(n.into_iter().filter(|&r| labels[r] < 0));
            }
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: f64 = 6371.0;

    #[test]
    fn two_blobs() {
        let mut pts = vec![(60.0, 24.0); 10];
        pts.extend(vec![(60.09, 24.0); 10]);
        let labels = dbscan(&pts, 0.05, 5, R);
        assert!(labels[..10].iter().all(|&l| l == 0));
        assert!(labels[10..].iter().all(|&l| l == 1));
    }

    #[test]
    fn too_sparse_is_noise() {
        let pts = vec![(60.0, 24.0); 3];
        assert_eq!(dbscan(&pts, 0.05, 5, R), vec![NOISE; 3]);
        assert!(dbscan(&[], 0.05, 5, R).is_empty());
    }

    #[test]
    fn border_point_joins_chain() {
        // Five points 10 m apart in a line, plus one 40 m beyond the end:
        // reachable from the last core point only.
        let step = (0.01 / R).to_degrees();
        let mut pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64 * step, 0.0)).collect();
        pts.push((8.0 * step, 0.0));
        let labels = dbscan(&pts, 0.045, 4, R);
        assert_eq!(labels, vec![0, 0, 0, 0, 0, 0]);
    }
}
