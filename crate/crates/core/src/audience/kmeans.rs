//! One-dimensional k-means with silhouette-based model selection.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AudienceError;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    /// Cluster per value; ids follow ascending centroid order.
    pub assignments: Vec<usize>,
    pub centroids: Vec<f64>,
    pub wcss: f64,
    /// Within-cluster sum of squares after every Lloyd iteration of the
    /// winning restart.
    pub trace: Vec<f64>,
}

fn distinct_count(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

fn nearest(x: f64, centroids: &[f64]) -> usize {
    let mut best = 0;
    for (j, c) in centroids.iter().enumerate() {
        if (x - c).abs() < (x - centroids[best]).abs() {
            best = j;
        }
    }
    best
}

fn wcss(values: &[f64], assignments: &[usize], centroids: &[f64]) -> f64 {
    values
        .iter()
        .zip(assignments)
        .map(|(x, &a)| (x - centroids[a]).powi(2))
        .sum()
}

fn plus_plus_init(values: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centroids = vec![values[rng.gen_range(0..values.len())]];
    let mut d2: Vec<f64> = values.iter().map(|x| (x - centroids[0]).powi(2)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = values.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            if *d > 0.0 && target < *d {
                pick = i;
                break;
            }
            target -= d;
        }
        // Guard against rounding landing on an existing centroid.
        if d2[pick] == 0.0 {
            pick = (0..values.len())
                .max_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(b.cmp(&a)))
                .unwrap_or(0);
        }
        let c = values[pick];
        centroids.push(c);
        for (d, x) in d2.iter_mut().zip(values) {
            *d = d.min((x - c).powi(2));
        }
    }
    centroids
}

fn lloyd(values: &[f64], mut centroids: Vec<f64>) -> KMeansFit {
    let k = centroids.len();
    let mut assignments: Vec<usize> = values.iter().map(|&x| nearest(x, &centroids)).collect();
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        // An empty cluster takes the point farthest from its centroid.
        for j in 0..k {
            if !assignments.contains(&j) {
                let far = (0..values.len())
                    .filter(|&i| assignments.iter().filter(|&&a| a == assignments[i]).count() > 1)
                    .max_by(|&a, &b| {
                        let da = (values[a] - centroids[assignments[a]]).abs();
                        let db = (values[b] - centroids[assignments[b]]).abs();
                        da.total_cmp(&db).then(b.cmp(&a))
                    });
                if let Some(i) = far {
                    assignments[i] = j;
                    centroids[j] = values[i];
                }
            }
        }
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (x, &a) in values.iter().zip(&assignments) {
            sums[a] += x;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            }
        }
        trace.push(wcss(values, &assignments, &centroids));
        let next: Vec<usize> = values.iter().map(|&x| nearest(x, &centroids)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    let wcss = *trace.last().unwrap_or(&0.0);
    KMeansFit {
        assignments,
        centroids,
        wcss,
        trace,
    }
}

fn canonicalize(mut fit: KMeansFit) -> KMeansFit {
    let mut order: Vec<usize> = (0..fit.centroids.len()).collect();
    order.sort_by(|&a, &b| fit.centroids[a].total_cmp(&fit.centroids[b]));
    let mut relabel = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    fit.centroids = order.iter().map(|&o| fit.centroids[o]).collect();
    fit.assignments.iter_mut().for_each(|a| *a = relabel[*a]);
    fit
}

/// Lloyd's algorithm from `restarts` seeded k-means++ starts; the fit with
/// the smallest within-cluster sum of squares wins (earliest on ties).
pub fn kmeans_1d(values: &[f64], k: usize, restarts: usize, seed: u64) -> Result<KMeansFit, AudienceError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AudienceError::NonFinite);
    }
    if k == 0 {
        return Err(AudienceError::InvalidK(k));
    }
    let distinct = distinct_count(values);
    if distinct < k {
        return Err(AudienceError::TooFewDistinctValues { k, distinct });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts.max(1) {
        let fit = lloyd(values, plus_plus_init(values, k, &mut rng));
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    Ok(canonicalize(best.expect("at least one restart")))
}

/// Mean silhouette coefficient under absolute distance.
///
/// Uses sorted prefix sums per cluster, so the cost is `O(n k log n)`.
/// Points in singleton clusters contribute 0.
pub fn silhouette(values: &[f64], assignments: &[usize]) -> Result<f64, AudienceError> {
    if values.len() != assignments.len() {
        return Err(AudienceError::LengthMismatch {
            values: values.len(),
            assignments: assignments.len(),
        });
    }
    let n_labels = assignments.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); n_labels];
    for (x, &a) in values.iter().zip(assignments) {
        members[a].push(*x);
    }
    let clusters: Vec<(usize, Vec<f64>, Vec<f64>)> = members
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(label, mut m)| {
            m.sort_by(f64::total_cmp);
            let mut prefix = Vec::with_capacity(m.len() + 1);
            prefix.push(0.0);
            for x in &m {
                prefix.push(prefix.last().unwrap() + x);
            }
            (label, m, prefix)
        })
        .collect();
    if clusters.len() < 2 {
        return Err(AudienceError::SingleCluster);
    }
    // Sum of |x - c| over a sorted cluster.
    let abs_sum = |x: f64, sorted: &[f64], prefix: &[f64]| -> f64 {
        let below = sorted.partition_point(|v| *v < x);
        let n = sorted.len();
        let lo = prefix[below];
        let hi = prefix[n] - lo;
        (below as f64 * x - lo) + (hi - (n - below) as f64 * x)
    };
    let mut total = 0.0;
    for (x, &label) in values.iter().zip(assignments) {
        let mut a = 0.0;
        let mut b = f64::INFINITY;
        let mut singleton = false;
        for (l, sorted, prefix) in &clusters {
            let d = abs_sum(*x, sorted, prefix);
            if *l == label {
                singleton = sorted.len() == 1;
                if !singleton {
                    a = d / (sorted.len() - 1) as f64;
                }
            } else {
                b = b.min(d / sorted.len() as f64);
            }
        }
        let denom = a.max(b);
        if !singleton && denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    pub silhouette: f64,
    pub fit: KMeansFit,
}

/// Fits every `k` in `k_range` (capped at the number of distinct values)
/// and keeps the highest silhouette; the smaller `k` wins ties.
pub fn select_k(
    values: &[f64],
    k_range: RangeInclusive<usize>,
    restarts: usize,
    seed: u64,
) -> Result<KSelection, AudienceError> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 2 || hi > 8 || lo > hi {
        return Err(AudienceError::InvalidRange { lo, hi });
    }
    let distinct = distinct_count(values);
    if distinct < lo {
        return Err(AudienceError::TooFewDistinctValues { k: lo, distinct });
    }
    let mut best: Option<KSelection> = None;
    for k in lo..=hi.min(distinct) {
        let fit = kmeans_1d(values, k, restarts, seed.wrapping_add(k as u64))?;
        let score = silhouette(values, &fit.assignments)?;
        if best.as_ref().is_none_or(|b| score > b.silhouette) {
            best = Some(KSelection {
                k,
                silhouette: score,
                fit,
            });
        }
    }
    Ok(best.expect("non-empty k range"))
}
