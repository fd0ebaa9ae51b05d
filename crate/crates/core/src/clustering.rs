//! Longitudinal profile classification.
//!
//! Zones are compared through their relative daily profiles (accessibility
//! divided by the zone's own maximum) using Euclidean distance over all
//! departure instants.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Labelled reference profiles, kept sorted by label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceProfileSet {
    profiles: BTreeMap<String, Vec<f64>>,
}

impl ReferenceProfileSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, profile: Vec<f64>) -> Result<()> {
        let label = label.into();
        if let Some(len) = self.len_of_profiles() {
            if profile.len() != len {
                return Err(Error::invalid(
                    format!("reference {label}"),
                    format!("length {} differs from {len}", profile.len()),
                ));
            }
        }
        if self.profiles.contains_key(&label) {
            return Err(Error::invalid(
                format!("reference {label}"),
                "duplicate label",
            ));
        }
        self.profiles.insert(label, profile);
        Ok(())
    }

    fn len_of_profiles(&self) -> Option<usize> {
        self.profiles.values().next().map(Vec::len)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.profiles
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Label of the nearest reference and its distance; ties go to the
/// lexicographically smallest label.
pub fn classify(series: &[f64], refs: &ReferenceProfileSet) -> Result<(String, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for (label, profile) in refs.iter() {
        if profile.len() != series.len() {
            return Err(Error::invalid(
                "series",
                format!(
                    "length {} differs from reference length {}",
                    series.len(),
                    profile.len()
                ),
            ));
        }
        let d = euclidean(series, profile);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((label, d));
        }
    }
    best.map(|(l, d)| (l.to_owned(), d))
        .ok_or(Error::EmptyReferences)
}

/// Result of a k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Sum of squared distances after each Lloyd iteration.
    pub distortion_history: Vec<f64>,
}

impl KMeans {
    pub fn distortion(&self) -> f64 {
        self.distortion_history.last().copied().unwrap_or(0.0)
    }
}

fn squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn distinct_count(series: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = series
        .iter()
        .map(|s| s.iter().map(|v| v.to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// k-means++ seeding followed by Lloyd iterations; deterministic per seed.
/// Stops when assignments no longer change or after `max_iter` iterations.
pub fn kmeans_longitudinal(
    series: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    let distinct = distinct_count(series);
    if k > distinct {
        return Err(Error::TooManyClusters { k, distinct });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = series.len();

    let mut centroids = vec![series[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = series.iter().map(|s| squared(s, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            pick = Some(i);
            if target < w {
                break;
            }
            target -= w;
        }
        // k <= distinct guarantees some series is still uncovered.
        let pick = pick.expect("positive distance remains");
        centroids.push(series[pick].clone());
        for (i, s) in series.iter().enumerate() {
            d2[i] = d2[i].min(squared(s, &centroids[centroids.len() - 1]));
        }
    }

    let dim = series[0].len();
    let mut assignment: Vec<usize> = series.iter().map(|s| nearest(s, &centroids).0).collect();
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (s, &c) in series.iter().zip(&assignment) {
            counts[c] += 1;
            for (acc, v) in sums[c].iter_mut().zip(s) {
                *acc += v;
            }
        }
        for c in 0..k {
            // Empty clusters keep their previous centroid.
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|v| v / counts[c] as f64).collect();
            }
        }
        let mut next = Vec::with_capacity(n);
        let mut distortion = 0.0;
        for s in series {
            let (c, d) = nearest(s, &centroids);
            next.push(c);
            distortion += d;
        }
        history.push(distortion);
        let stable = next == assignment;
        assignment = next;
        if stable {
            break;
        }
    }
    Ok(KMeans {
        centroids,
        assignment,
        distortion_history: history,
    })
}
