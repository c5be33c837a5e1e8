//! Silhouette width and the two fitness functions built on it.

use serde::{Deserialize, Serialize};

use crate::clusterers::{ari, ClustererKind, ClustererSpec};
use crate::error::{Error, Result};
use crate::model::Individual;
use crate::numerics::distance::{cluster_scan, ClusterScan, PointRows};
use crate::numerics::{Matrix, Rng};

fn label_count(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |m| m + 1)
}

fn silhouette_of(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m > 0.0 {
        (b - a) / m
    } else {
        0.0
    }
}

/// Per-point silhouettes from a precomputed scan. Points in singleton
/// clusters score 0.
pub fn silhouette_from_scan(scan: &ClusterScan, labels: &[usize]) -> Result<Vec<f64>> {
    let k = scan.k;
    if scan.counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::UndefinedSilhouette);
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &own)| {
            let n_own = scan.counts[own];
            if n_own < 2 {
                return 0.0;
            }
            let row = &scan.sums[i * k..(i + 1) * k];
            let a = row[own] / (n_own - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && scan.counts[c] > 0)
                .map(|c| row[c] / scan.counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            silhouette_of(a, b)
        })
        .collect())
}

/// Silhouette of every point.
pub fn silhouette_samples(points: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    check_lengths(points, labels)?;
    let scan = cluster_scan(points, labels, label_count(labels));
    silhouette_from_scan(&scan, labels)
}

/// Silhouette of point `i` alone, in `O(N·D)`.
pub fn silhouette_point(points: &Matrix, labels: &[usize], i: usize) -> Result<f64> {
    check_lengths(points, labels)?;
    if i >= labels.len() {
        return Err(Error::InvalidInput(format!("point {i} out of range")));
    }
    let k = label_count(labels);
    let rows = PointRows::new(points);
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (j, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        if j != i {
            sums[l] += rows.distance(i, j);
        }
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::UndefinedSilhouette);
    }
    let own = labels[i];
    if counts[own] < 2 {
        return Ok(0.0);
    }
    let a = sums[own] / (counts[own] - 1) as f64;
    let b = (0..k)
        .filter(|&c| c != own && counts[c] > 0)
        .map(|c| sums[c] / counts[c] as f64)
        .fold(f64::INFINITY, f64::min);
    Ok(silhouette_of(a, b))
}

/// Mean silhouette over all points.
pub fn silhouette_overall(points: &Matrix, labels: &[usize]) -> Result<f64> {
    let s = silhouette_samples(points, labels)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

fn check_lengths(points: &Matrix, labels: &[usize]) -> Result<()> {
    if points.nrows() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} points but {} labels",
            points.nrows(),
            labels.len()
        )));
    }
    if labels.len() < 2 {
        return Err(Error::InvalidInput("silhouette needs at least two points".into()));
    }
    Ok(())
}

/// Match a target silhouette width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexObjective {
    pub s_t: f64,
}

impl IndexObjective {
    pub fn new(s_t: f64) -> Result<Self> {
        let obj = Self { s_t };
        obj.validate()?;
        Ok(obj)
    }

    pub fn validate(&self) -> Result<()> {
        if (-1.0..=1.0).contains(&self.s_t) {
            Ok(())
        } else {
            Err(Error::Config(format!("target silhouette {} outside [-1, 1]", self.s_t)))
        }
    }

    /// `|s_t − s_all|`, to be minimized.
    pub fn score(&self, s_all: f64) -> f64 {
        (self.s_t - s_all).abs()
    }
}

pub fn index_fitness(ind: &Individual, obj: &IndexObjective) -> Result<f64> {
    Ok(obj.score(silhouette_overall(ind.points(), ind.labels())?))
}

/// Maximize the ARI gap between two clustering algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersusObjective {
    pub winner: ClustererKind,
    pub loser: ClustererKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VersusScore {
    pub ari_winner: f64,
    pub ari_loser: f64,
}

impl VersusScore {
    /// `ARI(winner) − ARI(loser)`, to be maximized.
    pub fn fitness(&self) -> f64 {
        self.ari_winner - self.ari_loser
    }
}

/// ARI of one clusterer against the generating labels. Stochastic kinds draw
/// a fresh initialization from `rng`; a failed fit is retried once with a new
/// draw and otherwise scores 0.
fn scored_ari(ind: &Individual, kind: ClustererKind, rng: &mut Rng) -> Result<f64> {
    let k = ind.num_clusters();
    let mut last = None;
    for _ in 0..2 {
        let seed = rng.next_seed();
        match ClustererSpec::new(kind, k, seed).fit(ind.points()) {
            Ok(p) => return ari(&p, ind.partition()),
            Err(e) => last = Some(e),
        }
    }
    log::warn!(
        "{kind} failed twice ({}); scoring ARI 0",
        last.map(|e| e.to_string()).unwrap_or_default()
    );
    Ok(0.0)
}

pub fn versus_fitness(ind: &Individual, obj: &VersusObjective, rng: &mut Rng) -> Result<VersusScore> {
    let ari_winner = scored_ari(ind, obj.winner, rng)?;
    let ari_loser = scored_ari(ind, obj.loser, rng)?;
    Ok(VersusScore { ari_winner, ari_loser })
}
