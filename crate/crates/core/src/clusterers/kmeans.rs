use crate::error::{Error, Result};
use crate::model::Partition;
use crate::numerics::distance::{sq_euclidean, PointRows};
use crate::numerics::{Matrix, Rng};

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub partition: Partition,
    /// `k × D` cluster centres.
    pub centers: Matrix,
    /// Sum of squared distances of points to their assigned centre.
    pub inertia: f64,
    /// Inertia after each assignment step, in order.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

/// Mean per-feature variance; convergence and regularization thresholds are
/// expressed relative to it.
pub(crate) fn mean_feature_variance(rows: &PointRows) -> f64 {
    let (n, d) = (rows.len(), rows.dim());
    if n == 0 || d == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for j in 0..d {
        let mean = (0..n).map(|i| rows.row(i)[j]).sum::<f64>() / n as f64;
        total += (0..n).map(|i| (rows.row(i)[j] - mean).powi(2)).sum::<f64>() / n as f64;
    }
    total / d as f64
}

/// D²-weighted seeding: the first centre is uniform, each further centre is
/// drawn with probability proportional to the squared distance to the
/// closest centre chosen so far.
fn seed_centers(rows: &PointRows, k: usize, rng: &mut Rng) -> Vec<usize> {
    let n = rows.len();
    let mut chosen = vec![rng.below(n)];
    let mut closest: Vec<f64> = (0..n).map(|i| sq_euclidean(rows.row(i), rows.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &c) in closest.iter().enumerate() {
                acc += c;
                if c > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Round-off can leave `target` past the last partial sum.
            pick.unwrap_or_else(|| closest.iter().rposition(|&c| c > 0.0).unwrap_or(0))
        } else {
            rng.below(n)
        };
        chosen.push(next);
        for (i, c) in closest.iter_mut().enumerate() {
            *c = c.min(sq_euclidean(rows.row(i), rows.row(next)));
        }
    }
    chosen
}

/// Assigns every point to its nearest centre (ties to the lowest index).
/// Returns the inertia.
fn assign(rows: &PointRows, centers: &[Vec<f64>], labels: &mut [usize], dist: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for i in 0..rows.len() {
        let x = rows.row(i);
        let mut best = f64::INFINITY;
        let mut best_c = 0;
        for (c, centre) in centers.iter().enumerate() {
            let d = sq_euclidean(x, centre);
            if d < best {
                best = d;
                best_c = c;
            }
        }
        labels[i] = best_c;
        dist[i] = best;
        inertia += best;
    }
    inertia
}

/// Moves the point farthest from its centre into each empty cluster.
fn repair_empty(rows: &PointRows, labels: &mut [usize], dist: &mut [f64], k: usize) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let far = (0..rows.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        if let Some(i) = far {
            counts[labels[i]] -= 1;
            labels[i] = c;
            counts[c] += 1;
            dist[i] = 0.0;
        }
    }
}

fn centroids(rows: &PointRows, labels: &[usize], k: usize, previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = rows.dim();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(rows.row(i)) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(c, (s, n))| {
            if n == 0 {
                previous[c].clone()
            } else {
                s.into_iter().map(|v| v / n as f64).collect()
            }
        })
        .collect()
}

/// k-means++ seeding followed by Lloyd iterations. Stops once the total
/// squared centre shift falls to `tol` times the mean feature variance, or
/// after `max_iter` iterations.
pub fn kmeans_pp_fit(points: &Matrix, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansFit> {
    let rows = PointRows::new(points);
    kmeans_rows(&rows, k, seed, max_iter, tol)
}

pub(crate) fn kmeans_rows(rows: &PointRows, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansFit> {
    let n = rows.len();
    if k == 0 || n < k {
        return Err(Error::InvalidInput(format!(
            "k-means needs 1 ≤ k ≤ N, got k = {k}, N = {n}"
        )));
    }
    let d = rows.dim();
    let mut rng = Rng::new(seed);
    let threshold = tol * mean_feature_variance(rows);
    let mut centers: Vec<Vec<f64>> = seed_centers(rows, k, &mut rng)
        .into_iter()
        .map(|i| rows.row(i).to_vec())
        .collect();
    let mut labels = vec![0usize; n];
    let mut dist = vec![0.0; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        trace.push(assign(rows, &centers, &mut labels, &mut dist));
        repair_empty(rows, &mut labels, &mut dist, k);
        let updated = centroids(rows, &labels, k, &centers);
        let shift: f64 = updated.iter().zip(&centers).map(|(a, b)| sq_euclidean(a, b)).sum();
        centers = updated;
        if shift <= threshold {
            break;
        }
    }
    let inertia = assign(rows, &centers, &mut labels, &mut dist);
    repair_empty(rows, &mut labels, &mut dist, k);
    trace.push(inertia);
    let flat: Vec<f64> = centers.iter().flatten().copied().collect();
    Ok(KMeansFit {
        partition: Partition::new(labels, k)?,
        centers: Matrix::from_row_slice(k, d, &flat),
        inertia,
        inertia_trace: trace,
        iterations,
    })
}

pub fn kmeans_pp(points: &Matrix, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<Partition> {
    kmeans_pp_fit(points, k, seed, max_iter, tol).map(|f| f.partition)
}
