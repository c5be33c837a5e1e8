//! Ground-truth-aware problem features and the 2-D instance space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Partition;
use crate::numerics::distance::{cluster_scan, sq_euclidean, PointRows};
use crate::numerics::{pca_fit, singular_values, Matrix};
use crate::objectives::silhouette_from_scan;

pub const DEFAULT_NEIGHBOURS: usize = 10;
/// Share of the eigenvalue mass retained when measuring eccentricity.
pub const ECCENTRICITY_MASS: f64 = 0.95;
const STD_FLOOR: f64 = 1e-12;

pub const FEATURE_NAMES: [&str; 7] = [
    "connectivity",
    "dimensionality",
    "avg_eccentricity",
    "entropy",
    "num_clusters",
    "sil_mean",
    "sil_std",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub connectivity: f64,
    pub dimensionality: usize,
    pub avg_eccentricity: f64,
    pub entropy: f64,
    pub num_clusters: usize,
    pub silhouette_mean: f64,
    pub silhouette_std: f64,
}

impl FeatureVector {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.connectivity,
            self.dimensionality as f64,
            self.avg_eccentricity,
            self.entropy,
            self.num_clusters as f64,
            self.silhouette_mean,
            self.silhouette_std,
        ]
    }
}

fn check(points: &Matrix, labels: &[usize]) -> Result<()> {
    if points.nrows() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} points but {} labels",
            points.nrows(),
            labels.len()
        )));
    }
    Ok(())
}

/// Neighbourhood disagreement: for each point, a penalty of `1/j` when its
/// `j`-th nearest neighbour (ties to the lower index) has another label,
/// summed over `j = 1..=l` and averaged over points.
pub fn connectivity(points: &Matrix, labels: &[usize], l: usize) -> Result<f64> {
    check(points, labels)?;
    let n = labels.len();
    if n <= l {
        return Err(Error::InvalidInput(format!(
            "connectivity with {l} neighbours needs more than {l} points, got {n}"
        )));
    }
    let rows = PointRows::new(points);
    let mut total = 0.0;
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    for i in 0..n {
        cand.clear();
        let xi = rows.row(i);
        cand.extend((0..n).filter(|&j| j != i).map(|j| (sq_euclidean(xi, rows.row(j)), j)));
        if l > 0 && l < cand.len() {
            cand.select_nth_unstable_by(l - 1, by_distance);
        }
        let nearest = &mut cand[..l];
        nearest.sort_by(by_distance);
        for (rank, &(_, j)) in nearest.iter().enumerate() {
            if labels[j] != labels[i] {
                total += 1.0 / (rank + 1) as f64;
            }
        }
    }
    Ok(total / n as f64)
}

/// Max/min ratio of the leading eigenvalues of one cluster's sample
/// covariance, keeping the shortest descending prefix that holds
/// [`ECCENTRICITY_MASS`] of the total.
fn cluster_eccentricity(block: &Matrix) -> Result<f64> {
    let n = block.nrows();
    let mut centered = block.clone();
    for j in 0..block.ncols() {
        let m = centered.column(j).mean();
        centered.column_mut(j).add_scalar_mut(-m);
    }
    let values: Vec<f64> = singular_values(&centered)?
        .into_iter()
        .map(|s| s * s / (n - 1) as f64)
        .collect();
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        log::debug!("cluster of identical points; eccentricity taken as 1");
        return Ok(1.0);
    }
    let mut acc = 0.0;
    let mut kept = values.len();
    for (i, v) in values.iter().enumerate() {
        acc += v;
        if acc >= ECCENTRICITY_MASS * total {
            kept = i + 1;
            break;
        }
    }
    let hi = values[0];
    let mut lo = values[kept - 1];
    let floor = STD_FLOOR * hi;
    if lo < floor {
        log::debug!("kept eigenvalue {lo} floored to {floor}");
        lo = floor;
    }
    Ok(hi / lo)
}

/// Mean over clusters of the point-cloud eccentricity.
pub fn avg_eccentricity(points: &Matrix, labels: &[usize]) -> Result<f64> {
    check(points, labels)?;
    let part = Partition::from_raw_labels(labels);
    let k = part.k();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in part.labels().iter().enumerate() {
        members[l].push(i);
    }
    let mut sum = 0.0;
    for rows in &members {
        if rows.len() < 2 {
            return Err(Error::InvalidInput(
                "eccentricity needs at least two points per cluster".into(),
            ));
        }
        let block = points.select_rows(rows.iter());
        sum += cluster_eccentricity(&block)?;
    }
    Ok(sum / k as f64)
}

/// Entropy of the size distribution in log base `sizes.len()`. Empty
/// clusters contribute nothing; a single cluster scores 0.
pub fn entropy_from_sizes(sizes: &[usize]) -> f64 {
    let k = sizes.len();
    let n: usize = sizes.iter().sum();
    if k < 2 || n == 0 {
        return 0.0;
    }
    // Equal occupied sizes have the closed form ln(m) / ln(K), exact at m = K.
    let occupied: Vec<usize> = sizes.iter().copied().filter(|&s| s > 0).collect();
    if occupied.iter().all(|&s| s == occupied[0]) {
        let m = occupied.len();
        return if m == k { 1.0 } else { (m as f64).ln() / (k as f64).ln() };
    }
    let h: f64 = sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n as f64;
            -p * p.ln()
        })
        .sum();
    h / (k as f64).ln()
}

pub fn entropy_cluster_sizes(labels: &[usize]) -> f64 {
    entropy_from_sizes(&Partition::from_raw_labels(labels).sizes())
}

/// All seven features of a labelled dataset.
pub fn compute_features(points: &Matrix, labels: &[usize]) -> Result<FeatureVector> {
    check(points, labels)?;
    let part = Partition::from_raw_labels(labels);
    if part.k() < 2 {
        return Err(Error::UndefinedSilhouette);
    }
    let scan = cluster_scan(points, part.labels(), part.k());
    let s = silhouette_from_scan(&scan, part.labels())?;
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.len() as f64;
    Ok(FeatureVector {
        connectivity: connectivity(points, part.labels(), DEFAULT_NEIGHBOURS)?,
        dimensionality: points.ncols(),
        avg_eccentricity: avg_eccentricity(points, part.labels())?,
        entropy: entropy_from_sizes(&part.sizes()),
        num_clusters: part.k(),
        silhouette_mean: mean,
        silhouette_std: var.sqrt(),
    })
}

#[derive(Debug, Clone)]
pub struct InstanceSpace {
    /// `M × 2` projected datasets.
    pub coordinates: Matrix,
    /// `2 × 7` loadings, rows orthonormal.
    pub component_loadings: Matrix,
    pub explained_variance_ratio: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
}

/// Z-scores the feature columns (population std, floored) and projects them
/// onto their first two principal components.
pub fn build_instance_space(features: &[FeatureVector]) -> Result<InstanceSpace> {
    let m = features.len();
    if m < 3 {
        return Err(Error::InvalidInput(format!(
            "an instance space needs at least 3 datasets, got {m}"
        )));
    }
    let raw = Matrix::from_fn(m, 7, |i, j| features[i].to_array()[j]);
    let mut means = Vec::with_capacity(7);
    let mut stds = Vec::with_capacity(7);
    let mut z = raw.clone();
    for j in 0..7 {
        let col = raw.column(j);
        let mean = col.mean();
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64).sqrt();
        if sd < STD_FLOOR {
            log::info!("feature {} is constant and standardizes to zero", FEATURE_NAMES[j]);
        }
        let sd = sd.max(STD_FLOOR);
        for i in 0..m {
            z[(i, j)] = (raw[(i, j)] - mean) / sd;
        }
        means.push(mean);
        stds.push(sd);
    }
    let pca = pca_fit(&z, 2)?;
    Ok(InstanceSpace {
        coordinates: pca.transform(&z),
        component_loadings: pca.components,
        explained_variance_ratio: pca.explained_variance_ratio,
        feature_means: means,
        feature_stds: stds,
    })
}
