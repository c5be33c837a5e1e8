//! Benchmark clustering algorithms and the adjusted Rand index.
//!
//! Clusterers only ever see the points and the requested number of clusters.

mod ari;
mod gmm;
mod kmeans;
mod linkage;

use serde::{Deserialize, Serialize};

pub use ari::{ari, ari_labels};
pub use gmm::{gmm_em, gmm_em_fit, GmmFit, GMM_REG_FRACTION};
pub use kmeans::{kmeans_pp, kmeans_pp_fit, KMeansFit};
pub use linkage::{cut_merges, linkage, linkage_merges, LinkageMethod, Merge};

use crate::error::Result;
use crate::model::Partition;
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClustererKind {
    #[serde(alias = "kmeanspp", alias = "kmeans++")]
    KmeansPp,
    Gmm,
    SingleLinkage,
    AverageLinkage,
}

impl ClustererKind {
    pub const ALL: [ClustererKind; 4] = [
        ClustererKind::AverageLinkage,
        ClustererKind::Gmm,
        ClustererKind::KmeansPp,
        ClustererKind::SingleLinkage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClustererKind::KmeansPp => "kmeans_pp",
            ClustererKind::Gmm => "gmm",
            ClustererKind::SingleLinkage => "single_linkage",
            ClustererKind::AverageLinkage => "average_linkage",
        }
    }

    /// Whether the result depends on `init_seed`.
    pub fn is_stochastic(self) -> bool {
        matches!(self, ClustererKind::KmeansPp | ClustererKind::Gmm)
    }

    pub fn default_max_iter(self) -> usize {
        match self {
            ClustererKind::KmeansPp => 300,
            ClustererKind::Gmm => 100,
            _ => 0,
        }
    }

    pub fn default_tol(self) -> f64 {
        match self {
            ClustererKind::KmeansPp => 1e-4,
            ClustererKind::Gmm => 1e-3,
            _ => 0.0,
        }
    }
}

impl std::fmt::Display for ClustererKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully parameterized clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClustererSpec {
    pub kind: ClustererKind,
    pub k: usize,
    pub init_seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl ClustererSpec {
    pub fn new(kind: ClustererKind, k: usize, init_seed: u64) -> Self {
        Self {
            kind,
            k,
            init_seed,
            max_iter: kind.default_max_iter(),
            tol: kind.default_tol(),
        }
    }

    pub fn fit(&self, points: &Matrix) -> Result<Partition> {
        match self.kind {
            ClustererKind::KmeansPp => kmeans_pp(points, self.k, self.init_seed, self.max_iter, self.tol),
            ClustererKind::Gmm => gmm_em(points, self.k, self.init_seed, self.max_iter, self.tol),
            ClustererKind::SingleLinkage => linkage(points, self.k, LinkageMethod::Single),
            ClustererKind::AverageLinkage => linkage(points, self.k, LinkageMethod::Average),
        }
    }
}

#[cfg(test)]
pub(crate) mod testdata {
    use crate::model::Partition;
    use crate::numerics::{Matrix, Rng};

    /// Isotropic 2-D Gaussian blobs, `per` points each, in label order.
    pub fn blobs(centres: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> (Matrix, Partition) {
        let mut rng = Rng::new(seed);
        let n = centres.len() * per;
        let mut data = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for (c, centre) in centres.iter().enumerate() {
            for _ in 0..per {
                data.push(centre[0] + spread * rng.normal());
                data.push(centre[1] + spread * rng.normal());
                labels.push(c);
            }
        }
        (
            Matrix::from_row_slice(n, 2, &data),
            Partition::new(labels, centres.len()).unwrap(),
        )
    }
}
