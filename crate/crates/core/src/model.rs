//! Genotype of a synthetic dataset: one Gaussian gene per cluster, plus the
//! points those genes generate.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{cholesky_lower, Matrix};

/// Assignment of `N` points to `k` cluster labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for {k} clusters"
            )));
        }
        Ok(Self { labels, k })
    }

    /// Relabels arbitrary integer labels to `0..k` in order of first
    /// appearance.
    pub fn from_raw_labels<T: Copy + Eq + std::hash::Hash>(raw: &[T]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { labels, k: map.len() }
    }

    /// Consecutive blocks: `sizes[0]` points labelled 0, then `sizes[1]`
    /// labelled 1, and so on.
    pub fn from_sizes(sizes: &[usize]) -> Self {
        let labels = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
            .collect();
        Self { labels, k: sizes.len() }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Number of labels that actually occur.
    pub fn occupied(&self) -> usize {
        self.sizes().iter().filter(|&&s| s > 0).count()
    }
}

/// Generating distribution of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Gene {
    pub mean: Vec<f64>,
    /// Eigenvalues of the covariance (the diagonal of the axis-aligned
    /// covariance before rotation). Every determinant-one scaling applied by
    /// mutation is folded in here.
    pub axis_variances: Vec<f64>,
    /// Accumulated rotation, special orthogonal.
    pub rotation: Matrix,
    /// Standard-normal draws made once at initialization; `size × D`.
    pub base_samples: Arc<Matrix>,
}

impl Gene {
    pub fn new(mean: Vec<f64>, axis_variances: Vec<f64>, rotation: Matrix, base_samples: Arc<Matrix>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if axis_variances.len() != d || rotation.shape() != (d, d) || base_samples.ncols() != d {
            return Err(Error::InvalidInput("gene components disagree on dimension".into()));
        }
        if base_samples.nrows() == 0 {
            return Err(Error::InvalidInput("a cluster needs at least one point".into()));
        }
        if axis_variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput("axis variances must be positive and finite".into()));
        }
        Ok(Self {
            mean,
            axis_variances,
            rotation,
            base_samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn size(&self) -> usize {
        self.base_samples.nrows()
    }

    /// `Σ = R · diag(axis_variances) · Rᵀ`, symmetrized against round-off.
    pub fn full_covariance(&self) -> Matrix {
        let mut scaled = self.rotation.clone();
        for (j, v) in self.axis_variances.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*v);
        }
        let sigma = scaled * self.rotation.transpose();
        (&sigma + sigma.transpose()) * 0.5
    }

    /// Determinant of the covariance, i.e. the product of the variances.
    pub fn determinant(&self) -> f64 {
        self.axis_variances.iter().product()
    }

    /// Writes `μ + Z·Lᵀ` for this gene's frozen samples `Z` into `out`,
    /// starting at row `offset`.
    fn write_points(&self, index: usize, out: &mut Matrix, offset: usize) -> Result<()> {
        let l = cholesky_lower(&self.full_covariance()).map_err(|_| Error::Materialization(index))?;
        let block = &*self.base_samples * l.transpose();
        let mut rows = out.rows_mut(offset, self.size());
        rows.copy_from(&block);
        for (j, m) in self.mean.iter().enumerate() {
            rows.column_mut(j).add_scalar_mut(*m);
        }
        Ok(())
    }
}

/// Cached outcome of evaluating an individual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Objective value; minimized in index mode, maximized in versus mode.
    pub fitness: f64,
    /// Quadratic constraint penalty, 0 when feasible.
    pub penalty: f64,
    /// Overall silhouette width against the ground truth.
    pub silhouette: f64,
    pub overlap: f64,
    pub eccentricity: f64,
    pub ari_winner: Option<f64>,
    pub ari_loser: Option<f64>,
}

/// One candidate dataset.
#[derive(Debug, Clone)]
pub struct Individual {
    genes: Vec<Gene>,
    points: Matrix,
    partition: Arc<Partition>,
    evaluation: Option<Evaluation>,
}

impl Individual {
    /// Builds and materializes an individual. Cluster `k` occupies the rows
    /// after clusters `0..k`.
    pub fn new(genes: Vec<Gene>) -> Result<Self> {
        let first = genes
            .first()
            .ok_or_else(|| Error::InvalidInput("an individual needs at least one gene".into()))?;
        let d = first.dim();
        if genes.iter().any(|g| g.dim() != d) {
            return Err(Error::InvalidInput("genes disagree on dimension".into()));
        }
        let sizes: Vec<usize> = genes.iter().map(Gene::size).collect();
        let n = sizes.iter().sum();
        let mut ind = Self {
            genes,
            points: Matrix::zeros(n, d),
            partition: Arc::new(Partition::from_sizes(&sizes)),
            evaluation: None,
        };
        ind.materialize()?;
        Ok(ind)
    }

    /// Regenerates the points from the genes and drops any cached
    /// evaluation.
    pub fn materialize(&mut self) -> Result<()> {
        let mut offset = 0;
        for (k, gene) in self.genes.iter().enumerate() {
            gene.write_points(k, &mut self.points, offset)?;
            offset += gene.size();
        }
        self.evaluation = None;
        Ok(())
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    /// Mutable access to the genes. The caller must re-materialize.
    pub fn genes_mut(&mut self) -> &mut [Gene] {
        self.evaluation = None;
        &mut self.genes
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn labels(&self) -> &[usize] {
        self.partition.labels()
    }

    pub fn num_clusters(&self) -> usize {
        self.genes.len()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.genes.iter().map(Gene::size).collect()
    }

    pub fn evaluation(&self) -> Option<&Evaluation> {
        self.evaluation.as_ref()
    }

    pub fn set_evaluation(&mut self, evaluation: Evaluation) {
        self.evaluation = Some(evaluation);
    }

    pub fn is_stale(&self) -> bool {
        self.evaluation.is_none()
    }

    pub fn fitness(&self) -> Option<f64> {
        self.evaluation.map(|e| e.fitness)
    }

    pub fn penalty(&self) -> Option<f64> {
        self.evaluation.map(|e| e.penalty)
    }

    /// Mean over all materialized points.
    pub fn global_mean(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.points.column(j).mean()).collect()
    }
}
