//! Initialization and variation operators.
//!
//! Every operator is a pure function of its inputs and the supplied [`Rng`];
//! nothing here evaluates fitness.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Gene, Individual};
use crate::numerics::{haar_rotation, rotation_fractional_power, Matrix, Rng};

/// Lower bound on any axis variance, relative to the variance sampling bound.
pub const VARIANCE_FLOOR_FRACTION: f64 = 1e-6;

const MAX_RESAMPLES: usize = 16;

/// Shape of the initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    /// Means are drawn from `U(0, beta_mean)^D`.
    pub beta_mean: f64,
    /// Axis variances are drawn from `U(0, beta_var)^D`.
    pub beta_var: f64,
    pub equal_sizes: bool,
    pub min_cluster_size: usize,
}

impl InitParams {
    pub const DEFAULT_BETA_VAR: f64 = 1.0;
    pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 5;

    /// Defaults: `beta_var = 1`, `beta_mean = 10·sqrt(beta_var)`, random
    /// cluster sizes of at least 5 points (fewer if `n` cannot afford it).
    pub fn new(n: usize, k: usize, d: usize) -> Self {
        let beta_var = Self::DEFAULT_BETA_VAR;
        let min_cluster_size = if k > 0 {
            Self::DEFAULT_MIN_CLUSTER_SIZE.min(n / k).max(1)
        } else {
            1
        };
        Self {
            n,
            k,
            d,
            beta_mean: Self::default_beta_mean(beta_var),
            beta_var,
            equal_sizes: false,
            min_cluster_size,
        }
    }

    pub fn default_beta_mean(beta_var: f64) -> f64 {
        10.0 * beta_var.sqrt()
    }

    pub fn variance_floor(&self) -> f64 {
        VARIANCE_FLOOR_FRACTION * self.beta_var
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("init.k must be at least 1".into()));
        }
        if self.d == 0 {
            return Err(Error::Config("init.d must be at least 1".into()));
        }
        if !(self.beta_mean > 0.0 && self.beta_mean.is_finite()) {
            return Err(Error::Config("init.beta_mean must be positive".into()));
        }
        if !(self.beta_var > 0.0 && self.beta_var.is_finite()) {
            return Err(Error::Config("init.beta_var must be positive".into()));
        }
        if self.k * self.min_cluster_size.max(1) > self.n {
            return Err(Error::Config(format!(
                "init.n = {} cannot hold {} clusters of at least {} points",
                self.n,
                self.k,
                self.min_cluster_size.max(1)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanOperator {
    /// Gaussian step around the current mean.
    Original,
    /// Move along the line to another cluster's mean.
    Rails,
    /// PSO-style step towards/away from another mean and the data mean, with
    /// a random direction.
    PsoRandom,
    /// As `PsoRandom` but the direction follows the sign of `s_all - s_t`.
    PsoInformed,
    /// Differential step `F·(μ_r1 − μ_r2)`.
    De,
}

impl MeanOperator {
    pub const ALL: [MeanOperator; 5] = [
        MeanOperator::Original,
        MeanOperator::Rails,
        MeanOperator::PsoRandom,
        MeanOperator::PsoInformed,
        MeanOperator::De,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeanOperator::Original => "original",
            MeanOperator::Rails => "rails",
            MeanOperator::PsoRandom => "pso_random",
            MeanOperator::PsoInformed => "pso_informed",
            MeanOperator::De => "de",
        }
    }
}

impl std::fmt::Display for MeanOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationParams {
    pub mean_operator: MeanOperator,
    /// Variance `s` of the original operator's Gaussian step.
    pub gaussian_width: f64,
    /// `F` of the DE operator, in `[0, 2]`.
    pub de_factor: f64,
    /// Fractional power `t` applied to each random rotation, in `(0, 1]`.
    pub rotation_power: f64,
    pub prob_mean: f64,
    pub prob_cov: f64,
}

impl MutationParams {
    /// Defaults for `k` clusters: PSO-random means, `p = 1/k` for both
    /// operators, `t = 0.1`, `F = 1`, `s = 1`.
    pub fn new(k: usize) -> Self {
        let p = 1.0 / k.max(1) as f64;
        Self {
            mean_operator: MeanOperator::PsoRandom,
            gaussian_width: 1.0,
            de_factor: 1.0,
            rotation_power: 0.1,
            prob_mean: p,
            prob_cov: p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("mutation.{name} must lie in [0, 1], got {p}")))
            }
        };
        prob("prob_mean", self.prob_mean)?;
        prob("prob_cov", self.prob_cov)?;
        if !(self.gaussian_width > 0.0 && self.gaussian_width.is_finite()) {
            return Err(Error::Config("mutation.gaussian_width must be positive".into()));
        }
        if !(0.0..=2.0).contains(&self.de_factor) {
            return Err(Error::Config("mutation.de_factor must lie in [0, 2]".into()));
        }
        if !(self.rotation_power > 0.0 && self.rotation_power <= 1.0) {
            return Err(Error::Config("mutation.rotation_power must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Information about the parent that some mean operators need.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MutationContext {
    /// Current overall silhouette width of the individual.
    pub s_all: Option<f64>,
    /// Silhouette target (index mode only).
    pub s_t: Option<f64>,
    pub variance_floor: f64,
}

/// Cluster sizes summing to exactly `n`, each at least `max(1, min_size)`.
///
/// Random sizes follow `min + w·(n − k·min)` with `w ~ Dir(1, …, 1)`, floored,
/// with the leftover points handed out by largest fractional part.
pub fn allocate_cluster_sizes(n: usize, k: usize, min_size: usize, equal: bool, rng: &mut Rng) -> Result<Vec<usize>> {
    let min_size = min_size.max(1);
    if k == 0 || k * min_size > n {
        return Err(Error::Config(format!(
            "cannot split {n} points into {k} clusters of at least {min_size}"
        )));
    }
    if equal {
        let (base, extra) = (n / k, n % k);
        return Ok((0..k).map(|i| base + usize::from(i < extra)).collect());
    }
    let spare = n - k * min_size;
    let w = rng.dirichlet_flat(k);
    let continuous: Vec<f64> = w.iter().map(|wi| wi * spare as f64).collect();
    let mut sizes: Vec<usize> = continuous.iter().map(|c| c.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut left = spare.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let fa = continuous[a] - continuous[a].floor();
        let fb = continuous[b] - continuous[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    Ok(sizes.into_iter().map(|s| s + min_size).collect())
}

/// Fresh gene: uniform mean, uniform (floored) axis variances, Haar rotation
/// and `size` frozen standard-normal samples.
pub fn init_gene(p: &InitParams, size: usize, rng: &mut Rng) -> Result<Gene> {
    if size == 0 {
        return Err(Error::InvalidInput("cluster size must be at least 1".into()));
    }
    let floor = p.variance_floor();
    let mean = (0..p.d).map(|_| rng.uniform_range(0.0, p.beta_mean)).collect();
    let variances = (0..p.d)
        .map(|_| rng.uniform_range(0.0, p.beta_var).max(floor))
        .collect();
    let rotation = haar_rotation(p.d, rng)?;
    let samples = Matrix::from_fn(size, p.d, |_, _| rng.normal());
    Gene::new(mean, variances, rotation, Arc::new(samples))
}

/// Initial population. Cluster sizes are drawn once and shared by every
/// individual, so all individuals carry the same ground-truth labels.
pub fn init_population(p: &InitParams, pop_size: usize, rng: &mut Rng) -> Result<Vec<Individual>> {
    p.validate()?;
    if pop_size < 2 {
        return Err(Error::Config("population size must be at least 2".into()));
    }
    let sizes = allocate_cluster_sizes(p.n, p.k, p.min_cluster_size, p.equal_sizes, rng)?;
    (0..pop_size)
        .map(|_| {
            let genes = sizes
                .iter()
                .map(|&s| init_gene(p, s, rng))
                .collect::<Result<Vec<_>>>()?;
            Individual::new(genes)
        })
        .collect()
}

/// Uniform crossover at the component level: per gene, the means are swapped
/// with probability 1/2 and, independently, the covariances (variances,
/// rotation and the frozen samples that travel with them).
pub fn crossover_uniform(a: &Individual, b: &Individual, rng: &mut Rng) -> Result<(Individual, Individual)> {
    if a.num_clusters() != b.num_clusters() || a.dim() != b.dim() || a.sizes() != b.sizes() {
        return Err(Error::Incompatible(
            "parents must share cluster count, dimension and sizes".into(),
        ));
    }
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    {
        let g1 = c1.genes_mut();
        let g2 = c2.genes_mut();
        for (x, y) in g1.iter_mut().zip(g2.iter_mut()) {
            if rng.coin() {
                std::mem::swap(&mut x.mean, &mut y.mean);
            }
            if rng.coin() {
                std::mem::swap(&mut x.axis_variances, &mut y.axis_variances);
                std::mem::swap(&mut x.rotation, &mut y.rotation);
                std::mem::swap(&mut x.base_samples, &mut y.base_samples);
            }
        }
    }
    c1.materialize()?;
    c2.materialize()?;
    Ok((c1, c2))
}

/// `μ ± w₁(μₙ − μ)`; `toward` selects the `+` branch.
pub fn rails_step(mean: &[f64], other: &[f64], w1: f64, toward: bool) -> Vec<f64> {
    let sign = if toward { 1.0 } else { -1.0 };
    mean.iter().zip(other).map(|(m, o)| m + sign * w1 * (o - m)).collect()
}

/// `μ ± [w₁(μₙ − μ) + w₂(ḡ − μ)]`; `toward` selects the `+` branch.
pub fn pso_step(mean: &[f64], other: &[f64], global: &[f64], w1: f64, w2: f64, toward: bool) -> Vec<f64> {
    let sign = if toward { 1.0 } else { -1.0 };
    mean.iter()
        .zip(other)
        .zip(global)
        .map(|((m, o), g)| m + sign * (w1 * (o - m) + w2 * (g - m)))
        .collect()
}

/// `μ + F(μ_r1 − μ_r2)`.
pub fn de_step(mean: &[f64], r1: &[f64], r2: &[f64], factor: f64) -> Vec<f64> {
    mean.iter()
        .zip(r1)
        .zip(r2)
        .map(|((m, a), b)| m + factor * (a - b))
        .collect()
}

fn other_index(i: usize, k: usize, rng: &mut Rng) -> usize {
    let n = rng.below(k - 1);
    if n >= i {
        n + 1
    } else {
        n
    }
}

fn require_clusters(operator: &'static str, needed: usize, got: usize) -> Result<()> {
    if got < needed {
        Err(Error::OperatorInapplicable { operator, needed, got })
    } else {
        Ok(())
    }
}

/// Snapshot of the parameters the mean operators read, so that mutating one
/// gene never influences the step taken by another in the same pass.
struct MeanView<'a> {
    means: Vec<&'a [f64]>,
    global: Vec<f64>,
}

impl<'a> MeanView<'a> {
    fn of(ind: &'a Individual) -> Self {
        Self {
            means: ind.genes().iter().map(|g| g.mean.as_slice()).collect(),
            global: ind.global_mean(),
        }
    }

    fn original(&self, i: usize, s: f64, rng: &mut Rng) -> Vec<f64> {
        let sd = s.sqrt();
        self.means[i].iter().map(|m| m + sd * rng.normal()).collect()
    }

    fn rails(&self, i: usize, rng: &mut Rng) -> Result<Vec<f64>> {
        let k = self.means.len();
        require_clusters("rails", 2, k)?;
        let n = other_index(i, k, rng);
        let w1 = rng.uniform();
        let toward = rng.uniform() <= 0.5;
        Ok(rails_step(self.means[i], self.means[n], w1, toward))
    }

    fn pso(&self, i: usize, rng: &mut Rng, informed: Option<bool>) -> Result<Vec<f64>> {
        let k = self.means.len();
        let name = if informed.is_some() {
            "pso_informed"
        } else {
            "pso_random"
        };
        require_clusters(name, 2, k)?;
        let n = other_index(i, k, rng);
        let w1 = rng.uniform();
        let w2 = rng.uniform();
        let toward = match informed {
            Some(t) => t,
            None => rng.uniform() <= 0.5,
        };
        Ok(pso_step(self.means[i], self.means[n], &self.global, w1, w2, toward))
    }

    fn de(&self, i: usize, factor: f64, rng: &mut Rng) -> Result<Vec<f64>> {
        let k = self.means.len();
        require_clusters("de", 3, k)?;
        let others: Vec<usize> = (0..k).filter(|&j| j != i).collect();
        let a = rng.below(others.len());
        let mut b = rng.below(others.len() - 1);
        if b >= a {
            b += 1;
        }
        Ok(de_step(
            self.means[i],
            self.means[others[a]],
            self.means[others[b]],
            factor,
        ))
    }
}

/// Direction of the informed operator: towards (`+`) when the silhouette is
/// above target, away otherwise.
pub fn informed_direction(s_all: f64, s_t: f64) -> bool {
    s_all > s_t
}

pub fn mutate_mean_original(i: usize, ind: &Individual, s: f64, rng: &mut Rng) -> Vec<f64> {
    MeanView::of(ind).original(i, s, rng)
}

pub fn mutate_mean_rails(i: usize, ind: &Individual, rng: &mut Rng) -> Result<Vec<f64>> {
    MeanView::of(ind).rails(i, rng)
}

pub fn mutate_mean_pso_random(i: usize, ind: &Individual, rng: &mut Rng) -> Result<Vec<f64>> {
    MeanView::of(ind).pso(i, rng, None)
}

pub fn mutate_mean_pso_informed(i: usize, ind: &Individual, s_all: f64, s_t: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    MeanView::of(ind).pso(i, rng, Some(informed_direction(s_all, s_t)))
}

pub fn mutate_mean_de(i: usize, ind: &Individual, factor: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    MeanView::of(ind).de(i, factor, rng)
}

/// Rotates the gene by a fractional Haar rotation and rescales its axis
/// variances by `exp(x_i − 1/D)` with `x ~ Dir(1, …, 1)`, which leaves the
/// determinant unchanged. A scaling that would push a variance under
/// `variance_floor` is redrawn; if every redraw fails the variances are kept.
pub fn mutate_covariance(gene: &Gene, t: f64, variance_floor: f64, rng: &mut Rng) -> Result<Gene> {
    let d = gene.dim();
    let mut partial = None;
    for _ in 0..MAX_RESAMPLES {
        let q = haar_rotation(d, rng)?;
        match rotation_fractional_power(&q, t) {
            Ok(p) => {
                partial = Some(p);
                break;
            }
            Err(Error::ResampleRequired) => continue,
            Err(e) => return Err(e),
        }
    }
    let partial = partial.ok_or(Error::ResampleRequired)?;
    let mut out = gene.clone();
    out.rotation = partial * &gene.rotation;

    let centre = 1.0 / d as f64;
    for _ in 0..MAX_RESAMPLES {
        let x = rng.dirichlet_flat(d);
        let scaled: Vec<f64> = gene
            .axis_variances
            .iter()
            .zip(&x)
            .map(|(v, xi)| v * (xi - centre).exp())
            .collect();
        if scaled.iter().all(|&v| v >= variance_floor) {
            out.axis_variances = scaled;
            break;
        }
    }
    Ok(out)
}

/// Per-gene mutation: the mean with probability `prob_mean` using the
/// configured operator, the covariance with probability `prob_cov`.
/// Operators that do not apply to this individual fall back to the original
/// Gaussian step.
pub fn mutate(ind: &Individual, params: &MutationParams, ctx: &MutationContext, rng: &mut Rng) -> Result<Individual> {
    let k = ind.num_clusters();
    let mut new_means: Vec<Option<Vec<f64>>> = vec![None; k];
    let mut new_genes: Vec<Option<Gene>> = vec![None; k];
    {
        let view = MeanView::of(ind);
        for i in 0..k {
            if rng.uniform() < params.prob_mean {
                let stepped = match params.mean_operator {
                    MeanOperator::Original => Ok(view.original(i, params.gaussian_width, rng)),
                    MeanOperator::Rails => view.rails(i, rng),
                    MeanOperator::PsoRandom => view.pso(i, rng, None),
                    MeanOperator::PsoInformed => match (ctx.s_all, ctx.s_t) {
                        (Some(s_all), Some(s_t)) => view.pso(i, rng, Some(informed_direction(s_all, s_t))),
                        _ => Err(Error::InvalidInput(
                            "pso_informed needs the current and target silhouette".into(),
                        )),
                    },
                    MeanOperator::De => view.de(i, params.de_factor, rng),
                };
                new_means[i] = Some(match stepped {
                    Ok(m) => m,
                    Err(e) => {
                        log::debug!("{e}; using the original mean operator for cluster {i}");
                        view.original(i, params.gaussian_width, rng)
                    }
                });
            }
            if rng.uniform() < params.prob_cov {
                new_genes[i] = Some(mutate_covariance(
                    &ind.genes()[i],
                    params.rotation_power,
                    ctx.variance_floor,
                    rng,
                )?);
            }
        }
    }
    let mut child = ind.clone();
    let changed = new_means.iter().any(Option::is_some) || new_genes.iter().any(Option::is_some);
    {
        let genes = child.genes_mut();
        for (i, gene) in genes.iter_mut().enumerate() {
            if let Some(g) = new_genes[i].take() {
                *gene = g;
            }
            if let Some(m) = new_means[i].take() {
                gene.mean = m;
            }
        }
    }
    if changed {
        child.materialize()?;
    }
    Ok(child)
}
