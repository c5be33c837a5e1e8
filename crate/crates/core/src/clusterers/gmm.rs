use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::Partition;
use crate::numerics::distance::PointRows;
use crate::numerics::{Matrix, Rng};

use super::kmeans::{kmeans_rows, mean_feature_variance};

/// Diagonal loading relative to the mean feature variance.
pub const GMM_REG_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GmmFit {
    pub partition: Partition,
    pub weights: Vec<f64>,
    /// `k × D` component means.
    pub means: Matrix,
    pub covariances: Vec<Matrix>,
    /// Mean per-point log-likelihood at every E-step.
    pub log_likelihood_trace: Vec<f64>,
    pub converged: bool,
}

struct Params {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Matrix>,
}

/// Lower Cholesky factor and `log det` of every component covariance.
struct Factors {
    lower: Vec<Matrix>,
    log_det: Vec<f64>,
}

fn factorize(params: &Params) -> Option<Factors> {
    let mut lower = Vec::with_capacity(params.covariances.len());
    let mut log_det = Vec::with_capacity(params.covariances.len());
    for cov in &params.covariances {
        let l = cov.clone().cholesky()?.unpack();
        log_det.push(2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>());
        lower.push(l);
    }
    Some(Factors { lower, log_det })
}

/// Fills `log_resp` (row-major `N × k`) with normalized log responsibilities
/// and returns the mean log-likelihood.
fn e_step(rows: &PointRows, params: &Params, factors: &Factors, log_resp: &mut [f64]) -> f64 {
    let (n, d) = (rows.len(), rows.dim());
    let k = params.weights.len();
    let norm = d as f64 * (2.0 * PI).ln();
    let mut z = vec![0.0; d];
    let mut total = 0.0;
    for i in 0..n {
        let x = rows.row(i);
        let out = &mut log_resp[i * k..(i + 1) * k];
        for c in 0..k {
            // Forward substitution L z = x − μ.
            let l = &factors.lower[c];
            let mu = &params.means[c];
            let mut maha = 0.0;
            for r in 0..d {
                let mut acc = x[r] - mu[r];
                for s in 0..r {
                    acc -= l[(r, s)] * z[s];
                }
                z[r] = acc / l[(r, r)];
                maha += z[r] * z[r];
            }
            out[c] = params.weights[c].ln() - 0.5 * (norm + factors.log_det[c] + maha);
        }
        let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + out.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
        for v in out.iter_mut() {
            *v -= lse;
        }
        total += lse;
    }
    total / n as f64
}

fn m_step(rows: &PointRows, resp: &[f64], k: usize, reg: f64) -> Option<Params> {
    let (n, d) = (rows.len(), rows.dim());
    let mut nk = vec![0.0; k];
    let mut means = vec![vec![0.0; d]; k];
    for i in 0..n {
        let x = rows.row(i);
        for c in 0..k {
            let r = resp[i * k + c];
            nk[c] += r;
            for (m, v) in means[c].iter_mut().zip(x) {
                *m += r * v;
            }
        }
    }
    let tiny = 10.0 * f64::EPSILON;
    if nk.iter().any(|&v| v < tiny) {
        return None;
    }
    for (m, &w) in means.iter_mut().zip(&nk) {
        for v in m.iter_mut() {
            *v /= w;
        }
    }
    let mut covariances = vec![Matrix::zeros(d, d); k];
    let mut diff = vec![0.0; d];
    for i in 0..n {
        let x = rows.row(i);
        for c in 0..k {
            let r = resp[i * k + c];
            if r == 0.0 {
                continue;
            }
            for (t, (a, b)) in diff.iter_mut().zip(x.iter().zip(&means[c])) {
                *t = a - b;
            }
            let cov = &mut covariances[c];
            for p in 0..d {
                let rp = r * diff[p];
                for q in 0..=p {
                    cov[(p, q)] += rp * diff[q];
                }
            }
        }
    }
    for (cov, &w) in covariances.iter_mut().zip(&nk) {
        for p in 0..d {
            for q in 0..=p {
                let v = cov[(p, q)] / w;
                cov[(p, q)] = v;
                cov[(q, p)] = v;
            }
            cov[(p, p)] += reg;
        }
    }
    let weights = nk.iter().map(|v| v / n as f64).collect();
    Some(Params {
        weights,
        means,
        covariances,
    })
}

fn hard_labels(resp: &[f64], n: usize, k: usize) -> Vec<usize> {
    (0..n)
        .map(|i| {
            let row = &resp[i * k..(i + 1) * k];
            let mut best = 0;
            for c in 1..k {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn fit_once(rows: &PointRows, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<GmmFit> {
    let n = rows.len();
    let reg = GMM_REG_FRACTION * mean_feature_variance(rows).max(f64::MIN_POSITIVE);
    let init = kmeans_rows(rows, k, seed, 300, 1e-4)?;
    let mut resp = vec![0.0; n * k];
    for (i, &l) in init.partition.labels().iter().enumerate() {
        resp[i * k + l] = 1.0;
    }
    let degenerate = || Error::Clusterer("degenerate Gaussian mixture component".into());
    let mut params = m_step(rows, &resp, k, reg).ok_or_else(degenerate)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut previous = f64::NEG_INFINITY;
    for _ in 0..max_iter {
        let factors = factorize(&params).ok_or_else(degenerate)?;
        let ll = e_step(rows, &params, &factors, &mut resp);
        trace.push(ll);
        for v in resp.iter_mut() {
            *v = v.exp();
        }
        params = m_step(rows, &resp, k, reg).ok_or_else(degenerate)?;
        if (ll - previous).abs() < tol {
            converged = true;
            break;
        }
        previous = ll;
    }
    let factors = factorize(&params).ok_or_else(degenerate)?;
    let ll = e_step(rows, &params, &factors, &mut resp);
    trace.push(ll);
    let labels = hard_labels(&resp, n, k);
    let d = rows.dim();
    let flat: Vec<f64> = params.means.iter().flatten().copied().collect();
    Ok(GmmFit {
        partition: Partition::new(labels, k)?,
        weights: params.weights,
        means: Matrix::from_row_slice(k, d, &flat),
        covariances: params.covariances,
        log_likelihood_trace: trace,
        converged,
    })
}

/// Full-covariance EM initialised from one k-means++ run. Iterates until the
/// mean log-likelihood gains less than `tol`. A degenerate fit is restarted
/// once from a fresh seed before giving up.
pub fn gmm_em_fit(points: &Matrix, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<GmmFit> {
    let rows = PointRows::new(points);
    let n = rows.len();
    if k == 0 || n < k {
        return Err(Error::InvalidInput(format!(
            "GMM needs 1 ≤ k ≤ N, got k = {k}, N = {n}"
        )));
    }
    if rows.dim() == 0 {
        return Err(Error::InvalidDimension(0));
    }
    match fit_once(&rows, k, seed, max_iter, tol) {
        Err(Error::Clusterer(msg)) => {
            log::debug!("{msg}; restarting EM");
            let retry = Rng::derive(seed, 1).seed();
            fit_once(&rows, k, retry, max_iter, tol)
        }
        other => other,
    }
}

pub fn gmm_em(points: &Matrix, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<Partition> {
    gmm_em_fit(points, k, seed, max_iter, tol).map(|f| f.partition)
}
