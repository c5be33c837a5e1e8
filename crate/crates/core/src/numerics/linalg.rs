//! Dense linear algebra used across the crate.
//!
//! Matrices are small (dimension at most a few dozen) so everything here is a
//! plain O(D³) routine on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, Schur, SymmetricEigen};

use super::rng::Rng;
use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

const SYMMETRY_TOL: f64 = 1e-9;

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_symmetric(s: &Matrix) -> Result<()> {
    if !s.is_square() {
        return Err(Error::InvalidInput(format!(
            "expected a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = s.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let asym = max_abs_diff(s, &s.transpose());
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Uniformly distributed rotation (Haar measure on SO(dim)).
///
/// QR of a Gaussian matrix with the signs of R's diagonal pushed into Q gives
/// a Haar-distributed orthogonal matrix; a reflection is turned into a
/// rotation by negating the first column.
pub fn haar_rotation(dim: usize, rng: &mut Rng) -> Result<Matrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    let z = Matrix::from_fn(dim, dim, |_, _| rng.normal());
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    Ok(q)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending and the
/// matching eigenvectors as columns.
pub fn sym_eigen(s: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    check_symmetric(s)?;
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Eigenvalues of a symmetric matrix in descending order.
pub fn sym_eigenvalues(s: &Matrix) -> Result<Vec<f64>> {
    sym_eigen(s).map(|(values, _)| values)
}

pub fn cholesky_lower(s: &Matrix) -> Result<Matrix> {
    if !s.is_square() {
        return Err(Error::Decomposition("cholesky of a non-square matrix".into()));
    }
    Cholesky::new(s.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::Decomposition("matrix is not positive definite".into()))
}

/// Singular values, descending.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidInput("singular values of an empty matrix".into()));
    }
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Real Schur form of a rotation. A rotation is normal, so its Schur factor
/// is block diagonal: a 2×2 block per invariant plane, rotating by `θ`, and
/// 1×1 blocks equal to `+1` elsewhere.
struct RotationSpectrum {
    basis: Matrix,
    /// `(first index, θ)` for every 2×2 block.
    planes: Vec<(usize, f64)>,
}

/// Off-diagonal Schur entries below this size are taken as zero.
const SCHUR_BLOCK_TOL: f64 = 1e-12;
/// Rotations with a conjugate pair close to ±1 deflate slowly; a few need
/// more than 10⁴ QR sweeps at D = 50.
const SCHUR_MAX_ITERATIONS: usize = 1_000_000;

fn rotation_spectrum(q: &Matrix) -> Result<RotationSpectrum> {
    if !q.is_square() || q.nrows() == 0 {
        return Err(Error::InvalidDimension(q.nrows()));
    }
    let n = q.nrows();
    let schur = Schur::try_new(q.clone(), f64::EPSILON, SCHUR_MAX_ITERATIONS)
        .ok_or_else(|| Error::Decomposition("Schur iteration did not converge".into()))?;
    let (basis, t) = schur.unpack();
    let mut planes = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > SCHUR_BLOCK_TOL {
            let cos = 0.5 * (t[(i, i)] + t[(i + 1, i + 1)]);
            let sin = 0.5 * (t[(i + 1, i)] - t[(i, i + 1)]);
            if 1.0 + cos / cos.hypot(sin) < 1e-9 {
                return Err(Error::ResampleRequired);
            }
            planes.push((i, sin.atan2(cos)));
            i += 2;
        } else {
            if t[(i, i)] < 0.0 {
                return Err(Error::ResampleRequired);
            }
            i += 1;
        }
    }
    Ok(RotationSpectrum { basis, planes })
}

/// `U · B · Uᵀ` where `B` is the identity except for `block(θ)` in each
/// invariant plane.
fn rebuild(spec: &RotationSpectrum, identity: f64, block: impl Fn(f64) -> [[f64; 2]; 2]) -> Matrix {
    let n = spec.basis.nrows();
    let mut b = Matrix::identity(n, n) * identity;
    for &(i, theta) in &spec.planes {
        let m = block(theta);
        b[(i, i)] = m[0][0];
        b[(i, i + 1)] = m[0][1];
        b[(i + 1, i)] = m[1][0];
        b[(i + 1, i + 1)] = m[1][1];
    }
    &spec.basis * b * spec.basis.transpose()
}

/// Principal logarithm of a rotation: a skew-symmetric generator `A` with
/// `exp(A) = Q`.
pub fn rotation_log(q: &Matrix) -> Result<Matrix> {
    let spec = rotation_spectrum(q)?;
    let a = rebuild(&spec, 0.0, |theta| [[0.0, -theta], [theta, 0.0]]);
    Ok((&a - a.transpose()) * 0.5)
}

/// `Q^t = exp(t·log Q)` for a rotation `Q`: every invariant-plane rotation by
/// `θ` becomes a rotation by `tθ`.
pub fn rotation_fractional_power(q: &Matrix, t: f64) -> Result<Matrix> {
    let spec = rotation_spectrum(q)?;
    Ok(rebuild(&spec, 1.0, |theta| {
        let (s, c) = (t * theta).sin_cos();
        [[c, -s], [s, c]]
    }))
}

/// Principal components of a data matrix (rows are observations).
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// One orthonormal component per row.
    pub components: Matrix,
    pub explained_variance_ratio: Vec<f64>,
}

impl Pca {
    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut centered = x.clone();
        for (j, m) in self.mean.iter().enumerate() {
            centered.column_mut(j).add_scalar_mut(-m);
        }
        centered * self.components.transpose()
    }

    pub fn inverse_transform(&self, y: &Matrix) -> Matrix {
        let mut x = y * &self.components;
        for (j, m) in self.mean.iter().enumerate() {
            x.column_mut(j).add_scalar_mut(*m);
        }
        x
    }
}

/// PCA through the eigen-decomposition of the scatter matrix. Columns are
/// centered first. Each component's sign is fixed so that its largest
/// absolute loading is positive.
pub fn pca_fit(x: &Matrix, n_components: usize) -> Result<Pca> {
    let (n, d) = x.shape();
    if n_components == 0 || n_components > d {
        return Err(Error::InvalidInput(format!(
            "cannot extract {n_components} components from {d} columns"
        )));
    }
    if n <= n_components {
        return Err(Error::InvalidInput(format!(
            "need more than {n_components} rows, got {n}"
        )));
    }
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).mean()).collect();
    let mut centered = x.clone();
    for (j, m) in mean.iter().enumerate() {
        centered.column_mut(j).add_scalar_mut(-m);
    }
    let scatter = centered.transpose() * &centered;
    let (values, vectors) = sym_eigen(&scatter)?;
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let mut components = Matrix::zeros(n_components, d);
    for c in 0..n_components {
        let col = vectors.column(c);
        let pivot = col
            .iter()
            .fold(0.0_f64, |best, &v| if v.abs() > best.abs() { v } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[(c, j)] = sign * col[j];
        }
    }
    let explained_variance_ratio = values[..n_components]
        .iter()
        .map(|v| if total > 0.0 { v.max(0.0) / total } else { 0.0 })
        .collect();
    Ok(Pca {
        mean,
        components,
        explained_variance_ratio,
    })
}
