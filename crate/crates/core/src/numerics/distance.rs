use super::linalg::Matrix;

/// Squared Euclidean distance between two equal-length slices.
#[inline]
pub fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0_f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            let t = x[l] - y[l];
            acc[l] += t * t;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let t = x - y;
        tail += t * t;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sq_euclidean(a, b).sqrt()
}

/// Points copied into row-major order so each point is a contiguous slice.
#[derive(Debug, Clone)]
pub struct PointRows {
    dim: usize,
    data: Vec<f64>,
}

impl PointRows {
    pub fn new(points: &Matrix) -> Self {
        let (n, d) = points.shape();
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            data.extend(points.row(i).iter());
        }
        Self { dim: d, data }
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.row(i), self.row(j))
    }
}

/// One pass over all point pairs collecting, for every point, the summed
/// distance to each cluster and the index of its nearest neighbor.
#[derive(Debug, Clone)]
pub struct ClusterScan {
    pub k: usize,
    /// `sums[i * k + c]`: sum of distances from point `i` to members of `c`
    /// (excluding `i` itself).
    pub sums: Vec<f64>,
    pub counts: Vec<usize>,
    /// Nearest other point; ties go to the lowest index. `usize::MAX` when
    /// the dataset has a single point.
    pub nearest: Vec<usize>,
}

pub fn cluster_scan(points: &Matrix, labels: &[usize], k: usize) -> ClusterScan {
    let rows = PointRows::new(points);
    let n = rows.len();
    debug_assert_eq!(n, labels.len());
    let mut sums = vec![0.0; n * k];
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let mut nearest = vec![usize::MAX; n];
    let mut nearest_d = vec![f64::INFINITY; n];
    // Visiting pairs with i < j, ascending, presents every point's candidates
    // in increasing index order, so strict comparison keeps the lowest index.
    for i in 0..n {
        let xi = rows.row(i);
        let li = labels[i];
        let mut best = nearest_d[i];
        let mut best_j = nearest[i];
        for j in (i + 1)..n {
            let d2 = sq_euclidean(xi, rows.row(j));
            let d = d2.sqrt();
            sums[i * k + labels[j]] += d;
            sums[j * k + li] += d;
            if d2 < best {
                best = d2;
                best_j = j;
            }
            if d2 < nearest_d[j] {
                nearest_d[j] = d2;
                nearest[j] = i;
            }
        }
        nearest_d[i] = best;
        nearest[i] = best_j;
    }
    ClusterScan {
        k,
        sums,
        counts,
        nearest,
    }
}
