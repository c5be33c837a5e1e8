use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Partition;
use crate::numerics::distance::PointRows;
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkageMethod {
    /// Distance between clusters is the closest pair of members.
    Single,
    /// Unweighted mean over all cross-cluster member pairs (UPGMA).
    Average,
}

/// One agglomeration step. `a < b` are representative point indices of the
/// two merged clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
}

/// Upper-triangular pairwise distances, row by row.
struct Condensed {
    n: usize,
    data: Vec<f64>,
}

impl Condensed {
    fn new(rows: &PointRows) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                data.push(rows.distance(i, j));
            }
        }
        Self { n, data }
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.index(i, j);
        self.data[idx] = v;
    }
}

/// Full merge sequence via the nearest-neighbour chain algorithm with
/// Lance–Williams updates, returned in order of non-decreasing height.
/// Both supported methods are reducible, so the sorted chain merges coincide
/// with the greedy closest-pair agglomeration.
pub fn linkage_merges(points: &Matrix, method: LinkageMethod) -> Vec<Merge> {
    let rows = PointRows::new(points);
    let n = rows.len();
    if n < 2 {
        return Vec::new();
    }
    let mut dist = Condensed::new(&rows);
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    while merges.len() < n - 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster remains"));
        }
        let (x, y) = loop {
            let x = *chain.last().expect("chain is non-empty");
            let prev = if chain.len() >= 2 {
                Some(chain[chain.len() - 2])
            } else {
                None
            };
            // Prefer the previous chain element on ties so the chain terminates.
            let (mut best, mut best_d) = match prev {
                Some(p) => (p, dist.get(x, p)),
                None => (usize::MAX, f64::INFINITY),
            };
            for i in 0..n {
                if i == x || !active[i] {
                    continue;
                }
                let d = dist.get(x, i);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            if Some(best) == prev {
                chain.pop();
                chain.pop();
                break (x, best);
            }
            chain.push(best);
        };
        let height = dist.get(x, y);
        let (keep, drop) = (x.min(y), x.max(y));
        merges.push(Merge {
            a: keep,
            b: drop,
            height,
        });
        let (sk, sd) = (size[keep] as f64, size[drop] as f64);
        for i in 0..n {
            if !active[i] || i == keep || i == drop {
                continue;
            }
            let (dk, dd) = (dist.get(i, keep), dist.get(i, drop));
            let updated = match method {
                LinkageMethod::Single => dk.min(dd),
                LinkageMethod::Average => (sk * dk + sd * dd) / (sk + sd),
            };
            dist.set(i, keep, updated);
        }
        active[drop] = false;
        size[keep] += size[drop];
        // Chain entries other than the merged pair remain valid for reducible
        // linkages; a stale reference to `drop` cannot occur because it was
        // just popped.
    }
    merges.sort_by(|p, q| p.height.total_cmp(&q.height));
    merges
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Cuts the merge sequence after `n − k` merges.
pub fn cut_merges(n: usize, merges: &[Merge], k: usize) -> Result<Partition> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "linkage needs 1 ≤ k ≤ N, got k = {k}, N = {n}"
        )));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for m in merges.iter().take(n - k) {
        let (ra, rb) = (find(&mut parent, m.a), find(&mut parent, m.b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(Partition::from_raw_labels(&roots))
}

/// Agglomerative clustering stopped at `k` clusters.
pub fn linkage(points: &Matrix, k: usize, method: LinkageMethod) -> Result<Partition> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "linkage needs 1 ≤ k ≤ N, got k = {k}, N = {n}"
        )));
    }
    cut_merges(n, &linkage_merges(points, method), k)
}
