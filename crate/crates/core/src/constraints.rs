//! Overlap and eccentricity constraints with a quadratic penalty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Individual;
use crate::numerics::distance::{cluster_scan, ClusterScan};
use crate::numerics::Matrix;

/// Fraction of points whose nearest neighbour carries another label, from a
/// precomputed scan.
pub fn overlap_from_scan(scan: &ClusterScan, labels: &[usize]) -> f64 {
    let n = labels.len();
    let foreign = scan
        .nearest
        .iter()
        .enumerate()
        .filter(|&(i, &j)| j != usize::MAX && labels[j] != labels[i])
        .count();
    foreign as f64 / n as f64
}

pub fn overlap(points: &Matrix, labels: &[usize]) -> Result<f64> {
    if points.nrows() != labels.len() {
        return Err(Error::InvalidInput("points and labels differ in length".into()));
    }
    if labels.len() < 2 {
        return Err(Error::InvalidInput("overlap needs at least two points".into()));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    Ok(overlap_from_scan(&cluster_scan(points, labels, k), labels))
}

/// Smallest max/min axis-variance ratio over all clusters.
pub fn eccentricity_constraint(ind: &Individual) -> f64 {
    ind.genes()
        .iter()
        .map(|g| {
            let hi = g.axis_variances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = g.axis_variances.iter().copied().fold(f64::INFINITY, f64::min);
            hi / lo
        })
        .fold(f64::INFINITY, f64::min)
}

/// Active thresholds; an absent bound contributes nothing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    #[serde(default)]
    pub overlap_upper: Option<f64>,
    #[serde(default)]
    pub eccen_lower: Option<f64>,
}

impl ConstraintSet {
    pub fn validate(&self) -> Result<()> {
        if let Some(o) = self.overlap_upper {
            if !(0.0..=1.0).contains(&o) {
                return Err(Error::Config(format!("constraints.overlap_upper {o} outside [0, 1]")));
            }
        }
        if let Some(e) = self.eccen_lower {
            if !(e >= 1.0 && e.is_finite()) {
                return Err(Error::Config(format!("constraints.eccen_lower {e} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Sum of squared violations.
    pub fn penalty_from(&self, overlap: f64, eccentricity: f64) -> f64 {
        let mut total = 0.0;
        if let Some(upper) = self.overlap_upper {
            total += (overlap - upper).max(0.0).powi(2);
        }
        if let Some(lower) = self.eccen_lower {
            total += (lower - eccentricity).max(0.0).powi(2);
        }
        total
    }
}

pub fn penalty(ind: &Individual, cs: &ConstraintSet) -> Result<f64> {
    let o = if cs.overlap_upper.is_some() {
        overlap(ind.points(), ind.labels())?
    } else {
        0.0
    };
    Ok(cs.penalty_from(o, eccentricity_constraint(ind)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gene;
    use crate::numerics::distance::sq_euclidean;
    use crate::numerics::Rng;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn brute_overlap(points: &Matrix, labels: &[usize]) -> f64 {
        let n = labels.len();
        let row = |i: usize| points.row(i).iter().copied().collect::<Vec<f64>>();
        let mut foreign = 0;
        for i in 0..n {
            let mut best = (f64::INFINITY, 0);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = sq_euclidean(&row(i), &row(j));
                if d < best.0 {
                    best = (d, j);
                }
            }
            if labels[best.1] != labels[i] {
                foreign += 1;
            }
        }
        foreign as f64 / n as f64
    }

    fn gene(variances: &[f64]) -> Gene {
        let d = variances.len();
        Gene::new(
            vec![0.0; d],
            variances.to_vec(),
            Matrix::identity(d, d),
            Arc::new(Matrix::from_element(2, d, 0.5)),
        )
        .unwrap()
    }

    #[test]
    fn separated_clusters_do_not_overlap() {
        let x = Matrix::from_row_slice(6, 1, &[0.0, 0.1, 0.2, 50.0, 50.1, 50.2]);
        assert_eq!(overlap(&x, &[0, 0, 0, 1, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn alternating_labels_fully_overlap() {
        // Unequal gaps keep every nearest neighbour unique.
        let xs: Vec<f64> = (0..8).map(|i| i as f64 + 0.01 * (i * i) as f64).collect();
        let x = Matrix::from_row_slice(8, 1, &xs);
        let labels: Vec<usize> = (0..8).map(|i| i % 2).collect();
        assert_eq!(overlap(&x, &labels).unwrap(), 1.0);
        let renamed: Vec<usize> = labels.iter().map(|l| 1 - l).collect();
        assert_eq!(overlap(&x, &renamed).unwrap(), 1.0);
    }

    #[test]
    fn eccentricity_cases() {
        let round = Individual::new(vec![gene(&[1.0, 1.0]), gene(&[2.0, 2.0])]).unwrap();
        assert_eq!(eccentricity_constraint(&round), 1.0);
        let mixed = Individual::new(vec![gene(&[4.0, 1.0]), gene(&[50.0, 1.0])]).unwrap();
        assert_eq!(eccentricity_constraint(&mixed), 4.0);
        let single = Individual::new(vec![gene(&[9.0, 1.0])]).unwrap();
        assert_eq!(eccentricity_constraint(&single), 9.0);
    }

    #[test]
    fn penalty_cases() {
        let cs = ConstraintSet {
            overlap_upper: Some(0.1),
            eccen_lower: Some(50.0),
        };
        assert_eq!(cs.penalty_from(0.05, 60.0), 0.0);
        assert!((cs.penalty_from(0.3, 60.0) - 0.04).abs() < 1e-15);
        assert!((cs.penalty_from(0.0, 10.0) - 1600.0).abs() < 1e-12);
        assert_eq!(ConstraintSet::default().penalty_from(1.0, 1.0), 0.0);
        assert!(ConstraintSet {
            overlap_upper: Some(1.5),
            eccen_lower: None
        }
        .validate()
        .is_err());
        assert!(ConstraintSet {
            overlap_upper: None,
            eccen_lower: Some(0.5)
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn overlap_matches_brute_force(seed in any::<u64>(), n in 2usize..200, k in 1usize..6) {
            let mut rng = Rng::new(seed);
            let data: Vec<f64> = (0..n * 2).map(|_| rng.normal()).collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
            let x = Matrix::from_row_slice(n, 2, &data);
            prop_assert_eq!(overlap(&x, &labels).unwrap(), brute_overlap(&x, &labels));
        }

        #[test]
        fn penalty_is_zero_exactly_when_feasible(o in 0.0f64..1.0, e in 1.0f64..100.0, ou in 0.0f64..1.0, el in 1.0f64..100.0) {
            let cs = ConstraintSet { overlap_upper: Some(ou), eccen_lower: Some(el) };
            let p = cs.penalty_from(o, e);
            prop_assert!(p >= 0.0);
            prop_assert_eq!(p == 0.0, o <= ou && e >= el);
        }
    }
}
