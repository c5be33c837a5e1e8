//! Stochastic ranking, tournament parent selection and (μ+λ) survival.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Individual;
use crate::numerics::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// Strictly better; ties are never better.
    #[inline]
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Minimize => a < b,
            Direction::Maximize => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedPopulation {
    /// Indices into the ranked population, best first.
    pub ordering: Vec<usize>,
    pub p_f: f64,
}

impl RankedPopulation {
    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    /// `positions()[i]` is the rank (0 = best) of individual `i`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.ordering.len()];
        for (r, &i) in self.ordering.iter().enumerate() {
            pos[i] = r;
        }
        pos
    }

    pub fn best(&self) -> Option<usize> {
        self.ordering.first().copied()
    }
}

/// Bubble-sort stochastic ranking on raw values. For each adjacent pair a
/// uniform number is drawn; the pair is compared on fitness when both are
/// feasible or the draw falls below `p_f`, and on penalty otherwise. At most
/// `n` sweeps, stopping after a sweep without swaps.
pub fn stochastic_rank_values(
    fitness: &[f64],
    penalty: &[f64],
    p_f: f64,
    rng: &mut Rng,
    direction: Direction,
) -> RankedPopulation {
    let n = fitness.len();
    debug_assert_eq!(n, penalty.len());
    let mut ordering: Vec<usize> = (0..n).collect();
    for _ in 0..n {
        let mut swapped = false;
        for j in 0..n.saturating_sub(1) {
            let (a, b) = (ordering[j], ordering[j + 1]);
            let u = rng.uniform();
            let both_feasible = penalty[a] == 0.0 && penalty[b] == 0.0;
            let swap = if both_feasible || u < p_f {
                direction.better(fitness[b], fitness[a])
            } else {
                penalty[b] < penalty[a]
            };
            if swap {
                ordering.swap(j, j + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    RankedPopulation { ordering, p_f }
}

fn cached(pop: &[Individual]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut fitness = Vec::with_capacity(pop.len());
    let mut penalty = Vec::with_capacity(pop.len());
    for (i, ind) in pop.iter().enumerate() {
        let e = ind.evaluation().ok_or(Error::StaleIndividual(i))?;
        fitness.push(e.fitness);
        penalty.push(e.penalty);
    }
    Ok((fitness, penalty))
}

pub fn stochastic_rank(pop: &[Individual], p_f: f64, rng: &mut Rng, direction: Direction) -> Result<RankedPopulation> {
    let (fitness, penalty) = cached(pop)?;
    Ok(stochastic_rank_values(&fitness, &penalty, p_f, rng, direction))
}

/// Two distinct individuals drawn uniformly; the better-ranked one wins.
pub fn binary_tournament(ranked: &RankedPopulation, rng: &mut Rng) -> usize {
    let n = ranked.len();
    if n <= 1 {
        return 0;
    }
    let positions = ranked.positions();
    let a = rng.below(n);
    let mut b = rng.below(n - 1);
    if b >= a {
        b += 1;
    }
    if positions[a] < positions[b] {
        a
    } else {
        b
    }
}

/// Ranks the pool and keeps the first `mu`, in rank order.
pub fn environmental_select(
    pool: Vec<Individual>,
    p_f: f64,
    mu: usize,
    rng: &mut Rng,
    direction: Direction,
) -> Result<Vec<Individual>> {
    if pool.len() < mu {
        return Err(Error::Config(format!(
            "selection pool of {} cannot supply {mu} survivors",
            pool.len()
        )));
    }
    let ranked = stochastic_rank(&pool, p_f, rng, direction)?;
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    Ok(ranked
        .ordering
        .iter()
        .take(mu)
        .map(|&i| slots[i].take().expect("ordering is a permutation"))
        .collect())
}
