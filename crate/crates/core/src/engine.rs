//! The generational loop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clusterers::ClustererKind;
use crate::constraints::{eccentricity_constraint, overlap_from_scan, ConstraintSet};
use crate::error::{Error, Result};
use crate::genetics::{
    crossover_uniform, init_population, mutate, InitParams, MeanOperator, MutationContext, MutationParams,
};
use crate::model::{Evaluation, Individual};
use crate::numerics::distance::cluster_scan;
use crate::numerics::Rng;
use crate::objectives::{silhouette_from_scan, silhouette_overall, versus_fitness, IndexObjective, VersusObjective};
use crate::selection::{binary_tournament, environmental_select, stochastic_rank, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Index,
    Versus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Objective {
    Index(IndexObjective),
    Versus(VersusObjective),
}

impl Objective {
    pub fn mode(&self) -> Mode {
        match self {
            Objective::Index(_) => Mode::Index,
            Objective::Versus(_) => Mode::Versus,
        }
    }
}

/// How the returned dataset is chosen from the final population.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BestSelection {
    /// Best objective value, ignoring constraints.
    #[default]
    Fitness,
    /// First individual of the final stochastic ranking.
    Rank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub init: InitParams,
    pub mutation: MutationParams,
    pub crossover_prob: f64,
    pub generations: usize,
    pub pop_size: usize,
    pub p_f: f64,
    pub objective: Objective,
    pub constraints: ConstraintSet,
    pub seed: u64,
    pub num_runs: usize,
    #[serde(default)]
    pub best_selection: BestSelection,
}

impl RunConfig {
    pub const DEFAULT_GENERATIONS: usize = 100;
    pub const DEFAULT_POP_SIZE: usize = 10;
    pub const DEFAULT_CROSSOVER_PROB: f64 = 0.7;
    pub const DEFAULT_P_F_INDEX: f64 = 0.5;
    pub const DEFAULT_P_F_VERSUS: f64 = 0.75;

    fn with_objective(n: usize, k: usize, d: usize, objective: Objective, p_f: f64) -> Self {
        Self {
            init: InitParams::new(n, k, d),
            mutation: MutationParams::new(k),
            crossover_prob: Self::DEFAULT_CROSSOVER_PROB,
            generations: Self::DEFAULT_GENERATIONS,
            pop_size: Self::DEFAULT_POP_SIZE,
            p_f,
            objective,
            constraints: ConstraintSet::default(),
            seed: 0,
            num_runs: 1,
            best_selection: BestSelection::Fitness,
        }
    }

    /// Index-mode defaults with no active constraints.
    pub fn index(n: usize, k: usize, d: usize, s_t: f64) -> Self {
        Self::with_objective(
            n,
            k,
            d,
            Objective::Index(IndexObjective { s_t }),
            Self::DEFAULT_P_F_INDEX,
        )
    }

    /// Versus-mode defaults with no active constraints.
    pub fn versus(n: usize, k: usize, d: usize, winner: ClustererKind, loser: ClustererKind) -> Self {
        Self::with_objective(
            n,
            k,
            d,
            Objective::Versus(VersusObjective { winner, loser }),
            Self::DEFAULT_P_F_VERSUS,
        )
    }

    pub fn mode(&self) -> Mode {
        self.objective.mode()
    }

    pub fn direction(&self) -> Direction {
        match self.mode() {
            Mode::Index => Direction::Minimize,
            Mode::Versus => Direction::Maximize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.init.validate()?;
        self.mutation.validate()?;
        self.constraints.validate()?;
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(Error::Config("crossover_prob must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.p_f) {
            return Err(Error::Config("p_f must lie in [0, 1]".into()));
        }
        if self.pop_size < 2 {
            return Err(Error::Config("pop_size must be at least 2".into()));
        }
        if self.num_runs == 0 {
            return Err(Error::Config("num_runs must be at least 1".into()));
        }
        match &self.objective {
            Objective::Index(obj) => obj.validate()?,
            Objective::Versus(_) => {
                if self.mutation.mean_operator == MeanOperator::PsoInformed {
                    return Err(Error::Config(
                        "pso_informed needs a silhouette target and is only available in index mode".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Summary of the rank-best individual after one generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_s_all: f64,
    pub best_overlap: f64,
    pub best_eccentricity: f64,
    pub best_penalty: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: Individual,
    /// One record per generation, the initial population first.
    pub history: Vec<GenerationRecord>,
    pub seed: u64,
    pub evaluations: usize,
}

/// Scores `ind` under `config` and caches the result on it.
pub fn evaluate(ind: &mut Individual, config: &RunConfig, rng: &mut Rng) -> Result<()> {
    let scan = cluster_scan(ind.points(), ind.labels(), ind.num_clusters());
    let silhouettes = silhouette_from_scan(&scan, ind.labels())?;
    let silhouette = silhouettes.iter().sum::<f64>() / silhouettes.len() as f64;
    let overlap = overlap_from_scan(&scan, ind.labels());
    let eccentricity = eccentricity_constraint(ind);
    let penalty = config.constraints.penalty_from(overlap, eccentricity);
    let (fitness, ari_winner, ari_loser) = match &config.objective {
        Objective::Index(obj) => (obj.score(silhouette), None, None),
        Objective::Versus(obj) => {
            let score = versus_fitness(ind, obj, rng)?;
            (score.fitness(), Some(score.ari_winner), Some(score.ari_loser))
        }
    };
    ind.set_evaluation(Evaluation {
        fitness,
        penalty,
        silhouette,
        overlap,
        eccentricity,
        ari_winner,
        ari_loser,
    });
    Ok(())
}

/// Evaluates every stale individual, each with its own child stream so that
/// serial and parallel execution agree.
fn evaluate_all(pop: &mut [Individual], config: &RunConfig, rng: &mut Rng) -> Result<()> {
    let streams = rng.fork(pop.len());
    pop.par_iter_mut().zip(streams).try_for_each(|(ind, mut stream)| {
        if ind.is_stale() {
            evaluate(ind, config, &mut stream)
        } else {
            Ok(())
        }
    })
}

fn mutation_context(child: &Individual, config: &RunConfig) -> Result<MutationContext> {
    let mut ctx = MutationContext {
        s_all: None,
        s_t: None,
        variance_floor: config.init.variance_floor(),
    };
    if config.mutation.mean_operator == MeanOperator::PsoInformed {
        if let Objective::Index(obj) = &config.objective {
            ctx.s_t = Some(obj.s_t);
            ctx.s_all = Some(match child.evaluation() {
                Some(e) => e.silhouette,
                None => silhouette_overall(child.points(), child.labels())?,
            });
        }
    }
    Ok(ctx)
}

/// Breeds `pop_size` offspring from `pop`: tournament parents taken in pairs,
/// crossed with probability `crossover_prob` (cloned otherwise), then
/// mutated.
fn offspring(pop: &[Individual], config: &RunConfig, rng: &mut Rng) -> Result<Vec<Individual>> {
    let ranked = stochastic_rank(pop, config.p_f, rng, config.direction())?;
    let mut out = Vec::with_capacity(config.pop_size);
    while out.len() < config.pop_size {
        let a = binary_tournament(&ranked, rng);
        let b = binary_tournament(&ranked, rng);
        let (c1, c2) = if rng.uniform() < config.crossover_prob {
            crossover_uniform(&pop[a], &pop[b], rng)?
        } else {
            (pop[a].clone(), pop[b].clone())
        };
        for child in [c1, c2] {
            if out.len() == config.pop_size {
                break;
            }
            let ctx = mutation_context(&child, config)?;
            out.push(mutate(&child, &config.mutation, &ctx, rng)?);
        }
    }
    Ok(out)
}

/// One generation. `pop` must be evaluated; the survivors come back in rank
/// order.
pub fn step(pop: Vec<Individual>, config: &RunConfig, rng: &mut Rng) -> Result<Vec<Individual>> {
    let mut children = offspring(&pop, config, rng)?;
    evaluate_all(&mut children, config, rng)?;
    let mut pool = pop;
    pool.extend(children);
    environmental_select(pool, config.p_f, config.pop_size, rng, config.direction())
}

fn record(generation: usize, ranked_pop: &[Individual]) -> GenerationRecord {
    let best = ranked_pop[0].evaluation().expect("population is evaluated");
    let mean_fitness = ranked_pop
        .iter()
        .map(|i| i.fitness().expect("population is evaluated"))
        .sum::<f64>()
        / ranked_pop.len() as f64;
    GenerationRecord {
        generation,
        best_fitness: best.fitness,
        mean_fitness,
        best_s_all: best.silhouette,
        best_overlap: best.overlap,
        best_eccentricity: best.eccentricity,
        best_penalty: best.penalty,
    }
}

fn choose_best(ranked_pop: &[Individual], config: &RunConfig) -> usize {
    match config.best_selection {
        BestSelection::Rank => 0,
        BestSelection::Fitness => {
            let dir = config.direction();
            let mut best = 0;
            for i in 1..ranked_pop.len() {
                let (fi, fb) = (
                    ranked_pop[i].fitness().unwrap_or(f64::NAN),
                    ranked_pop[best].fitness().unwrap_or(f64::NAN),
                );
                if dir.better(fi, fb) {
                    best = i;
                }
            }
            best
        }
    }
}

/// A full run with `config.seed`. Per-generation hooks receive the ranked
/// population.
pub fn run_with(config: &RunConfig, mut on_generation: impl FnMut(usize, &[Individual])) -> Result<RunResult> {
    config.validate()?;
    let mut rng = Rng::new(config.seed);
    let mut pop = init_population(&config.init, config.pop_size, &mut rng)?;
    evaluate_all(&mut pop, config, &mut rng)?;
    let mut evaluations = pop.len();
    let ranked = stochastic_rank(&pop, config.p_f, &mut rng, config.direction())?;
    let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
    pop = ranked
        .ordering
        .iter()
        .map(|&i| slots[i].take().expect("permutation"))
        .collect();
    let mut history = Vec::with_capacity(config.generations + 1);
    history.push(record(0, &pop));
    on_generation(0, &pop);
    for g in 1..=config.generations {
        pop = step(pop, config, &mut rng)?;
        evaluations += config.pop_size;
        history.push(record(g, &pop));
        on_generation(g, &pop);
    }
    let best = pop.swap_remove(choose_best(&pop, config));
    Ok(RunResult {
        best,
        history,
        seed: config.seed,
        evaluations,
    })
}

pub fn run(config: &RunConfig) -> Result<RunResult> {
    run_with(config, |_, _| {})
}
