//! `generate` and `versus`: evolve one dataset per job and write it out.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use evoclust::engine::{GenerationRecord, Mode, Objective};
use evoclust::model::Evaluation;

use crate::config::{jobs, ConfigFile, Job};
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, fmt_opt, write_dataset, write_file};
use crate::manifest::{ManifestWriter, RunManifest, RunTiming};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
}

/// What one finished job left behind.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub job_index: usize,
    pub combination: usize,
    pub seed: u64,
    pub objective: Objective,
    pub best: Evaluation,
    pub dataset: String,
    pub history: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub outcomes: Vec<RunOutcome>,
}

pub const HISTORY_HEADER: [&str; 7] = [
    "generation",
    "best_fitness",
    "mean_fitness",
    "best_s_all",
    "best_overlap",
    "best_eccentricity",
    "best_penalty",
];

pub const RESULTS_HEADER: [&str; 5] = ["run", "seed", "ari_winner", "ari_loser", "diff"];

pub const RESULTS_FILE: &str = "results.csv";
pub const GRID_FILE: &str = "grid_summary.csv";

pub fn dataset_name(seed: u64) -> String {
    format!("dataset_{seed}.csv")
}

pub fn history_name(seed: u64) -> String {
    format!("history_{seed}.csv")
}

pub fn write_history(path: &Path, history: &[GenerationRecord]) -> CliResult<()> {
    write_file(path, |w| {
        w.write_record(HISTORY_HEADER)?;
        for r in history {
            w.write_record([
                r.generation.to_string(),
                fmt_f64(r.best_fitness),
                fmt_f64(r.mean_fitness),
                fmt_f64(r.best_s_all),
                fmt_f64(r.best_overlap),
                fmt_f64(r.best_eccentricity),
                fmt_f64(r.best_penalty),
            ])?;
        }
        Ok(())
    })
}

fn run_job(index: usize, job: &Job, out: &Path) -> CliResult<RunOutcome> {
    let clock = Instant::now();
    let result = evoclust::run(&job.config)?;
    let seed = job.config.seed;
    let dataset = dataset_name(seed);
    let history = history_name(seed);
    write_dataset(&out.join(&dataset), result.best.points(), result.best.labels())?;
    write_history(&out.join(&history), &result.history)?;
    let best = result
        .best
        .evaluation()
        .cloned()
        .ok_or_else(|| CliError::runtime(format!("run with seed {seed} returned an unevaluated dataset")))?;
    info!(
        "seed {seed}: best fitness {:.6} in {:.1}s",
        best.fitness,
        clock.elapsed().as_secs_f64()
    );
    Ok(RunOutcome {
        job_index: index,
        combination: job.combination,
        seed,
        objective: job.config.objective,
        best,
        dataset,
        history,
        seconds: clock.elapsed().as_secs_f64(),
    })
}

fn grid_details(file: &ConfigFile, jobs: &[Job]) -> Value {
    let combos: Vec<Value> = file
        .combinations
        .iter()
        .map(|c| {
            let overrides: Map<String, Value> = c.overrides.iter().cloned().collect();
            json!({"index": c.index, "overrides": overrides})
        })
        .collect();
    let runs: Vec<Value> = jobs
        .iter()
        .map(|j| {
            json!({
                "seed": j.config.seed,
                "combination": j.combination,
                "run": j.run,
                "dataset": dataset_name(j.config.seed),
                "history": history_name(j.config.seed),
            })
        })
        .collect();
    json!({"combinations": combos, "runs": runs})
}

/// Shared driver: validate, plan, write the manifest, run every job in the
/// pool, then let `finish` add command-specific outputs before the final
/// existence check.
fn execute(
    opts: &RunOptions,
    command: &str,
    check: impl FnOnce(&ConfigFile) -> CliResult<()>,
    extra_outputs: &[&str],
    finish: impl FnOnce(&Path, &[RunOutcome]) -> CliResult<()>,
) -> CliResult<RunReport> {
    let file = ConfigFile::load(&opts.config)?;
    check(&file)?;
    let plan = jobs(&file, opts.runs, opts.seed)?;
    let mut outputs: Vec<String> = plan
        .iter()
        .flat_map(|j| [dataset_name(j.config.seed), history_name(j.config.seed)])
        .collect();
    outputs.extend(extra_outputs.iter().map(|s| s.to_string()));
    let seeds = plan.iter().map(|j| j.config.seed).collect();
    let mut writer = ManifestWriter::begin(&opts.out, command, file.snapshot.clone(), seeds, outputs)?;
    writer.manifest.details = grid_details(&file, &plan);
    info!(
        "{command}: {} runs over {} combinations",
        plan.len(),
        file.combinations.len()
    );

    let out = opts.out.clone();
    let computed: CliResult<Vec<RunOutcome>> = plan
        .par_iter()
        .enumerate()
        .map(|(i, job)| run_job(i, job, &out))
        .collect();
    let outcomes = match computed.and_then(|o| finish(&out, &o).map(|()| o)) {
        Ok(o) => o,
        Err(e) => return Err(writer.fail(e)),
    };
    writer.manifest.runs = outcomes
        .iter()
        .map(|o| RunTiming {
            seed: o.seed,
            seconds: o.seconds,
        })
        .collect();
    let manifest = writer.finish()?;
    Ok(RunReport { manifest, outcomes })
}

pub fn generate(opts: &RunOptions) -> CliResult<RunReport> {
    execute(opts, "generate", |_| Ok(()), &[], |_, _| Ok(()))
}

pub fn versus(opts: &RunOptions) -> CliResult<RunReport> {
    let check = |file: &ConfigFile| match file.combinations.iter().find(|c| c.config.mode() != Mode::Versus) {
        Some(c) => Err(CliError::input(format!(
            "versus needs objective.winner and objective.loser (combination {} is in index mode)",
            c.index
        ))),
        None => Ok(()),
    };
    execute(opts, "versus", check, &[RESULTS_FILE, GRID_FILE], write_versus_tables)
}

fn write_versus_tables(out: &Path, outcomes: &[RunOutcome]) -> CliResult<()> {
    let cells = |o: &RunOutcome| {
        let (w, l) = (o.best.ari_winner, o.best.ari_loser);
        let diff = w.zip(l).map(|(w, l)| w - l);
        [
            o.job_index.to_string(),
            o.seed.to_string(),
            fmt_opt(w),
            fmt_opt(l),
            fmt_opt(diff),
        ]
    };
    write_file(&out.join(RESULTS_FILE), |w| {
        w.write_record(RESULTS_HEADER)?;
        for o in outcomes {
            w.write_record(cells(o))?;
        }
        Ok(())
    })?;
    write_file(&out.join(GRID_FILE), |w| {
        w.write_record(["winner", "loser"].iter().chain(RESULTS_HEADER.iter()))?;
        for o in outcomes {
            let Objective::Versus(v) = o.objective else {
                continue;
            };
            let row = cells(o);
            w.write_record(
                [v.winner.name(), v.loser.name()]
                    .into_iter()
                    .chain(row.iter().map(String::as_str)),
            )?;
        }
        Ok(())
    })
}
