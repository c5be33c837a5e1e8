//! `operator-study`: convergence traces of every mean operator under four
//! start/target scenarios.
//!
//! Clusters start either together (the default mean bound) or apart (ten
//! times that bound), and aim at a low or a high silhouette target. Runs with
//! the same seed share their initial population across operators.

use std::path::PathBuf;

use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;

use evoclust::engine::GenerationRecord;
use evoclust::genetics::MeanOperator;
use evoclust::RunConfig;

use crate::error::CliResult;
use crate::io::{fmt_f64, write_file};
use crate::manifest::{ManifestWriter, RunTiming};

pub const TRACE_HEADER: [&str; 7] = ["operator", "scenario", "dim", "seed", "generation", "s_all", "overlap"];
pub const SUMMARY_HEADER: [&str; 7] = [
    "operator",
    "scenario",
    "dim",
    "runs",
    "mean_initial_s_all",
    "mean_final_s_all",
    "mean_final_overlap",
];
pub const TRACES_FILE: &str = "traces.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Mean-bound multiplier for the apart scenarios.
pub const APART_SCALE: f64 = 10.0;
/// Apart starts must begin above this mean silhouette to count as apart.
pub const APART_MIN_INITIAL_S_ALL: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub s_t: f64,
    pub mean_scale: f64,
}

pub const SCENARIOS: [Scenario; 4] = [
    Scenario {
        name: "together_low",
        s_t: 0.2,
        mean_scale: 1.0,
    },
    Scenario {
        name: "apart_low",
        s_t: 0.2,
        mean_scale: APART_SCALE,
    },
    Scenario {
        name: "together_high",
        s_t: 0.9,
        mean_scale: 1.0,
    },
    Scenario {
        name: "apart_high",
        s_t: 0.9,
        mean_scale: APART_SCALE,
    },
];

#[derive(Debug, Clone)]
pub struct OperatorStudyOptions {
    pub out: PathBuf,
    pub runs: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub dims: Vec<usize>,
    pub generations: usize,
    pub operators: Vec<MeanOperator>,
    pub scenarios: Vec<Scenario>,
}

impl OperatorStudyOptions {
    /// Full study: 4 scenarios × D ∈ {2, 50} × 5 operators × `runs` seeds.
    pub fn new(out: PathBuf) -> Self {
        Self {
            out,
            runs: 30,
            seed: 0,
            n: 500,
            k: 5,
            dims: vec![2, 50],
            generations: RunConfig::DEFAULT_GENERATIONS,
            operators: MeanOperator::ALL.to_vec(),
            scenarios: SCENARIOS.to_vec(),
        }
    }

    /// Index-mode defaults, no tolerance for overlap, no eccentricity
    /// requirement.
    pub fn run_config(&self, scenario: &Scenario, dim: usize, operator: MeanOperator, seed: u64) -> RunConfig {
        let mut c = RunConfig::index(self.n, self.k, dim, scenario.s_t);
        c.init.beta_mean *= scenario.mean_scale;
        c.mutation.mean_operator = operator;
        c.constraints.overlap_upper = Some(0.0);
        c.generations = self.generations;
        c.seed = seed;
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRun {
    pub operator: MeanOperator,
    pub scenario: &'static str,
    pub dim: usize,
    pub seed: u64,
    pub history: Vec<GenerationRecord>,
    pub seconds: f64,
}

impl StudyRun {
    pub fn initial_s_all(&self) -> f64 {
        self.history[0].best_s_all
    }

    pub fn final_s_all(&self) -> f64 {
        self.history
            .last()
            .expect("history holds the initial generation")
            .best_s_all
    }

    pub fn final_overlap(&self) -> f64 {
        self.history
            .last()
            .expect("history holds the initial generation")
            .best_overlap
    }
}

#[derive(Debug, Clone)]
pub struct OperatorStudyReport {
    pub runs: Vec<StudyRun>,
    /// `(dim, mean initial s_all over apart runs, passes)`.
    pub apart_checks: Vec<(usize, f64, bool)>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn operator_study(opts: &OperatorStudyOptions) -> CliResult<OperatorStudyReport> {
    let mut plan = Vec::new();
    for scenario in &opts.scenarios {
        for &dim in &opts.dims {
            for &operator in &opts.operators {
                for r in 0..opts.runs {
                    let seed = opts.seed.wrapping_add(r as u64);
                    plan.push((*scenario, dim, operator, seed));
                }
            }
        }
    }
    // Catch configuration problems before writing anything.
    for (scenario, dim, operator, seed) in &plan {
        opts.run_config(scenario, *dim, *operator, *seed).validate()?;
    }
    let snapshot = json!({
        "runs": opts.runs, "seed": opts.seed, "n": opts.n, "k": opts.k, "dims": opts.dims,
        "generations": opts.generations,
        "operators": opts.operators.iter().map(|o| o.name()).collect::<Vec<_>>(),
        "scenarios": opts.scenarios.iter().map(|s| json!({"name": s.name, "s_t": s.s_t, "mean_scale": s.mean_scale})).collect::<Vec<_>>(),
        "constraints": {"overlap_upper": 0.0},
    });
    let seeds: Vec<u64> = (0..opts.runs as u64).map(|r| opts.seed.wrapping_add(r)).collect();
    let outputs = vec![TRACES_FILE.to_string(), SUMMARY_FILE.to_string()];
    let mut writer = ManifestWriter::begin(&opts.out, "operator-study", snapshot, seeds, outputs)?;
    info!("operator-study: {} runs", plan.len());

    let computed: CliResult<Vec<StudyRun>> = plan
        .par_iter()
        .map(|(scenario, dim, operator, seed)| {
            let clock = std::time::Instant::now();
            let result = evoclust::run(&opts.run_config(scenario, *dim, *operator, *seed))?;
            Ok(StudyRun {
                operator: *operator,
                scenario: scenario.name,
                dim: *dim,
                seed: *seed,
                history: result.history,
                seconds: clock.elapsed().as_secs_f64(),
            })
        })
        .collect();
    let runs = match computed.and_then(|runs| write_tables(opts, &runs).map(|()| runs)) {
        Ok(r) => r,
        Err(e) => return Err(writer.fail(e)),
    };

    let mut apart_checks = Vec::new();
    for &dim in &opts.dims {
        let apart = runs.iter().filter(|r| r.dim == dim && r.scenario.starts_with("apart"));
        let m = mean(apart.map(StudyRun::initial_s_all));
        if m.is_nan() {
            continue;
        }
        let ok = m > APART_MIN_INITIAL_S_ALL;
        if !ok {
            warn!("apart scenarios in {dim}D start at mean s_all {m:.3}, not above {APART_MIN_INITIAL_S_ALL}");
        }
        apart_checks.push((dim, m, ok));
    }
    writer.manifest.runs = runs
        .iter()
        .map(|r| RunTiming {
            seed: r.seed,
            seconds: r.seconds,
        })
        .collect();
    writer.manifest.details = json!({
        "apart_check": apart_checks.iter().map(|(d, m, ok)| json!({"dim": d, "mean_initial_s_all": m, "passes": ok})).collect::<Vec<_>>(),
    });
    writer.finish()?;
    Ok(OperatorStudyReport { runs, apart_checks })
}

fn write_tables(opts: &OperatorStudyOptions, runs: &[StudyRun]) -> CliResult<()> {
    write_file(&opts.out.join(TRACES_FILE), |w| {
        w.write_record(TRACE_HEADER)?;
        for r in runs {
            for g in &r.history {
                w.write_record([
                    r.operator.name(),
                    r.scenario,
                    &r.dim.to_string(),
                    &r.seed.to_string(),
                    &g.generation.to_string(),
                    &fmt_f64(g.best_s_all),
                    &fmt_f64(g.best_overlap),
                ])?;
            }
        }
        Ok(())
    })?;
    write_file(&opts.out.join(SUMMARY_FILE), |w| {
        w.write_record(SUMMARY_HEADER)?;
        for scenario in &opts.scenarios {
            for &dim in &opts.dims {
                for &operator in &opts.operators {
                    let group: Vec<&StudyRun> = runs
                        .iter()
                        .filter(|r| r.scenario == scenario.name && r.dim == dim && r.operator == operator)
                        .collect();
                    w.write_record([
                        operator.name(),
                        scenario.name,
                        &dim.to_string(),
                        &group.len().to_string(),
                        &fmt_f64(mean(group.iter().map(|r| r.initial_s_all()))),
                        &fmt_f64(mean(group.iter().map(|r| r.final_s_all()))),
                        &fmt_f64(mean(group.iter().map(|r| r.final_overlap()))),
                    ])?;
                }
            }
        }
        Ok(())
    })
}
