//! JSON run configuration.
//!
//! Field names mirror [`RunConfig`] one-to-one; everything except the shape
//! (`init.n`, `init.k`, `init.d`) and the objective is optional and falls
//! back to the library defaults, which may depend on other fields (the
//! mutation rates on `k`, the mean bound on the variance bound). A `sweep`
//! list turns one file into a Cartesian grid of configurations.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use evoclust::clusterers::ClustererKind;
use evoclust::constraints::ConstraintSet;
use evoclust::engine::{BestSelection, Mode, Objective};
use evoclust::genetics::{InitParams, MeanOperator, MutationParams};
use evoclust::objectives::{IndexObjective, VersusObjective};
use evoclust::RunConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitSection {
    n: usize,
    k: usize,
    d: usize,
    beta_mean: Option<f64>,
    beta_var: Option<f64>,
    equal_sizes: Option<bool>,
    min_cluster_size: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MutationSection {
    mean_operator: Option<MeanOperator>,
    gaussian_width: Option<f64>,
    de_factor: Option<f64>,
    rotation_power: Option<f64>,
    prob_mean: Option<f64>,
    prob_cov: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveSection {
    s_t: Option<f64>,
    winner: Option<ClustererKind>,
    loser: Option<ClustererKind>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<Mode>,
    init: InitSection,
    #[serde(default)]
    mutation: MutationSection,
    crossover_prob: Option<f64>,
    generations: Option<usize>,
    pop_size: Option<usize>,
    p_f: Option<f64>,
    objective: ObjectiveSection,
    #[serde(default)]
    constraints: ConstraintSet,
    seed: Option<u64>,
    num_runs: Option<usize>,
    best_selection: Option<BestSelection>,
}

/// One grid axis: a single dotted field path, or several paths varied in
/// lockstep (each value is then an array with one entry per path).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepAxis {
    Single {
        path: String,
        values: Vec<Value>,
    },
    Zipped {
        paths: Vec<String>,
        values: Vec<Vec<Value>>,
    },
}

impl SweepAxis {
    fn len(&self) -> usize {
        match self {
            SweepAxis::Single { values, .. } => values.len(),
            SweepAxis::Zipped { values, .. } => values.len(),
        }
    }

    /// `(path, value)` assignments for entry `i`.
    fn assignments(&self, i: usize) -> Vec<(String, Value)> {
        match self {
            SweepAxis::Single { path, values } => vec![(path.clone(), values[i].clone())],
            SweepAxis::Zipped { paths, values } => paths.iter().cloned().zip(values[i].iter().cloned()).collect(),
        }
    }

    fn validate(&self, axis: usize) -> CliResult<()> {
        if self.len() == 0 {
            return Err(CliError::input(format!("sweep[{axis}]: values must not be empty")));
        }
        if let SweepAxis::Zipped { paths, values } = self {
            if let Some(i) = values.iter().position(|v| v.len() != paths.len()) {
                return Err(CliError::input(format!(
                    "sweep[{axis}].values[{i}]: expected {} entries, one per path",
                    paths.len()
                )));
            }
        }
        Ok(())
    }
}

/// One resolved point of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub index: usize,
    /// Field assignments that distinguish this combination, in axis order.
    pub overrides: Vec<(String, Value)>,
    pub config: RunConfig,
}

/// A parsed configuration file: its JSON snapshot and the grid it expands to.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub snapshot: Value,
    pub combinations: Vec<Combination>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let snapshot: Value = serde_json::from_str(text).map_err(|e| CliError::input(format!("invalid JSON: {e}")))?;
        let mut base = snapshot.clone();
        let root = base
            .as_object_mut()
            .ok_or_else(|| CliError::input("configuration must be a JSON object"))?;
        let sweep: Vec<SweepAxis> = match root.remove("sweep") {
            None => Vec::new(),
            Some(v) => serde_path_to_error::deserialize(v)
                .map_err(|e| CliError::input(format!("sweep.{}: {}", e.path(), e.inner())))?,
        };
        for (i, axis) in sweep.iter().enumerate() {
            axis.validate(i)?;
        }
        let combinations = expand(&base, &sweep)?;
        Ok(Self { snapshot, combinations })
    }
}

/// Every grid point, the last axis varying fastest.
fn expand(base: &Value, sweep: &[SweepAxis]) -> CliResult<Vec<Combination>> {
    let total: usize = sweep.iter().map(SweepAxis::len).product();
    let mut out = Vec::with_capacity(total);
    for index in 0..total {
        let mut rem = index;
        let mut picks = vec![0; sweep.len()];
        for (a, axis) in sweep.iter().enumerate().rev() {
            picks[a] = rem % axis.len();
            rem /= axis.len();
        }
        let mut value = base.clone();
        let mut overrides = Vec::new();
        for (axis, &pick) in sweep.iter().zip(&picks) {
            for (path, v) in axis.assignments(pick) {
                set_path(&mut value, &path, v.clone())?;
                overrides.push((path, v));
            }
        }
        let config = resolve(value).map_err(|e| match e {
            CliError::Input(msg) if !overrides.is_empty() => {
                CliError::Input(format!("sweep combination {index}: {msg}"))
            }
            other => other,
        })?;
        out.push(Combination {
            index,
            overrides,
            config,
        });
    }
    Ok(out)
}

fn set_path(root: &mut Value, path: &str, v: Value) -> CliResult<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::input(format!("sweep path '{path}' is malformed")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::input(format!("sweep path '{path}' crosses a non-object field")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::input(format!("sweep path '{path}' crosses a non-object field")))?
        .insert(parts[parts.len() - 1].to_string(), v);
    Ok(())
}

/// Fills defaults and validates one grid point.
pub fn resolve(value: Value) -> CliResult<RunConfig> {
    let file: FileConfig =
        serde_path_to_error::deserialize(value).map_err(|e| CliError::input(format!("{}: {}", e.path(), e.inner())))?;

    let objective = match (&file.objective, file.mode) {
        (
            ObjectiveSection {
                s_t: Some(s_t),
                winner: None,
                loser: None,
            },
            None | Some(Mode::Index),
        ) => Objective::Index(IndexObjective { s_t: *s_t }),
        (
            ObjectiveSection {
                s_t: None,
                winner: Some(w),
                loser: Some(l),
            },
            None | Some(Mode::Versus),
        ) => Objective::Versus(VersusObjective { winner: *w, loser: *l }),
        _ => {
            return Err(CliError::input(
                "objective: give either s_t (index mode) or both winner and loser (versus mode), matching mode",
            ))
        }
    };

    let i = &file.init;
    let mut init = InitParams::new(i.n, i.k, i.d);
    if let Some(v) = i.beta_var {
        init.beta_var = v;
        init.beta_mean = InitParams::default_beta_mean(v);
    }
    if let Some(v) = i.beta_mean {
        init.beta_mean = v;
    }
    if let Some(v) = i.equal_sizes {
        init.equal_sizes = v;
    }
    if let Some(v) = i.min_cluster_size {
        init.min_cluster_size = v;
    }

    let m = &file.mutation;
    let mut mutation = MutationParams::new(i.k);
    if let Some(v) = m.mean_operator {
        mutation.mean_operator = v;
    }
    if let Some(v) = m.gaussian_width {
        mutation.gaussian_width = v;
    }
    if let Some(v) = m.de_factor {
        mutation.de_factor = v;
    }
    if let Some(v) = m.rotation_power {
        mutation.rotation_power = v;
    }
    if let Some(v) = m.prob_mean {
        mutation.prob_mean = v;
    }
    if let Some(v) = m.prob_cov {
        mutation.prob_cov = v;
    }

    let mut config = match objective {
        Objective::Index(o) => RunConfig::index(i.n, i.k, i.d, o.s_t),
        Objective::Versus(o) => RunConfig::versus(i.n, i.k, i.d, o.winner, o.loser),
    };
    config.init = init;
    config.mutation = mutation;
    config.constraints = file.constraints;
    if let Some(v) = file.crossover_prob {
        config.crossover_prob = v;
    }
    if let Some(v) = file.generations {
        config.generations = v;
    }
    if let Some(v) = file.pop_size {
        config.pop_size = v;
    }
    if let Some(v) = file.p_f {
        config.p_f = v;
    }
    if let Some(v) = file.seed {
        config.seed = v;
    }
    if let Some(v) = file.num_runs {
        config.num_runs = v;
    }
    if let Some(v) = file.best_selection {
        config.best_selection = v;
    }
    config.validate()?;
    Ok(config)
}

/// One run of one combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub combination: usize,
    pub run: usize,
    pub config: RunConfig,
}

/// Lays out `runs` repeats of every combination. Seeds are
/// `seed + job index`, so a single-combination file yields `seed + run`.
/// `runs` and `seed` override the file when given.
pub fn jobs(file: &ConfigFile, runs: Option<usize>, seed: Option<u64>) -> CliResult<Vec<Job>> {
    if runs == Some(0) {
        return Err(CliError::input("--runs must be at least 1"));
    }
    let mut out = Vec::new();
    for combo in &file.combinations {
        let n = runs.unwrap_or(combo.config.num_runs);
        let base = seed.unwrap_or(combo.config.seed);
        for run in 0..n {
            let mut config = combo.config.clone();
            config.seed = base.wrapping_add(out.len() as u64);
            config.num_runs = 1;
            out.push(Job {
                combination: combo.index,
                run,
                config,
            });
        }
    }
    let mut seen = BTreeSet::new();
    if let Some(dup) = out.iter().find(|j| !seen.insert(j.config.seed)) {
        return Err(CliError::input(format!(
            "seed {} would be used by two runs",
            dup.config.seed
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"init": {"n": 100, "k": 4, "d": 3}, "objective": {"s_t": 0.5}}"#;

    #[test]
    fn minimal_index_config_takes_defaults() {
        let file = ConfigFile::parse(MINIMAL).unwrap();
        assert_eq!(file.combinations.len(), 1);
        let c = &file.combinations[0].config;
        assert_eq!(c, &RunConfig::index(100, 4, 3, 0.5));
        assert_eq!(c.mutation.prob_mean, 0.25);
        assert_eq!(c.p_f, RunConfig::DEFAULT_P_F_INDEX);
    }

    #[test]
    fn versus_config_uses_versus_defaults() {
        let text = r#"{"init": {"n": 50, "k": 2, "d": 2}, "objective": {"winner": "gmm", "loser": "single_linkage"}}"#;
        let c = &ConfigFile::parse(text).unwrap().combinations[0].config;
        assert_eq!(c.mode(), Mode::Versus);
        assert_eq!(c.p_f, RunConfig::DEFAULT_P_F_VERSUS);
    }

    #[test]
    fn beta_var_moves_the_default_mean_bound() {
        let text = r#"{"init": {"n": 50, "k": 2, "d": 2, "beta_var": 4.0}, "objective": {"s_t": 0.5}}"#;
        let c = &ConfigFile::parse(text).unwrap().combinations[0].config;
        assert_eq!(c.init.beta_mean, 20.0);
    }

    #[test]
    fn errors_name_the_field() {
        let text = r#"{"init": {"n": 50, "k": "two", "d": 2}, "objective": {"s_t": 0.5}}"#;
        let err = ConfigFile::parse(text).unwrap_err();
        assert!(matches!(&err, CliError::Input(m) if m.contains("init.k")), "{err}");
        let text = r#"{"init": {"n": 50, "k": 2, "d": 2, "colour": 1}, "objective": {"s_t": 0.5}}"#;
        assert!(matches!(ConfigFile::parse(text), Err(CliError::Input(m)) if m.contains("colour")));
        let text = r#"{"init": {"n": 50, "k": 2, "d": 2}, "objective": {"s_t": 0.5}, "p_f": 1.5}"#;
        assert!(matches!(ConfigFile::parse(text), Err(CliError::Input(m)) if m.contains("p_f")));
        let text = r#"{"init": {"n": 50, "k": 2, "d": 2}, "objective": {"s_t": 0.5, "winner": "gmm"}}"#;
        assert!(matches!(ConfigFile::parse(text), Err(CliError::Input(m)) if m.contains("objective")));
    }

    #[test]
    fn sweep_is_cartesian_with_last_axis_fastest() {
        let text = r#"{
            "init": {"n": 50, "k": 2, "d": 2}, "objective": {"s_t": 0.5},
            "sweep": [
                {"path": "objective.s_t", "values": [0.45, 0.9]},
                {"path": "init.d", "values": [2, 50]},
                {"path": "constraints.overlap_upper", "values": [0.0, 0.1]}
            ]
        }"#;
        let file = ConfigFile::parse(text).unwrap();
        assert_eq!(file.combinations.len(), 8);
        let c1 = &file.combinations[1];
        assert_eq!(c1.config.constraints.overlap_upper, Some(0.1));
        assert_eq!(c1.config.init.d, 2);
        let c6 = &file.combinations[6].config;
        assert_eq!((c6.init.d, c6.constraints.overlap_upper), (50, Some(0.0)));
        if let Objective::Index(o) = c6.objective {
            assert_eq!(o.s_t, 0.9);
        }
    }

    #[test]
    fn zipped_axis_moves_fields_together() {
        let text = r#"{
            "init": {"n": 50, "k": 2, "d": 2}, "objective": {"winner": "gmm", "loser": "gmm"},
            "sweep": [{"paths": ["objective.winner", "objective.loser"],
                       "values": [["gmm", "single_linkage"], ["kmeans_pp", "average_linkage"]]}]
        }"#;
        let file = ConfigFile::parse(text).unwrap();
        assert_eq!(file.combinations.len(), 2);
        assert_eq!(
            file.combinations[1].config.objective,
            Objective::Versus(VersusObjective {
                winner: ClustererKind::KmeansPp,
                loser: ClustererKind::AverageLinkage
            })
        );
        let bad = r#"{"init": {"n": 50, "k": 2, "d": 2}, "objective": {"s_t": 0.5},
            "sweep": [{"paths": ["init.d", "init.k"], "values": [[2]]}]}"#;
        assert!(matches!(ConfigFile::parse(bad), Err(CliError::Input(_))));
    }

    #[test]
    fn job_seeds_are_consecutive_and_unique() {
        let text = r#"{"init": {"n": 50, "k": 2, "d": 2}, "objective": {"s_t": 0.5}, "seed": 100, "num_runs": 3,
            "sweep": [{"path": "init.d", "values": [2, 3]}]}"#;
        let file = ConfigFile::parse(text).unwrap();
        let js = jobs(&file, None, None).unwrap();
        let seeds: Vec<u64> = js.iter().map(|j| j.config.seed).collect();
        assert_eq!(seeds, vec![100, 101, 102, 103, 104, 105]);
        assert_eq!(jobs(&file, Some(1), Some(7)).unwrap().len(), 2);
        let swept_seed = r#"{"init": {"n": 50, "k": 2, "d": 2}, "objective": {"s_t": 0.5}, "num_runs": 2,
            "sweep": [{"path": "seed", "values": [2, 0]}]}"#;
        assert!(jobs(&ConfigFile::parse(swept_seed).unwrap(), None, None).is_err());
    }
}
