//! `instance-space`: project feature tables onto their first two principal
//! components.

use std::path::{Path, PathBuf};

use evoclust::analysis::{build_instance_space, FeatureVector, InstanceSpace, FEATURE_NAMES};
use evoclust::clusterers::ClustererKind;

use crate::commands::analyze::ari_column;
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, write_file, Table};

pub const COORDINATES_HEADER: [&str; 5] = ["dataset", "pc1", "pc2", "source", "best_algorithm"];
pub const TIED: &str = "tied";

#[derive(Debug, Clone)]
pub struct InstanceSpaceOptions {
    /// Feature tables from `analyze`; each file's stem becomes the source tag
    /// of its rows.
    pub features: Vec<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub dataset: String,
    pub source: String,
    pub features: FeatureVector,
    /// `(column, ARI)` for each base clusterer present in the table.
    pub aris: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone)]
pub struct InstanceSpaceReport {
    pub rows: Vec<FeatureRow>,
    pub space: InstanceSpace,
    pub best: Vec<String>,
    pub loadings_path: PathBuf,
}

/// `coords.csv` → `coords_loadings.csv` in the same directory.
pub fn loadings_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "instance_space".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_loadings.csv"))
}

/// Label of the top-scoring clusterer, or `tied` when two or more share the
/// top ARI. Empty when no ARI columns were given.
pub fn best_algorithm(aris: &[(&str, f64)]) -> String {
    let Some(top) = aris.iter().map(|a| a.1).reduce(f64::max) else {
        return String::new();
    };
    let winners: Vec<&str> = aris.iter().filter(|a| a.1 == top).map(|a| a.0).collect();
    match winners.as_slice() {
        [one] => one.trim_start_matches("ari_").to_string(),
        _ => TIED.to_string(),
    }
}

pub fn read_features(path: &Path) -> CliResult<Vec<FeatureRow>> {
    let table = Table::read(path)?;
    let col = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| CliError::input(format!("{}: missing column '{name}'", path.display())))
    };
    let dataset_col = col("dataset")?;
    let feature_cols = FEATURE_NAMES.iter().map(|n| col(n)).collect::<CliResult<Vec<_>>>()?;
    let ari_cols: Vec<(&'static str, usize)> = ClustererKind::ALL
        .iter()
        .filter_map(|&k| table.column(ari_column(k)).map(|c| (ari_column(k), c)))
        .collect();
    let source = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let mut rows = Vec::with_capacity(table.rows.len());
    for (row, &line) in table.rows.iter().zip(&table.lines) {
        let num = |c: usize| -> CliResult<f64> {
            row[c].trim().parse::<f64>().map_err(|_| {
                CliError::input(format!(
                    "{}:{line}: {} '{}' is not a number",
                    path.display(),
                    table.header[c],
                    row[c]
                ))
            })
        };
        let v: Vec<f64> = feature_cols.iter().map(|&c| num(c)).collect::<CliResult<_>>()?;
        let count = |x: f64, name: &str| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(CliError::input(format!(
                    "{}:{line}: {name} must be a count",
                    path.display()
                )))
            }
        };
        let features = FeatureVector {
            connectivity: v[0],
            dimensionality: count(v[1], "dimensionality")?,
            avg_eccentricity: v[2],
            entropy: v[3],
            num_clusters: count(v[4], "num_clusters")?,
            silhouette_mean: v[5],
            silhouette_std: v[6],
        };
        let mut aris = Vec::new();
        for &(name, c) in &ari_cols {
            if !row[c].trim().is_empty() {
                aris.push((name, num(c)?));
            }
        }
        rows.push(FeatureRow {
            dataset: row[dataset_col].clone(),
            source: source.clone(),
            features,
            aris,
        });
    }
    Ok(rows)
}

pub fn instance_space(opts: &InstanceSpaceOptions) -> CliResult<InstanceSpaceReport> {
    if opts.features.is_empty() {
        return Err(CliError::input("instance-space needs at least one features file"));
    }
    let mut rows = Vec::new();
    for path in &opts.features {
        rows.extend(read_features(path)?);
    }
    if rows.len() < 3 {
        return Err(CliError::input(format!(
            "instance space needs at least 3 datasets, got {}",
            rows.len()
        )));
    }
    let features: Vec<FeatureVector> = rows.iter().map(|r| r.features).collect();
    let space = build_instance_space(&features)?;
    let best: Vec<String> = rows.iter().map(|r| best_algorithm(&r.aris)).collect();

    if let Some(parent) = opts.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    write_file(&opts.out, |w| {
        w.write_record(COORDINATES_HEADER)?;
        for (i, r) in rows.iter().enumerate() {
            w.write_record([
                r.dataset.as_str(),
                &fmt_f64(space.coordinates[(i, 0)]),
                &fmt_f64(space.coordinates[(i, 1)]),
                &r.source,
                &best[i],
            ])?;
        }
        Ok(())
    })?;
    let loadings_path = loadings_path(&opts.out);
    write_file(&loadings_path, |w| {
        w.write_record(
            std::iter::once("component")
                .chain(FEATURE_NAMES)
                .chain(std::iter::once("explained_variance_ratio")),
        )?;
        for c in 0..2 {
            let mut record = vec![format!("pc{}", c + 1)];
            record.extend((0..FEATURE_NAMES.len()).map(|f| fmt_f64(space.component_loadings[(c, f)])));
            record.push(fmt_f64(space.explained_variance_ratio[c]));
            w.write_record(&record)?;
        }
        Ok(())
    })?;
    Ok(InstanceSpaceReport {
        rows,
        space,
        best,
        loadings_path,
    })
}
