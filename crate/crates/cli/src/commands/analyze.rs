//! `analyze`: problem features and per-algorithm ARI for a set of datasets.

use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;

use evoclust::analysis::{compute_features, FeatureVector};
use evoclust::clusterers::{ari, linkage, ClustererKind, ClustererSpec, LinkageMethod};
use evoclust::model::Partition;
use evoclust::numerics::Rng;

use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, fmt_opt, read_dataset, write_file};

pub const ANALYZE_HEADER: [&str; 14] = [
    "dataset",
    "connectivity",
    "dimensionality",
    "avg_eccentricity",
    "entropy",
    "num_clusters",
    "sil_mean",
    "sil_std",
    "ari_avg_link",
    "ari_avg_link_2k",
    "ari_gmm",
    "ari_kmeanspp",
    "ari_single_link",
    "ari_single_link_2k",
];

/// Column name of each clusterer's ARI at the true cluster count.
pub fn ari_column(kind: ClustererKind) -> &'static str {
    match kind {
        ClustererKind::AverageLinkage => "ari_avg_link",
        ClustererKind::Gmm => "ari_gmm",
        ClustererKind::KmeansPp => "ari_kmeanspp",
        ClustererKind::SingleLinkage => "ari_single_link",
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub pattern: String,
    pub out: PathBuf,
    pub linkage_2k: bool,
    /// Base seed for the stochastic clusterers; dataset `i` (in sorted path
    /// order) uses a stream derived from it.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeRow {
    pub dataset: String,
    pub features: FeatureVector,
    pub ari_avg_link: f64,
    pub ari_gmm: f64,
    pub ari_kmeanspp: f64,
    pub ari_single_link: f64,
    pub ari_avg_link_2k: Option<f64>,
    pub ari_single_link_2k: Option<f64>,
}

pub fn dataset_paths(pattern: &str) -> CliResult<Vec<PathBuf>> {
    let entries = glob::glob(pattern).map_err(|e| CliError::input(format!("bad glob '{pattern}': {e}")))?;
    let mut paths = Vec::new();
    for entry in entries {
        paths.push(entry.map_err(|e| CliError::input(e.to_string()))?);
    }
    paths.retain(|p| p.is_file());
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::input(format!("no dataset files match '{pattern}'")));
    }
    Ok(paths)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn analyze_dataset(path: &Path, seed: u64, linkage_2k: bool) -> CliResult<AnalyzeRow> {
    let data = read_dataset(path)?;
    let truth = Partition::from_raw_labels(&data.labels);
    let features = compute_features(&data.points, &data.labels)
        .map_err(|e| CliError::input(format!("{}: cannot compute features: {e}", path.display())))?;
    let k = truth.k();
    let mut rng = Rng::new(seed);
    let mut score = |kind: ClustererKind| -> CliResult<f64> {
        let found = ClustererSpec::new(kind, k, rng.next_seed()).fit(&data.points)?;
        Ok(ari(&truth, &found)?)
    };
    let ari_avg_link = score(ClustererKind::AverageLinkage)?;
    let ari_gmm = score(ClustererKind::Gmm)?;
    let ari_kmeanspp = score(ClustererKind::KmeansPp)?;
    let ari_single_link = score(ClustererKind::SingleLinkage)?;
    // Twice the true count, capped by the number of points.
    let doubled = |method| -> CliResult<Option<f64>> {
        if !linkage_2k {
            return Ok(None);
        }
        let found = linkage(&data.points, (2 * k).min(truth.len()), method)?;
        Ok(Some(ari(&truth, &found)?))
    };
    Ok(AnalyzeRow {
        dataset: stem(path),
        features,
        ari_avg_link,
        ari_gmm,
        ari_kmeanspp,
        ari_single_link,
        ari_avg_link_2k: doubled(LinkageMethod::Average)?,
        ari_single_link_2k: doubled(LinkageMethod::Single)?,
    })
}

pub fn write_analysis(path: &Path, rows: &[AnalyzeRow]) -> CliResult<()> {
    write_file(path, |w| {
        w.write_record(ANALYZE_HEADER)?;
        for r in rows {
            let f = &r.features;
            w.write_record([
                r.dataset.clone(),
                fmt_f64(f.connectivity),
                f.dimensionality.to_string(),
                fmt_f64(f.avg_eccentricity),
                fmt_f64(f.entropy),
                f.num_clusters.to_string(),
                fmt_f64(f.silhouette_mean),
                fmt_f64(f.silhouette_std),
                fmt_f64(r.ari_avg_link),
                fmt_opt(r.ari_avg_link_2k),
                fmt_f64(r.ari_gmm),
                fmt_f64(r.ari_kmeanspp),
                fmt_f64(r.ari_single_link),
                fmt_opt(r.ari_single_link_2k),
            ])?;
        }
        Ok(())
    })
}

pub fn analyze(opts: &AnalyzeOptions) -> CliResult<Vec<AnalyzeRow>> {
    let paths = dataset_paths(&opts.pattern)?;
    info!("analyze: {} datasets", paths.len());
    let rows: Vec<AnalyzeRow> = paths
        .par_iter()
        .enumerate()
        .map(|(i, p)| analyze_dataset(p, Rng::derive(opts.seed, i as u64).seed(), opts.linkage_2k))
        .collect::<CliResult<_>>()?;
    if let Some(parent) = opts.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    write_analysis(&opts.out, &rows)?;
    Ok(rows)
}
