//! Per-sample feature vectors and the features.csv table.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::astfeat::{
    compute_graph_features_with, GraphFeatureOptions, AST_FEATURE_NAMES, EIGEN_FEATURE_NAMES,
};
use crate::codemetrics::{metrics_from_tree, COMPLEXITY_FEATURE_NAMES, NESTING_FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::pyast::{parse_module, ParseError};

/// The 28 canonical analysis features: 22 graph features then 6 complexity features.
pub fn canonical_names() -> Vec<&'static str> {
    AST_FEATURE_NAMES
        .iter()
        .chain(COMPLEXITY_FEATURE_NAMES.iter())
        .copied()
        .collect()
}

/// Every name a [`FeatureVector`] may carry.
pub fn known_names() -> Vec<&'static str> {
    let mut names = canonical_names();
    names.extend(NESTING_FEATURE_NAMES);
    names.extend(EIGEN_FEATURE_NAMES);
    names
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(&'static str, f64)>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|&(n, _)| n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.entries.iter().copied()
    }

    /// Values for `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<Vec<f64>> {
        names
            .iter()
            .map(|n| {
                self.get(n)
                    .ok_or_else(|| Error::FeatureMismatch(format!("feature vector lacks '{n}'")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    pub eigen_centrality: bool,
}

/// All features of one source text: 28 canonical, nesting, and optionally
/// eigenvector centrality.
pub fn extract_features(code: &str, options: ExtractOptions) -> std::result::Result<FeatureVector, ParseError> {
    let tree = parse_module(code)?;
    let graph = compute_graph_features_with(
        &tree.to_graph(),
        GraphFeatureOptions {
            eigen_centrality: options.eigen_centrality,
        },
    );
    let metrics = metrics_from_tree(&tree);
    let mut entries: Vec<(&'static str, f64)> = AST_FEATURE_NAMES
        .iter()
        .copied()
        .zip(graph.values())
        .chain(COMPLEXITY_FEATURE_NAMES.iter().copied().zip(metrics.values()))
        .collect();
    entries.push(("nesting_max", metrics.nesting_max as f64));
    entries.push(("nesting_mean", metrics.nesting_mean));
    if let Some((max, mean)) = graph.eigen_centrality {
        entries.push(("eig_centrality_max", max));
        entries.push(("eig_centrality_mean", mean));
    }
    Ok(FeatureVector { entries })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureSet {
    Ast22,
    Complexity6,
    All28,
    Custom(Vec<String>),
}

impl FeatureSet {
    /// Parse `ast22`, `complexity6`, `all28` or `custom:<file>` (one name per
    /// line, `#` starts a comment).
    pub fn parse(spec: &str) -> Result<FeatureSet> {
        match spec {
            "ast22" => Ok(FeatureSet::Ast22),
            "complexity6" => Ok(FeatureSet::Complexity6),
            "all28" => Ok(FeatureSet::All28),
            _ => {
                let Some(path) = spec.strip_prefix("custom:") else {
                    return Err(Error::InvalidArgument(format!(
                        "unknown feature set '{spec}' (expected ast22, complexity6, all28 or custom:<file>)"
                    )));
                };
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                FeatureSet::from_names(
                    text.lines()
                        .map(|l| l.split('#').next().unwrap().trim())
                        .filter(|l| !l.is_empty())
                        .map(str::to_string)
                        .collect(),
                )
            }
        }
    }

    pub fn from_names(names: Vec<String>) -> Result<FeatureSet> {
        let known = known_names();
        if names.is_empty() {
            return Err(Error::InvalidArgument("custom feature set is empty".into()));
        }
        for n in &names {
            if !known.contains(&n.as_str()) {
                return Err(Error::InvalidArgument(format!("unknown feature name '{n}'")));
            }
        }
        Ok(FeatureSet::Custom(names))
    }

    pub fn names(&self) -> Vec<String> {
        let list: Vec<&str> = match self {
            FeatureSet::Ast22 => AST_FEATURE_NAMES.to_vec(),
            FeatureSet::Complexity6 => COMPLEXITY_FEATURE_NAMES.to_vec(),
            FeatureSet::All28 => canonical_names(),
            FeatureSet::Custom(names) => return names.clone(),
        };
        list.into_iter().map(str::to_string).collect()
    }
}

/// Features of every sample; unparsable samples keep their error.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub rows: Vec<std::result::Result<FeatureVector, ParseError>>,
}

impl FeatureTable {
    pub fn by_id<'a>(&'a self, dataset: &'a Dataset) -> HashMap<&'a str, &'a FeatureVector> {
        dataset
            .samples
            .iter()
            .zip(&self.rows)
            .filter_map(|(s, r)| r.as_ref().ok().map(|f| (s.id.as_str(), f)))
            .collect()
    }

    pub fn parsed_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_ok()).count()
    }
}

/// Parallel featurization; the row order follows the dataset.
pub fn featurize(dataset: &Dataset, options: ExtractOptions) -> FeatureTable {
    let rows = dataset
        .samples
        .par_iter()
        .map(|s| extract_features(&s.code, options))
        .collect::<Vec<_>>();
    for (s, r) in dataset.samples.iter().zip(&rows) {
        if let Err(e) = r {
            log::warn!("sample '{}' is not valid Python: {e}", s.id);
        }
    }
    FeatureTable { rows }
}

pub const METADATA_COLUMNS: [&str; 8] = [
    "id",
    "name",
    "run_id",
    "method",
    "llm",
    "benchmark",
    "evaluation_index",
    "fitness_raw",
];

/// features.csv: metadata columns, the 28 canonical features and, when
/// computed, eigenvector centrality. Unparsable samples are omitted.
pub fn write_features_csv<W: Write>(dataset: &Dataset, table: &FeatureTable, out: W) -> Result<()> {
    let mut columns: Vec<&str> = METADATA_COLUMNS.to_vec();
    columns.extend(canonical_names());
    let with_eigen = table
        .rows
        .iter()
        .flatten()
        .any(|f| f.get(EIGEN_FEATURE_NAMES[0]).is_some());
    if with_eigen {
        columns.extend(EIGEN_FEATURE_NAMES);
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(&columns).map_err(csv_err)?;
    for (s, row) in dataset.samples.iter().zip(&table.rows) {
        let Ok(f) = row else { continue };
        let mut record = vec![
            s.id.clone(),
            s.name.clone(),
            s.run_id.clone(),
            s.method.clone(),
            s.llm.clone(),
            s.benchmark.clone(),
            s.evaluation_index.to_string(),
            s.fitness_raw.map(format_number).unwrap_or_default(),
        ];
        for name in &columns[METADATA_COLUMNS.len()..] {
            record.push(format_number(f.get(name).unwrap_or(f64::NAN)));
        }
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("features.csv", e))?;
    Ok(())
}

pub fn save_features_csv(dataset: &Dataset, table: &FeatureTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_features_csv(dataset, table, std::io::BufWriter::new(file))
}

/// Shortest representation that parses back to the same value.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}
