use std::path::{Path, PathBuf};

use super::figures::{render_ceg, render_heatmap, render_tsne, CegFigureSpec, TsneFigureSpec, YAxis};
use crate::astfeat::{AST_FEATURE_NAMES, EIGEN_FEATURE_NAMES};
use crate::ceg::{build_ceg, save_ceg_json, CegOptions, EvolutionGraph};
use crate::embed::{correlation_table, TsneOptions};
use crate::error::{Error, Result};
use crate::features::{canonical_names, featurize, save_features_csv, ExtractOptions, FeatureSet, FeatureTable};
use crate::ingest::{load_jsonl, validate, Dataset, ValidationPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Extract,
    Ceg,
    Tsne,
    Correlate,
    All,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub y_axis: YAxis,
    /// Overrides the default analysis set of each stage.
    pub feature_set: Option<FeatureSet>,
    pub ceg: CegOptions,
    pub policy: ValidationPolicy,
    pub tsne: TsneOptions,
    pub eigen_centrality: bool,
    pub node_radius: f64,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input: input.into(),
            out_dir: out_dir.into(),
            y_axis: YAxis::Pc1,
            feature_set: None,
            ceg: CegOptions::default(),
            policy: ValidationPolicy::Strict,
            tsne: TsneOptions::default(),
            eigen_centrality: false,
            node_radius: 3.0,
        }
    }
}

/// Dataset, features and graphs shared by all stages.
pub struct Analysis {
    pub dataset: Dataset,
    pub features: FeatureTable,
    pub graphs: Vec<EvolutionGraph>,
}

fn graph_columns(config: &PipelineConfig) -> Vec<String> {
    let mut names: Vec<String> = canonical_names().into_iter().map(str::to_string).collect();
    if config.eigen_centrality {
        names.extend(EIGEN_FEATURE_NAMES.iter().map(|s| s.to_string()));
    }
    let mut extra: Vec<String> = config.feature_set.iter().flat_map(FeatureSet::names).collect();
    if let YAxis::Feature(name) = &config.y_axis {
        extra.push(name.clone());
    }
    for n in extra {
        if !names.contains(&n) {
            names.push(n);
        }
    }
    names
}

pub fn analyze(config: &PipelineConfig) -> Result<Analysis> {
    let raw = load_jsonl(&config.input)?;
    let (dataset, violations) = validate(&raw, config.policy)?;
    for v in &violations {
        log::warn!("dropped parent reference: {v}");
    }
    let features = featurize(
        &dataset,
        ExtractOptions {
            eigen_centrality: config.eigen_centrality,
        },
    );
    let graphs = build_ceg(&dataset, &features, &graph_columns(config), &config.ceg)?;
    Ok(Analysis {
        dataset,
        features,
        graphs,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Run `stage` and return the paths written, in a fixed order.
pub fn run(stage: Stage, config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let analysis = analyze(config)?;
    let out = |name: &str| config.out_dir.join(name);
    let mut written = Vec::new();
    let all = stage == Stage::All;

    if all || stage == Stage::Extract {
        let path = out("features.csv");
        save_features_csv(&analysis.dataset, &analysis.features, &path)?;
        written.push(path);
    }
    if all || stage == Stage::Ceg {
        let path = out("ceg.json");
        save_ceg_json(&analysis.graphs, &path)?;
        written.push(path);
        let spec = CegFigureSpec {
            y_axis: config.y_axis.clone(),
            pca_features: config
                .feature_set
                .as_ref()
                .map(FeatureSet::names)
                .unwrap_or_else(|| AST_FEATURE_NAMES.iter().map(|s| s.to_string()).collect()),
            node_radius: config.node_radius,
            ..CegFigureSpec::default()
        };
        let figure = render_ceg(&analysis.graphs, &spec)?;
        let path = out(&format!("{}.svg", config.y_axis.file_stem()));
        write(&path, &figure.svg)?;
        written.push(path);
    }
    if all || stage == Stage::Tsne {
        let n: usize = analysis.graphs.iter().map(|g| g.nodes.len()).sum();
        let mut tsne = config.tsne;
        let mut skip = false;
        if all {
            // The full pipeline adapts to small logs instead of failing.
            let max = (n as f64 - 1.0) / 3.0;
            if max < 1.0 {
                log::warn!("t-SNE skipped: {n} nodes are too few");
                skip = true;
            } else if tsne.perplexity > max {
                log::warn!("perplexity {} lowered to {max} for {n} nodes", tsne.perplexity);
                tsne.perplexity = max;
            }
        }
        if !skip {
            let spec = TsneFigureSpec {
                tsne,
                ..TsneFigureSpec::default()
            };
            let figure = render_tsne(&analysis.graphs, &analysis_set(config), &spec)?;
            let path = out("tsne.svg");
            write(&path, &figure.svg)?;
            written.push(path);
        }
    }
    if all || stage == Stage::Correlate {
        let table = correlation_table(&analysis.graphs, &analysis_set(config))?;
        let path = out("correlations.csv");
        table.save_csv(&path)?;
        written.push(path);
        let path = out("heatmap.svg");
        write(&path, &render_heatmap(&table)?.svg)?;
        written.push(path);
    }
    Ok(written)
}

fn analysis_set(config: &PipelineConfig) -> Vec<String> {
    config
        .feature_set
        .as_ref()
        .map(FeatureSet::names)
        .unwrap_or_else(|| canonical_names().into_iter().map(str::to_string).collect())
}
