//! Code Evolution Graphs: one lineage graph per run, with normalized
//! fitness and standardized feature vectors on every node.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::ingest::{Dataset, GroupKey, RunKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    MinMax,
    /// Raw fitness is already in [0, 1].
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormScope {
    /// Per (benchmark, method, llm) group.
    #[default]
    Group,
    Run,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdScope {
    #[default]
    Dataset,
    Group,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CegOptions {
    pub normalize: Normalization,
    pub direction: Direction,
    pub norm_scope: NormScope,
    pub std_scope: StdScope,
    /// fitness_norm assigned when every fitness in a scope is equal.
    pub degenerate_fitness: f64,
}

impl Default for CegOptions {
    fn default() -> Self {
        CegOptions {
            normalize: Normalization::MinMax,
            direction: Direction::Maximize,
            norm_scope: NormScope::Group,
            std_scope: StdScope::Dataset,
            degenerate_fitness: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CegNode {
    pub sample_id: String,
    pub evaluation_index: u64,
    pub fitness_norm: Option<f64>,
    pub parent_frequency: usize,
    pub features_raw: Vec<f64>,
    pub features_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionGraph {
    pub group_key: GroupKey,
    pub run_id: String,
    pub feature_names: Vec<String>,
    pub nodes: Vec<CegNode>,
    pub edges: Vec<(String, String)>,
}

impl EvolutionGraph {
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }
}

/// Build one graph per run, in order of first appearance. Samples without
/// a feature vector (unparsable code) are left out along with their edges.
pub fn build_ceg(
    dataset: &Dataset,
    features: &FeatureTable,
    feature_names: &[String],
    options: &CegOptions,
) -> Result<Vec<EvolutionGraph>> {
    if features.rows.len() != dataset.len() {
        return Err(Error::FeatureMismatch(format!(
            "{} feature rows for {} samples",
            features.rows.len(),
            dataset.len()
        )));
    }
    let mut raw: Vec<Option<Vec<f64>>> = Vec::with_capacity(dataset.len());
    for row in &features.rows {
        raw.push(match row {
            Ok(f) => Some(f.select(feature_names)?),
            Err(_) => None,
        });
    }

    let fitness = normalized_fitness(dataset, &raw, options)?;
    let standardized = standardize(dataset, &raw, options.std_scope);

    let mut graphs = Vec::new();
    for (key, members) in dataset.runs() {
        let mut kept: Vec<usize> = members.into_iter().filter(|&i| raw[i].is_some()).collect();
        if kept.is_empty() {
            log::warn!("run '{}' of {} has no parsable samples; skipped", key.run_id, key.group);
            continue;
        }
        kept.sort_by_key(|&i| dataset.samples[i].evaluation_index);
        let position: HashMap<&str, usize> = kept
            .iter()
            .enumerate()
            .map(|(k, &i)| (dataset.samples[i].id.as_str(), k))
            .collect();
        let mut edges = Vec::new();
        let mut out_degree = vec![0usize; kept.len()];
        for &i in &kept {
            let child = &dataset.samples[i];
            for parent in &child.parent_ids {
                match position.get(parent.as_str()) {
                    Some(&p) => {
                        out_degree[p] += 1;
                        edges.push((parent.clone(), child.id.clone()));
                    }
                    None => log::warn!(
                        "edge {parent} -> {} dropped: parent has no feature vector",
                        child.id
                    ),
                }
            }
        }
        let nodes = kept
            .iter()
            .zip(out_degree)
            .map(|(&i, parent_frequency)| CegNode {
                sample_id: dataset.samples[i].id.clone(),
                evaluation_index: dataset.samples[i].evaluation_index,
                fitness_norm: fitness[i],
                parent_frequency,
                features_raw: raw[i].clone().unwrap(),
                features_std: standardized[i].clone().unwrap(),
            })
            .collect();
        let RunKey { group, run_id } = key;
        graphs.push(EvolutionGraph {
            group_key: group,
            run_id,
            feature_names: feature_names.to_vec(),
            nodes,
            edges,
        });
    }
    Ok(graphs)
}

fn normalized_fitness(
    dataset: &Dataset,
    raw: &[Option<Vec<f64>>],
    options: &CegOptions,
) -> Result<Vec<Option<f64>>> {
    let present = |i: usize| raw[i].as_ref().and(dataset.samples[i].fitness_raw);
    let mut out = vec![None; dataset.len()];
    if options.normalize == Normalization::None {
        for (i, slot) in out.iter_mut().enumerate() {
            if let Some(f) = present(i) {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::InvalidArgument(format!(
                        "sample '{}' has fitness {f} outside [0, 1]; use min-max normalization",
                        dataset.samples[i].id
                    )));
                }
                *slot = Some(match options.direction {
                    Direction::Maximize => f,
                    Direction::Minimize => 1.0 - f,
                });
            }
        }
        return Ok(out);
    }
    let mut scopes: IndexMap<String, Vec<usize>> = IndexMap::new();
    for (i, s) in dataset.samples.iter().enumerate() {
        let key = match options.norm_scope {
            NormScope::Global => String::new(),
            NormScope::Group => format!("{:?}", s.group_key()),
            NormScope::Run => format!("{:?}", s.run_key()),
        };
        scopes.entry(key).or_default().push(i);
    }
    for members in scopes.values() {
        let values: Vec<(usize, f64)> = members.iter().filter_map(|&i| present(i).map(|f| (i, f))).collect();
        let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        for &(i, f) in &values {
            out[i] = Some(if hi == lo {
                options.degenerate_fitness
            } else {
                let t = ((f - lo) / (hi - lo)).clamp(0.0, 1.0);
                match options.direction {
                    Direction::Maximize => t,
                    Direction::Minimize => 1.0 - t,
                }
            });
        }
    }
    Ok(out)
}

/// Column-wise z-scores with population variance; constant columns map to 0.
pub fn zscore_columns(rows: &[&[f64]]) -> Vec<Vec<f64>> {
    let Some(d) = rows.first().map(|r| r.len()) else {
        return Vec::new();
    };
    let n = rows.len() as f64;
    let mut out = vec![vec![0.0; d]; rows.len()];
    for j in 0..d {
        let first = rows[0][j];
        if rows.iter().all(|r| r[j] == first) {
            continue;
        }
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for (o, r) in out.iter_mut().zip(rows) {
            o[j] = (r[j] - mean) / sd;
        }
    }
    out
}

fn standardize(dataset: &Dataset, raw: &[Option<Vec<f64>>], scope: StdScope) -> Vec<Option<Vec<f64>>> {
    let mut scopes: IndexMap<Option<GroupKey>, Vec<usize>> = IndexMap::new();
    for (i, s) in dataset.samples.iter().enumerate() {
        if raw[i].is_some() {
            let key = match scope {
                StdScope::Dataset => None,
                StdScope::Group => Some(s.group_key()),
            };
            scopes.entry(key).or_default().push(i);
        }
    }
    let mut out = vec![None; dataset.len()];
    for members in scopes.values() {
        let rows: Vec<&[f64]> = members.iter().map(|&i| raw[i].as_deref().unwrap()).collect();
        for (&i, z) in members.iter().zip(zscore_columns(&rows)) {
            out[i] = Some(z);
        }
    }
    out
}

#[derive(Serialize)]
struct NodeJson<'a> {
    sample_id: &'a str,
    evaluation_index: u64,
    fitness_norm: Option<f64>,
    parent_frequency: usize,
    features_raw: &'a [f64],
    features_std: &'a [f64],
}

#[derive(Serialize)]
struct GraphJson<'a> {
    group_key: &'a GroupKey,
    run_id: &'a str,
    feature_names: &'a [String],
    nodes: Vec<NodeJson<'a>>,
    edges: Vec<[&'a str; 2]>,
}

/// ceg.json: an array with one object per graph.
pub fn write_ceg_json<W: Write>(graphs: &[EvolutionGraph], out: W) -> Result<()> {
    let doc: Vec<GraphJson> = graphs
        .iter()
        .map(|g| GraphJson {
            group_key: &g.group_key,
            run_id: &g.run_id,
            feature_names: &g.feature_names,
            nodes: g
                .nodes
                .iter()
                .map(|n| NodeJson {
                    sample_id: &n.sample_id,
                    evaluation_index: n.evaluation_index,
                    fitness_norm: n.fitness_norm,
                    parent_frequency: n.parent_frequency,
                    features_raw: &n.features_raw,
                    features_std: &n.features_std,
                })
                .collect(),
            edges: g.edges.iter().map(|(p, c)| [p.as_str(), c.as_str()]).collect(),
        })
        .collect();
    serde_json::to_writer_pretty(out, &doc)
        .map_err(|e| Error::InvalidArgument(format!("ceg.json: {e}")))
}

pub fn save_ceg_json(graphs: &[EvolutionGraph], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_ceg_json(graphs, &mut w)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
