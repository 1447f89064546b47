use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;

use crate::ceg::EvolutionGraph;
use crate::error::{Error, Result};
use crate::ingest::GroupKey;

/// Twice the average (1-based) rank of each value; ties share the mean of
/// their rank range. Doubling keeps tied ranks integral.
fn doubled_ranks(values: &[f64]) -> Vec<i128> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0i128; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold 1-based ranks start+1..=end
        let doubled = (start + 1 + end) as i128;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        start = end;
    }
    ranks
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Spearman's rho with average ranks. Non-finite entries in either input
/// are dropped pairwise; `None` when fewer than 3 pairs remain. A constant
/// rank vector gives 0.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "spearman inputs differ in length");
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(&a, &b)| (a, b))
        .unzip();
    let n = xs.len() as i128;
    if n < 3 {
        return None;
    }
    let (rx, ry) = (doubled_ranks(&xs), doubled_ranks(&ys));
    let (sx, sy): (i128, i128) = (rx.iter().sum(), ry.iter().sum());
    let sxy: i128 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let sxx: i128 = rx.iter().map(|a| a * a).sum();
    let syy: i128 = ry.iter().map(|b| b * b).sum();
    let cov = n * sxy - sx * sy;
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx == 0 || vy == 0 {
        return Some(0.0);
    }
    let rho = if vx == vy {
        // Without ties both variances agree; reduce so the quotient is the
        // correctly rounded value of the exact rational.
        let g = gcd(cov, vx).max(1);
        (cov / g) as f64 / (vx / g) as f64
    } else {
        cov as f64 / ((vx as f64) * (vy as f64)).sqrt()
    };
    Some(rho.clamp(-1.0, 1.0))
}

/// Spearman rho of each feature against fitness, one row per group.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub groups: Vec<GroupKey>,
    pub features: Vec<String>,
    /// rows × features; `None` marks a blank cell.
    pub cells: Vec<Vec<Option<f64>>>,
}

/// Pools all runs of a (benchmark, method, llm) group and correlates raw
/// feature values with normalized fitness; nodes without fitness are dropped.
pub fn correlation_table(graphs: &[EvolutionGraph], features: &[String]) -> Result<CorrelationTable> {
    let mut pooled: IndexMap<&GroupKey, Vec<(&EvolutionGraph, usize)>> = IndexMap::new();
    for g in graphs {
        let entry = pooled.entry(&g.group_key).or_default();
        for i in 0..g.nodes.len() {
            entry.push((g, i));
        }
    }
    let mut cells = Vec::with_capacity(pooled.len());
    for nodes in pooled.values() {
        let fitness: Vec<f64> = nodes
            .iter()
            .map(|&(g, i)| g.nodes[i].fitness_norm.unwrap_or(f64::NAN))
            .collect();
        let mut row = Vec::with_capacity(features.len());
        for name in features {
            let mut column = Vec::with_capacity(nodes.len());
            for &(g, i) in nodes {
                let j = g.feature_index(name).ok_or_else(|| {
                    Error::FeatureMismatch(format!("graph '{}' lacks feature '{name}'", g.run_id))
                })?;
                column.push(g.nodes[i].features_raw[j]);
            }
            row.push(spearman(&column, &fitness));
        }
        cells.push(row);
    }
    Ok(CorrelationTable {
        groups: pooled.keys().map(|k| (*k).clone()).collect(),
        features: features.to_vec(),
        cells,
    })
}

impl CorrelationTable {
    /// First column is the group label, then one column per feature; blank
    /// cells are empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        let mut header = vec!["group".to_string()];
        header.extend(self.features.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (group, row) in self.groups.iter().zip(&self.cells) {
            let mut record = vec![group.to_string()];
            record.extend(row.iter().map(|c| c.map(|v| format!("{v}")).unwrap_or_default()));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("correlations.csv", e))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
