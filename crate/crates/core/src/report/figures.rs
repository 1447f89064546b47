use std::str::FromStr;

use indexmap::IndexMap;

use super::svg::{escape, num, Scale, Svg, PALETTE};
use crate::astfeat::AST_FEATURE_NAMES;
use crate::ceg::EvolutionGraph;
use crate::embed::{pca, tsne, CorrelationTable, Matrix, TsneOptions};
use crate::error::{Error, Result};
use crate::ingest::GroupKey;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum YAxis {
    Pc1,
    TokenTotal,
    Feature(String),
}

impl YAxis {
    /// Output file stem: `ceg_pc1`, `ceg_tokens`, `ceg_feature_<name>`.
    pub fn file_stem(&self) -> String {
        match self {
            YAxis::Pc1 => "ceg_pc1".into(),
            YAxis::TokenTotal => "ceg_tokens".into(),
            YAxis::Feature(name) => format!("ceg_feature_{name}"),
        }
    }
}

impl FromStr for YAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pc1" => Ok(YAxis::Pc1),
            "tokens" | "token_total" => Ok(YAxis::TokenTotal),
            _ => match s.strip_prefix("feature:") {
                Some(name) if !name.is_empty() => Ok(YAxis::Feature(name.to_string())),
                _ => Err(format!("expected pc1, tokens or feature:<name>, got '{s}'")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CegFigureSpec {
    pub y_axis: YAxis,
    /// Standardized columns fed to PCA when `y_axis` is PC1.
    pub pca_features: Vec<String>,
    /// Radius of a node that parents nothing.
    pub node_radius: f64,
    pub panel_width: f64,
    pub panel_height: f64,
}

impl Default for CegFigureSpec {
    fn default() -> Self {
        CegFigureSpec {
            y_axis: YAxis::Pc1,
            pca_features: AST_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            node_radius: 3.0,
            panel_width: 320.0,
            panel_height: 220.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegendEntry {
    /// "color", "shape" or "size".
    pub channel: String,
    pub label: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFigure {
    pub svg: String,
    pub legend: Vec<LegendEntry>,
    /// Explained-variance fraction to two decimals when the y axis is PC1.
    pub annotation: Option<String>,
    pub explained_variance: Option<f64>,
}

const LEFT: f64 = 70.0;
const TOP: f64 = 50.0;
const GAP: f64 = 30.0;
const INSET: f64 = 14.0;

fn column_indices(graph: &EvolutionGraph, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            graph.feature_index(n).ok_or_else(|| {
                Error::FeatureMismatch(format!("graph '{}' lacks feature '{n}'", graph.run_id))
            })
        })
        .collect()
}

/// Per-node y values across all graphs, plus the PC1 variance fraction.
fn y_values(graphs: &[EvolutionGraph], spec: &CegFigureSpec) -> Result<(Vec<Vec<f64>>, Option<f64>)> {
    match &spec.y_axis {
        YAxis::Pc1 => {
            let mut rows = Vec::new();
            for g in graphs {
                let cols = column_indices(g, &spec.pca_features)?;
                for n in &g.nodes {
                    rows.push(cols.iter().map(|&j| n.features_std[j]).collect::<Vec<f64>>());
                }
            }
            let result = pca(&Matrix::from_rows(&rows), 1)?;
            let mut k = 0;
            let mut out = Vec::with_capacity(graphs.len());
            for g in graphs {
                out.push((0..g.nodes.len()).map(|i| result.projected[(k + i, 0)]).collect());
                k += g.nodes.len();
            }
            Ok((out, Some(result.explained_variance_ratio[0])))
        }
        YAxis::TokenTotal | YAxis::Feature(_) => {
            let name = match &spec.y_axis {
                YAxis::Feature(name) => name.as_str(),
                _ => "token_total",
            };
            let mut out = Vec::with_capacity(graphs.len());
            for g in graphs {
                let j = column_indices(g, &[name.to_string()])?[0];
                out.push(g.nodes.iter().map(|n| n.features_raw[j]).collect());
            }
            Ok((out, None))
        }
    }
}

/// Lineage plot: one panel per run, rows are groups. x is the evaluation
/// index; node radius grows with parent frequency.
pub fn render_ceg(graphs: &[EvolutionGraph], spec: &CegFigureSpec) -> Result<RenderedFigure> {
    let total: usize = graphs.iter().map(|g| g.nodes.len()).sum();
    if total == 0 {
        return Err(Error::InvalidArgument("CEG figure has no nodes".into()));
    }
    let (ys, variance) = y_values(graphs, spec)?;
    let annotation = variance.map(num);

    let mut layout: IndexMap<&GroupKey, Vec<usize>> = IndexMap::new();
    for (i, g) in graphs.iter().enumerate() {
        layout.entry(&g.group_key).or_default().push(i);
    }
    let columns = layout.values().map(Vec::len).max().unwrap_or(1);
    let (pw, ph) = (spec.panel_width, spec.panel_height);
    let width = LEFT + columns as f64 * (pw + GAP);
    let height = TOP + layout.len() as f64 * (ph + GAP) + 20.0;

    let x_scale_of = |x0: f64| {
        Scale::new(
            graphs.iter().flat_map(|g| g.nodes.iter().map(|n| n.evaluation_index as f64)),
            x0 + INSET,
            x0 + pw - INSET,
        )
    };
    let y_label = match &spec.y_axis {
        YAxis::Pc1 => format!("PC1 ({} of variance)", annotation.as_deref().unwrap_or("")),
        YAxis::TokenTotal => "token_total".to_string(),
        YAxis::Feature(name) => name.clone(),
    };

    let mut svg = Svg::new(width, height);
    svg.text(
        LEFT,
        22.0,
        "class=\"title\" font-size=\"14\"",
        &format!("Code evolution graphs, y = {y_label}"),
    );
    let mut legend = Vec::new();
    for (row, (group, members)) in layout.iter().enumerate() {
        let color = PALETTE[row % PALETTE.len()];
        legend.push(LegendEntry {
            channel: "color".into(),
            label: group.to_string(),
            value: color.into(),
        });
        let y0 = TOP + row as f64 * (ph + GAP);
        for (col, &gi) in members.iter().enumerate() {
            let g = &graphs[gi];
            let x0 = LEFT + col as f64 * (pw + GAP);
            let xs = x_scale_of(x0);
            let yscale = Scale::new(ys.iter().flatten().copied(), y0 + ph - INSET, y0 + INSET);
            svg.open_group(&format!(
                "class=\"panel\" data-group=\"{}\" data-run=\"{}\"",
                escape(&group.to_string()),
                escape(&g.run_id)
            ));
            svg.element(
                "rect",
                &format!(
                    "class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888888\"",
                    num(x0),
                    num(y0),
                    num(pw),
                    num(ph)
                ),
            );
            svg.text(
                x0 + 4.0,
                y0 - 6.0,
                "class=\"panel-title\" font-size=\"11\"",
                &format!("{group} | run {}", g.run_id),
            );
            if let Some(a) = &annotation {
                svg.text(
                    x0 + pw - 6.0,
                    y0 + 14.0,
                    "class=\"variance\" font-size=\"11\" text-anchor=\"end\"",
                    a,
                );
            }
            if col == 0 {
                svg.text(
                    x0 - 40.0,
                    y0 + ph / 2.0,
                    &format!(
                        "class=\"axis-label\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\"",
                        num(x0 - 40.0),
                        num(y0 + ph / 2.0)
                    ),
                    &y_label,
                );
            }
            svg.text(
                x0 + pw / 2.0,
                y0 + ph + 14.0,
                "class=\"axis-label\" font-size=\"10\" text-anchor=\"middle\"",
                "evaluation index",
            );
            let pos: Vec<(f64, f64)> = g
                .nodes
                .iter()
                .zip(&ys[gi])
                .map(|(n, &y)| (xs.map(n.evaluation_index as f64), yscale.map(y)))
                .collect();
            let index: std::collections::HashMap<&str, usize> = g
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| (n.sample_id.as_str(), i))
                .collect();
            for (p, c) in &g.edges {
                let (a, b) = (index[p.as_str()], index[c.as_str()]);
                svg.line("edge", pos[a], pos[b], "#999999");
            }
            for (n, &(cx, cy)) in g.nodes.iter().zip(&pos) {
                let r = spec.node_radius * (1.0 + n.parent_frequency as f64);
                let (class, fill) = match n.fitness_norm {
                    Some(_) => ("node", color),
                    None => ("node missing", "none"),
                };
                svg.element(
                    "circle",
                    &format!(
                        "class=\"{class}\" data-id=\"{}\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\" fill-opacity=\"0.8\" stroke=\"{color}\"",
                        escape(&n.sample_id),
                        num(cx),
                        num(cy),
                        num(r)
                    ),
                );
            }
            svg.close_group();
        }
    }
    legend.push(LegendEntry {
        channel: "size".into(),
        label: "parent frequency".into(),
        value: format!("r = {} * (1 + parents)", num(spec.node_radius)),
    });
    Ok(RenderedFigure {
        svg: svg.finish(),
        legend,
        annotation,
        explained_variance: variance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneFigureSpec {
    pub tsne: TsneOptions,
    pub min_radius: f64,
    pub max_radius: f64,
}

impl Default for TsneFigureSpec {
    fn default() -> Self {
        TsneFigureSpec {
            tsne: TsneOptions::default(),
            min_radius: 3.0,
            max_radius: 10.0,
        }
    }
}

pub const SHAPES: [&str; 7] = ["circle", "square", "triangle", "diamond", "triangle-down", "pentagon", "cross"];

fn glyph_path(shape: &str, cx: f64, cy: f64, r: f64) -> String {
    let poly = |pts: &[(f64, f64)]| {
        let mut d = String::new();
        for (k, (x, y)) in pts.iter().enumerate() {
            d.push_str(if k == 0 { "M" } else { " L" });
            d.push_str(&format!("{} {}", num(cx + x * r), num(cy + y * r)));
        }
        d.push_str(" Z");
        d
    };
    match shape {
        "circle" => format!(
            "M{} {} A{r} {r} 0 1 0 {} {} A{r} {r} 0 1 0 {} {} Z",
            num(cx - r),
            num(cy),
            num(cx + r),
            num(cy),
            num(cx - r),
            num(cy),
            r = num(r)
        ),
        "square" => poly(&[(-0.9, -0.9), (0.9, -0.9), (0.9, 0.9), (-0.9, 0.9)]),
        "triangle" => poly(&[(0.0, -1.1), (1.0, 0.8), (-1.0, 0.8)]),
        "diamond" => poly(&[(0.0, -1.2), (1.0, 0.0), (0.0, 1.2), (-1.0, 0.0)]),
        "triangle-down" => poly(&[(0.0, 1.1), (1.0, -0.8), (-1.0, -0.8)]),
        "pentagon" => {
            let pts: Vec<(f64, f64)> = (0..5)
                .map(|k| {
                    let a = -std::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * std::f64::consts::PI / 5.0;
                    (a.cos(), a.sin())
                })
                .collect();
            poly(&pts)
        }
        _ => poly(&[
            (-0.3, -1.0),
            (0.3, -1.0),
            (0.3, -0.3),
            (1.0, -0.3),
            (1.0, 0.3),
            (0.3, 0.3),
            (0.3, 1.0),
            (-0.3, 1.0),
            (-0.3, 0.3),
            (-1.0, 0.3),
            (-1.0, -0.3),
            (-0.3, -0.3),
        ]),
    }
}

fn method_label(g: &GroupKey) -> String {
    if g.llm.is_empty() {
        g.method.clone()
    } else {
        format!("{}/{}", g.method, g.llm)
    }
}

/// t-SNE scatter of all nodes: color = method/llm, shape = run within its
/// group, size grows with normalized fitness.
pub fn render_tsne(graphs: &[EvolutionGraph], features: &[String], spec: &TsneFigureSpec) -> Result<RenderedFigure> {
    let mut rows = Vec::new();
    let mut meta = Vec::new();
    let mut colors: IndexMap<String, usize> = IndexMap::new();
    let mut shapes: IndexMap<String, usize> = IndexMap::new();
    let mut run_ordinal: IndexMap<&GroupKey, usize> = IndexMap::new();
    for g in graphs {
        let cols = column_indices(g, features)?;
        let label = method_label(&g.group_key);
        let next = colors.len();
        let color = *colors.entry(label).or_insert(next);
        let ordinal = run_ordinal.entry(&g.group_key).or_insert(0);
        let shape = *ordinal % SHAPES.len();
        *ordinal += 1;
        shapes.entry(format!("run {}", shape + 1)).or_insert(shape);
        for n in &g.nodes {
            rows.push(cols.iter().map(|&j| n.features_std[j]).collect::<Vec<f64>>());
            meta.push((color, shape, n.fitness_norm, n.sample_id.as_str(), g.run_id.as_str()));
        }
    }
    if rows.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "t-SNE figure needs at least 4 nodes, got {}",
            rows.len()
        )));
    }
    let result = tsne(&Matrix::from_rows(&rows), spec.tsne)?;
    let coords = &result.coords;

    let (plot, legend_w) = (520.0, 200.0);
    let width = LEFT + plot + legend_w;
    let height = TOP + plot + 50.0;
    let xs = Scale::new((0..coords.rows()).map(|i| coords[(i, 0)]), LEFT + INSET, LEFT + plot - INSET);
    let ys = Scale::new((0..coords.rows()).map(|i| coords[(i, 1)]), TOP + plot - INSET, TOP + INSET);

    let mut svg = Svg::new(width, height);
    svg.text(
        LEFT,
        24.0,
        "class=\"title\" font-size=\"14\"",
        &format!(
            "t-SNE of {} features (perplexity {}, seed {})",
            features.len(),
            result.perplexity,
            result.seed
        ),
    );
    svg.element(
        "rect",
        &format!(
            "class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888888\"",
            num(LEFT),
            num(TOP),
            num(plot),
            num(plot)
        ),
    );
    svg.text(LEFT + plot / 2.0, TOP + plot + 20.0, "class=\"axis-label\" font-size=\"11\" text-anchor=\"middle\"", "t-SNE 1");
    svg.text(
        LEFT - 20.0,
        TOP + plot / 2.0,
        &format!(
            "class=\"axis-label\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\"",
            num(LEFT - 20.0),
            num(TOP + plot / 2.0)
        ),
        "t-SNE 2",
    );
    for (i, &(color, shape, fitness, id, run)) in meta.iter().enumerate() {
        let hex = PALETTE[color % PALETTE.len()];
        let r = match fitness {
            Some(f) => spec.min_radius + (spec.max_radius - spec.min_radius) * f,
            None => spec.min_radius,
        };
        let fill = if fitness.is_some() { hex } else { "none" };
        svg.element(
            "path",
            &format!(
                "class=\"glyph\" data-id=\"{}\" data-run=\"{}\" data-shape=\"{}\" data-color=\"{hex}\" data-r=\"{}\" d=\"{}\" fill=\"{fill}\" fill-opacity=\"0.75\" stroke=\"{hex}\"",
                escape(id),
                escape(run),
                SHAPES[shape],
                num(r),
                glyph_path(SHAPES[shape], xs.map(coords[(i, 0)]), ys.map(coords[(i, 1)]), r)
            ),
        );
    }

    let mut legend = Vec::new();
    let lx = LEFT + plot + 24.0;
    let mut ly = TOP + 10.0;
    svg.open_group("class=\"legend\"");
    for (label, &c) in &colors {
        let hex = PALETTE[c % PALETTE.len()];
        svg.element("path", &format!("class=\"legend-glyph\" d=\"{}\" fill=\"{hex}\"", glyph_path("circle", lx, ly, 5.0)));
        svg.text(lx + 12.0, ly + 4.0, "font-size=\"11\"", label);
        legend.push(LegendEntry {
            channel: "color".into(),
            label: label.clone(),
            value: hex.into(),
        });
        ly += 18.0;
    }
    ly += 8.0;
    for (label, &s) in &shapes {
        svg.element(
            "path",
            &format!("class=\"legend-glyph\" d=\"{}\" fill=\"#555555\"", glyph_path(SHAPES[s], lx, ly, 5.0)),
        );
        svg.text(lx + 12.0, ly + 4.0, "font-size=\"11\"", label);
        legend.push(LegendEntry {
            channel: "shape".into(),
            label: label.clone(),
            value: SHAPES[s].into(),
        });
        ly += 18.0;
    }
    svg.text(lx, ly + 10.0, "font-size=\"10\"", "size: normalized fitness");
    svg.close_group();
    legend.push(LegendEntry {
        channel: "size".into(),
        label: "normalized fitness".into(),
        value: format!("r in [{}, {}]", num(spec.min_radius), num(spec.max_radius)),
    });
    Ok(RenderedFigure {
        svg: svg.finish(),
        legend,
        annotation: None,
        explained_variance: None,
    })
}

const NEGATIVE: (f64, f64, f64) = (33.0, 102.0, 172.0);
const NEUTRAL: (f64, f64, f64) = (247.0, 247.0, 247.0);
const POSITIVE: (f64, f64, f64) = (178.0, 24.0, 43.0);

/// Diverging color anchored at −1 (blue), 0 (light grey), +1 (red).
pub fn diverging_color(rho: f64) -> String {
    let t = rho.clamp(-1.0, 1.0);
    let end = if t < 0.0 { NEGATIVE } else { POSITIVE };
    let a = t.abs();
    let mix = |n: f64, e: f64| (n + (e - n) * a).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(NEUTRAL.0, end.0),
        mix(NEUTRAL.1, end.1),
        mix(NEUTRAL.2, end.2)
    )
}

/// Correlation heatmap: rows are groups, columns features; blank cells
/// have no label.
pub fn render_heatmap(table: &CorrelationTable) -> Result<RenderedFigure> {
    if table.groups.is_empty() || table.features.is_empty() {
        return Err(Error::InvalidArgument("correlation table is empty".into()));
    }
    let (cw, ch) = (34.0, 24.0);
    let label_w = 190.0;
    let header_h = 120.0;
    let width = label_w + cw * table.features.len() as f64 + 90.0;
    let height = header_h + ch * table.groups.len() as f64 + 40.0;
    let mut svg = Svg::new(width, height);
    svg.text(10.0, 20.0, "class=\"title\" font-size=\"14\"", "Spearman correlation with normalized fitness");
    for (j, name) in table.features.iter().enumerate() {
        let x = label_w + (j as f64 + 0.5) * cw;
        let y = header_h - 6.0;
        svg.text(
            x,
            y,
            &format!(
                "class=\"column-label\" font-size=\"10\" transform=\"rotate(-60 {} {})\"",
                num(x),
                num(y)
            ),
            name,
        );
    }
    for (i, (group, row)) in table.groups.iter().zip(&table.cells).enumerate() {
        let y = header_h + i as f64 * ch;
        svg.text(
            label_w - 6.0,
            y + ch / 2.0 + 4.0,
            "class=\"row-label\" font-size=\"11\" text-anchor=\"end\"",
            &group.to_string(),
        );
        for (j, cell) in row.iter().enumerate() {
            let x = label_w + j as f64 * cw;
            let (class, fill) = match cell {
                Some(rho) => ("cell", diverging_color(*rho)),
                None => ("cell blank", "#ffffff".to_string()),
            };
            svg.element(
                "rect",
                &format!(
                    "class=\"{class}\" data-row=\"{i}\" data-col=\"{j}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\" stroke=\"#ffffff\"",
                    num(x),
                    num(y),
                    num(cw),
                    num(ch)
                ),
            );
            if let Some(rho) = cell {
                let ink = if rho.abs() > 0.6 { "#ffffff" } else { "#222222" };
                svg.text(
                    x + cw / 2.0,
                    y + ch / 2.0 + 3.0,
                    &format!("class=\"cell-label\" font-size=\"8\" text-anchor=\"middle\" fill=\"{ink}\""),
                    &num(*rho),
                );
            }
        }
    }
    // Color scale.
    let sx = width - 60.0;
    for k in 0..=20 {
        let v = 1.0 - k as f64 / 10.0;
        svg.element(
            "rect",
            &format!(
                "class=\"scale\" x=\"{}\" y=\"{}\" width=\"14\" height=\"5\" fill=\"{}\"",
                num(sx),
                num(header_h + k as f64 * 5.0),
                diverging_color(v)
            ),
        );
    }
    svg.text(sx + 18.0, header_h + 5.0, "font-size=\"9\"", "+1");
    svg.text(sx + 18.0, header_h + 55.0, "font-size=\"9\"", "0");
    svg.text(sx + 18.0, header_h + 105.0, "font-size=\"9\"", "-1");
    let legend = vec![
        LegendEntry { channel: "color".into(), label: "-1".into(), value: diverging_color(-1.0) },
        LegendEntry { channel: "color".into(), label: "0".into(), value: diverging_color(0.0) },
        LegendEntry { channel: "color".into(), label: "+1".into(), value: diverging_color(1.0) },
    ];
    Ok(RenderedFigure {
        svg: svg.finish(),
        legend,
        annotation: None,
        explained_variance: None,
    })
}
