use codeevo::ceg::{CegNode, EvolutionGraph};
use codeevo::embed::{CorrelationTable, TsneOptions};
use codeevo::features::canonical_names;
use codeevo::ingest::GroupKey;
use codeevo::report::{
    diverging_color, render_ceg, render_heatmap, render_tsne, CegFigureSpec, TsneFigureSpec, YAxis,
};

fn group(method: &str) -> GroupKey {
    GroupKey {
        benchmark: "BBOB".into(),
        method: method.into(),
        llm: "gpt-4o".into(),
    }
}

/// A run whose node `i` has parents `parents[i]`; features are a simple
/// deterministic function of the index.
fn graph(method: &str, run: &str, parents: &[&[usize]], fitness: &[Option<f64>]) -> EvolutionGraph {
    let n = parents.len();
    let ids: Vec<String> = (0..n).map(|i| format!("{method}-{run}-{i}")).collect();
    let mut freq = vec![0; n];
    let mut edges = Vec::new();
    for (c, ps) in parents.iter().enumerate() {
        for &p in *ps {
            freq[p] += 1;
            edges.push((ids[p].clone(), ids[c].clone()));
        }
    }
    let names = vec!["a".to_string(), "b".to_string(), "token_total".to_string()];
    let nodes = (0..n)
        .map(|i| {
            let x = i as f64;
            CegNode {
                sample_id: ids[i].clone(),
                evaluation_index: i as u64,
                fitness_norm: fitness[i],
                parent_frequency: freq[i],
                features_raw: vec![x, x * x, 10.0 * x + 3.0],
                features_std: vec![x - 2.0, (x * 1.7).sin(), (x * 0.3).cos()],
            }
        })
        .collect();
    EvolutionGraph {
        group_key: group(method),
        run_id: run.into(),
        feature_names: names,
        nodes,
        edges,
    }
}

fn count(svg: &str, needle: &str) -> usize {
    svg.matches(needle).count()
}

fn attr(tag: &str, name: &str) -> f64 {
    let key = format!(" {name}=\"");
    let start = tag.find(&key).unwrap() + key.len();
    let end = start + tag[start..].find('"').unwrap();
    tag[start..end].parse().unwrap()
}

fn circles(svg: &str) -> Vec<&str> {
    svg.split("<circle").skip(1).map(|s| &s[..s.find("/>").unwrap()]).collect()
}

fn ab() -> Vec<String> {
    vec!["a".into(), "b".into()]
}

#[test]
fn chain_draws_every_node_and_link() {
    let chain = graph("LLaMEA", "r0", &[&[], &[0], &[1], &[2], &[3]], &[Some(0.5); 5]);
    let fig = render_ceg(&[chain], &CegFigureSpec { pca_features: ab(), ..CegFigureSpec::default() }).unwrap();
    assert_eq!(count(&fig.svg, "class=\"node\""), 5);
    assert_eq!(count(&fig.svg, "class=\"edge\""), 4);
    let v = fig.explained_variance.unwrap();
    assert!(v > 0.0 && v <= 1.0);
    assert_eq!(count(&fig.svg, "class=\"variance\""), 1);
}

#[test]
fn random_search_has_no_edges() {
    let rs = graph("RandomSearch", "r0", &[&[], &[], &[], &[]], &[Some(0.1), Some(0.2), None, Some(0.9)]);
    let fig = render_ceg(&[rs], &CegFigureSpec { pca_features: ab(), ..CegFigureSpec::default() }).unwrap();
    assert_eq!(count(&fig.svg, "class=\"edge\""), 0);
    assert_eq!(count(&fig.svg, "class=\"node\""), 3);
    assert_eq!(count(&fig.svg, "class=\"node missing\""), 1);
}

#[test]
fn radius_grows_with_offspring() {
    let g = graph("EoH", "r0", &[&[], &[0], &[0], &[0]], &[Some(1.0); 4]);
    let spec = CegFigureSpec {
        y_axis: YAxis::TokenTotal,
        node_radius: 2.5,
        ..CegFigureSpec::default()
    };
    let fig = render_ceg(&[g], &spec).unwrap();
    let radii: Vec<f64> = circles(&fig.svg).iter().map(|c| attr(c, "r")).collect();
    assert_eq!(radii, [10.0, 2.5, 2.5, 2.5]);
    assert!(fig.annotation.is_none());
}

#[test]
fn token_axis_orders_nodes_by_token_total() {
    let g = graph("EoH", "r0", &[&[], &[0], &[1], &[1]], &[Some(1.0); 4]);
    let fig = render_ceg(&[g], &CegFigureSpec { y_axis: YAxis::TokenTotal, ..CegFigureSpec::default() }).unwrap();
    let cy: Vec<f64> = circles(&fig.svg).iter().map(|c| attr(c, "cy")).collect();
    // token_total rises with the index, and SVG y grows downwards
    assert!(cy.windows(2).all(|w| w[0] > w[1]), "{cy:?}");
}

#[test]
fn grid_has_one_panel_per_run() {
    let graphs = vec![
        graph("EoH", "r0", &[&[], &[0]], &[Some(0.1), Some(0.2)]),
        graph("EoH", "r1", &[&[], &[0]], &[Some(0.3), Some(0.4)]),
        graph("LLaMEA", "r0", &[&[], &[0]], &[Some(0.5), Some(0.6)]),
    ];
    let fig = render_ceg(&graphs, &CegFigureSpec { pca_features: ab(), ..CegFigureSpec::default() }).unwrap();
    assert_eq!(count(&fig.svg, "class=\"panel\""), 3);
    assert_eq!(fig.legend.iter().filter(|l| l.channel == "color").count(), 2);
}

fn tsne_spec() -> TsneFigureSpec {
    TsneFigureSpec {
        tsne: TsneOptions {
            perplexity: 2.0,
            seed: 1,
            iterations: 300,
        },
        ..TsneFigureSpec::default()
    }
}

fn data_attrs<'a>(svg: &'a str, name: &str) -> Vec<&'a str> {
    let key = format!("{name}=\"");
    svg.match_indices(&key)
        .map(|(i, _)| {
            let s = &svg[i + key.len()..];
            &s[..s.find('"').unwrap()]
        })
        .collect()
}

#[test]
fn tsne_encodes_method_by_color_and_run_by_shape() {
    let f = [Some(0.2), Some(0.4), Some(0.6), Some(0.8)];
    let graphs = vec![
        graph("EoH", "r0", &[&[], &[0], &[1], &[2]], &f),
        graph("EoH", "r1", &[&[], &[0], &[1], &[2]], &f),
        graph("LLaMEA", "r0", &[&[], &[0], &[1], &[2]], &f),
        graph("LLaMEA", "r1", &[&[], &[0], &[1], &[2]], &f),
    ];
    let fig = render_tsne(&graphs, &ab(), &tsne_spec()).unwrap();
    let mut colors = data_attrs(&fig.svg, "data-color");
    let mut shapes = data_attrs(&fig.svg, "data-shape");
    assert_eq!(colors.len(), 16);
    colors.sort_unstable();
    colors.dedup();
    shapes.sort_unstable();
    shapes.dedup();
    assert_eq!((colors.len(), shapes.len()), (2, 2));
}

#[test]
fn equal_fitness_gives_equal_glyphs() {
    let g = graph("EoH", "r0", &[&[], &[0], &[1], &[2], &[3], &[4], &[5]], &[Some(0.7); 7]);
    let fig = render_tsne(&[g], &ab(), &tsne_spec()).unwrap();
    let radii = data_attrs(&fig.svg, "data-r");
    assert_eq!(radii.len(), 7);
    assert!(radii.iter().all(|r| *r == radii[0]));
    assert_eq!(radii[0], "7.90");
}
#[test]
fn tsne_figure_is_deterministic() {
    let f = [Some(0.2), None, Some(0.6), Some(0.8), Some(0.1), Some(0.3), Some(0.5)];
    let graphs = vec![graph("EoH", "r0", &[&[], &[0], &[1], &[2], &[2], &[4], &[1]], &f)];
    let a = render_tsne(&graphs, &ab(), &tsne_spec()).unwrap();
    let b = render_tsne(&graphs, &ab(), &tsne_spec()).unwrap();
    assert_eq!(a.svg, b.svg);
}

fn table(cells: Vec<Vec<Option<f64>>>, features: Vec<String>) -> CorrelationTable {
    CorrelationTable {
        groups: (0..cells.len()).map(|i| group(&format!("m{i}"))).collect(),
        features,
        cells,
    }
}

#[test]
fn heatmap_cells_labels_and_colors() {
    let t = table(
        vec![vec![Some(1.0), Some(-1.0), None, Some(0.0)]],
        vec!["a".into(), "b".into(), "c".into(), "d".into()],
    );
    let svg = render_heatmap(&t).unwrap().svg;
    assert_eq!(count(&svg, "class=\"cell\""), 3);
    assert_eq!(count(&svg, "class=\"cell blank\""), 1);
    assert!(svg.contains(">1.00<") && svg.contains(">-1.00<") && svg.contains(">0.00<"));
    assert_eq!(diverging_color(1.0), "#b2182b");
    assert_eq!(diverging_color(-1.0), "#2166ac");
    assert!(svg.contains("data-row=\"0\" data-col=\"0\""));
    let first = svg.split("class=\"cell\"").nth(1).unwrap();
    assert!(first[..first.find("/>").unwrap()].contains("fill=\"#b2182b\""));
}

#[test]
fn heatmap_has_a_cell_per_feature() {
    let names: Vec<String> = canonical_names().into_iter().map(String::from).collect();
    let cells = vec![(0..28).map(|j| Some(j as f64 / 14.0 - 1.0)).collect()];
    let svg = render_heatmap(&table(cells, names)).unwrap().svg;
    assert_eq!(count(&svg, "class=\"cell\""), 28);
    assert_eq!(count(&svg, "class=\"cell-label\""), 28);
}
