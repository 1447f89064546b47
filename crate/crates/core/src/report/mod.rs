//! SVG figures, the end-to-end pipeline and its output files.

pub mod figures;
pub mod pipeline;
pub mod svg;

pub use figures::{
    diverging_color, render_ceg, render_heatmap, render_tsne, CegFigureSpec, LegendEntry, RenderedFigure,
    TsneFigureSpec, YAxis,
};
pub use pipeline::{analyze, run, Analysis, PipelineConfig, Stage};
