//! PCA, exact t-SNE and Spearman rank correlation.

mod matrix;
pub mod pca;
pub mod spearman;
pub mod tsne;

pub use matrix::Matrix;
pub use pca::{pca, PcaResult};
pub use spearman::{correlation_table, spearman, CorrelationTable};
pub use tsne::{kl_divergence, kl_gradient, joint_probabilities, tsne, TsneOptions, TsneResult};
