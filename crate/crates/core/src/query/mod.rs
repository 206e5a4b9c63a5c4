//! Query functions: uncertainty scoring, kmeans++ diversity and their
//! composition into a batch selector.

mod kmeans;
mod select;
mod uncertainty;

pub use kmeans::{kmeans_pp, squared_distance, sse, Clustering, MAX_LLOYD_ITERATIONS};
pub use select::{
    by_score_desc, diversity_select, select_batch, uniform_draw, QuerySpec, Selection, Uncertainty,
};
pub use uncertainty::{
    gradient_embedding, prediction_distance, score_ll, score_mge, score_tpd, GradientEmbedding,
    ScoredSample, TpdScores,
};
