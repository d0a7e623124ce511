//! Desk-scale benchmark problems: robust binary classification with the
//! correntropy loss under graph-guided fused lasso or overlapping group
//! penalties, on libsvm files or synthetic data.

mod builders;
mod data;
mod graph;
mod losses;

pub use builders::{
    build_fused_lasso_problem, build_lasso_problem, build_group_split_problem, fused_lasso_objective,
};
pub use data::{load_libsvm, synth_dataset, synth_regression, Dataset};
pub use graph::{build_graph, GraphMatrix, DEFAULT_GRAPH_THRESHOLD};
pub use losses::{
    correntropy_oracle, least_squares_oracle, CorrentropyLoss, LeastSquares, DEFAULT_SIGMA,
    DEFAULT_TAU,
};
