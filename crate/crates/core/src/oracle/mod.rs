//! Exact ground truth: BFS distance tables, exact forward-process
//! marginals and scores, and a Euclidean word solver for SL2(Z).

pub mod bfs;
pub mod euclid;
pub mod exact;

pub use bfs::{bfs_distances, DistanceSummary, DistanceTable, DEFAULT_STATE_BUDGET};
pub use euclid::{euclid_solve, euclid_solve_runs, euclid_solve_traced, word_matrix, EuclidTrace, Mat2, Run};
pub use exact::{exact_probabilities, exact_score, ExactScorer, ProbabilityTables, MAX_EXACT_STATES};
