//! Diffusion-model pathfinding on Cayley graphs of groups and group actions.
//!
//! The forward process explores a graph by random walks from a goal set; a
//! residual MLP learns the reverse-process score with the score-entropy loss;
//! search runs the learned backward process (greedy, sampled or beam) with an
//! optional exact-distance ball around the goals. Exact BFS, probability and
//! score oracles check all of it on enumerable instances.

pub mod cli;
pub mod diffusion;
pub mod error;
pub mod group;
pub mod model;
pub mod oracle;
pub mod score;
pub mod search;
pub mod training;

pub use error::{Error, Result};
pub use group::{FamilyKind, GeneratorSet, GraphSpec, OrbitInvariant, State};
